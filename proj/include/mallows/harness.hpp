/**
 * @brief Experiment orchestration: LIS laws of large numbers across regimes,
 * and the small verifications (exact stationarity, path sandwich, local
 * measures, displacement tails).
 *
 * Replicas fan out over a worker pool. Replica r of size n uses the seed
 * derive_seed(master_seed, n, r); even replicas start at the identity and odd
 * ones at the anti-diagonal, and results are merged by (n, r), never by
 * completion order, so output is byte-identical for any thread count.
 */
#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "csv.hpp"
#include "density.hpp"
#include "models.hpp"
#include "paths.hpp"
#include "permutation.hpp"
#include "rng.hpp"
#include "samplers.hpp"
#include "stats.hpp"

namespace mallows {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class Regime { L1Theta, L1Intermediate, L2Theta, L2Intermediate, Uniform };

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::L1Theta: return "L1_theta";
    case Regime::L1Intermediate: return "L1_intermediate";
    case Regime::L2Theta: return "L2_theta";
    case Regime::L2Intermediate: return "L2_intermediate";
    case Regime::Uniform: return "uniform";
  }
  return "?";
}

inline Regime parse_regime(std::string_view s) {
  for (Regime r : {Regime::L1Theta, Regime::L1Intermediate, Regime::L2Theta, Regime::L2Intermediate, Regime::Uniform})
    if (s == to_string(r)) return r;
  throw std::invalid_argument("unknown regime: " + std::string(s));
}

inline ModelKind regime_model(Regime r) {
  return (r == Regime::L2Theta || r == Regime::L2Intermediate) ? ModelKind::L2 : ModelKind::L1;
}

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  Regime regime = Regime::Uniform;
  std::vector<int> n_list;
  double theta = 0.0;   ///< theta regimes: beta = theta / n (L1) or theta / n^2 (L2)
  double beta_c = 1.0;  ///< intermediate regimes: beta = beta_c * n^(-beta_p)
  double beta_p = 0.0;
  int replicas = 1;
  std::optional<std::uint64_t> burn_in;   ///< steps; default burn_in_factor * n
  double burn_in_factor = 50.0;
  std::optional<std::uint64_t> thin;      ///< steps; default max(1, n / 10)
  std::uint64_t samples = 1;              ///< observations per replica
  std::uint64_t master_seed = 0;
  int threads = 0;                        ///< 0: hardware concurrency
  int density_grid = 1024;

  double beta_for(int n) const {
    switch (regime) {
      case Regime::L1Theta: return theta / n;
      case Regime::L2Theta: return theta / (static_cast<double>(n) * n);
      case Regime::L1Intermediate:
      case Regime::L2Intermediate: return beta_c * std::pow(static_cast<double>(n), -beta_p);
      case Regime::Uniform: return 0.0;
    }
    return 0.0;
  }

  std::uint64_t burn_in_for(int n) const {
    return burn_in ? *burn_in : static_cast<std::uint64_t>(std::llround(burn_in_factor * n));
  }
  std::uint64_t thin_for(int n) const {
    return thin ? *thin : std::max<std::uint64_t>(1, static_cast<std::uint64_t>(n) / 10);
  }

  void validate() const {
    if (n_list.empty()) throw ConfigError("n_list must name at least one size");
    for (int n : n_list)
      if (n < 1) throw ConfigError("n_list entries must be positive");
    if (replicas < 1) throw ConfigError("replicas must be positive");
    if (samples < 1) throw ConfigError("samples must be positive");
    if (thin && *thin < 1) throw ConfigError("thin must be positive");
    if (!(burn_in_factor >= 0.0)) throw ConfigError("burn_in_factor must be nonnegative");
    if (density_grid < 16) throw ConfigError("density_grid must be at least 16");
    switch (regime) {
      case Regime::L1Theta:
      case Regime::L2Theta:
        if (!(theta > 0.0)) throw ConfigError(std::string(to_string(regime)) + " needs theta > 0");
        break;
      case Regime::L1Intermediate:
        if (!(beta_c > 0.0)) throw ConfigError("beta_c must be positive");
        if (!(beta_p > 0.0 && beta_p < 1.0))
          throw ConfigError("L1_intermediate needs 0 < beta_p < 1 so that beta -> 0 and n beta -> infinity");
        break;
      case Regime::L2Intermediate:
        if (!(beta_c > 0.0)) throw ConfigError("beta_c must be positive");
        if (!(beta_p > 0.0 && beta_p < 2.0))
          throw ConfigError("L2_intermediate needs 0 < beta_p < 2 so that beta -> 0 and n^2 beta -> infinity");
        break;
      case Regime::Uniform: break;
    }
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) throw ConfigError("bad value for " + key + ": '" + text + "'");
  return value;
}

}  // namespace detail

/// Flat "key = value" text; '#' starts a comment. n_list is comma or space separated.
inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  bool have_regime = false;
  std::string line;
  int lineno = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    if (seen[key]++) throw ConfigError("duplicate key " + key);
    if (key == "regime") {
      try {
        cfg.regime = parse_regime(value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      have_regime = true;
    } else if (key == "n_list") {
      std::string spaced = value;
      std::ranges::replace(spaced, ',', ' ');
      std::istringstream items(spaced);
      std::string item;
      while (items >> item) cfg.n_list.push_back(detail::parse_number<int>(key, item));
    } else if (key == "theta") {
      cfg.theta = detail::parse_number<double>(key, value);
    } else if (key == "beta_c") {
      cfg.beta_c = detail::parse_number<double>(key, value);
    } else if (key == "beta_p") {
      cfg.beta_p = detail::parse_number<double>(key, value);
    } else if (key == "replicas") {
      cfg.replicas = detail::parse_number<int>(key, value);
    } else if (key == "burn_in") {
      cfg.burn_in = detail::parse_number<std::uint64_t>(key, value);
    } else if (key == "burn_in_factor") {
      cfg.burn_in_factor = detail::parse_number<double>(key, value);
    } else if (key == "thin") {
      cfg.thin = detail::parse_number<std::uint64_t>(key, value);
    } else if (key == "samples") {
      cfg.samples = detail::parse_number<std::uint64_t>(key, value);
    } else if (key == "master_seed") {
      cfg.master_seed = detail::parse_number<std::uint64_t>(key, value);
    } else if (key == "threads") {
      cfg.threads = detail::parse_number<int>(key, value);
    } else if (key == "density_grid") {
      cfg.density_grid = detail::parse_number<int>(key, value);
    } else {
      throw ConfigError("unknown key " + key);
    }
  }
  if (!have_regime) throw ConfigError("config must set regime");
  const bool theta_regime = cfg.regime == Regime::L1Theta || cfg.regime == Regime::L2Theta;
  const bool rule_regime = cfg.regime == Regime::L1Intermediate || cfg.regime == Regime::L2Intermediate;
  if (theta_regime && (seen.contains("beta_c") || seen.contains("beta_p")))
    throw ConfigError("theta regimes take theta, not beta_c/beta_p");
  if (rule_regime && seen.contains("theta")) throw ConfigError("intermediate regimes take beta_c/beta_p, not theta");
  if (rule_regime && !seen.contains("beta_p"))
    cfg.beta_p = cfg.regime == Regime::L1Intermediate ? 0.5 : 1.0;
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse_config(in);
}

// ---------------------------------------------------------------------------
// LLN experiments
// ---------------------------------------------------------------------------

/// sqrt(n) (uniform and theta regimes), n sqrt(beta) (L1 intermediate), n beta^(1/4) (L2 intermediate).
inline double lis_normalization(Regime r, int n, double beta) {
  switch (r) {
    case Regime::L1Intermediate: return n * std::sqrt(beta);
    case Regime::L2Intermediate: return n * std::pow(beta, 0.25);
    default: return std::sqrt(static_cast<double>(n));
  }
}

/// The limit of mean LIS / normalization.
inline double target_constant(const ExperimentConfig& cfg) {
  switch (cfg.regime) {
    case Regime::Uniform: return 2.0;
    case Regime::L1Intermediate: return std::numbers::sqrt2;
    case Regime::L2Intermediate: return 2.0 / std::pow(std::numbers::pi, 0.25);
    case Regime::L1Theta:
    case Regime::L2Theta: {
      DensityOptions opt;
      opt.m = cfg.density_grid;
      return lln_constant(solve_density(regime_model(cfg.regime), cfg.theta, opt));
    }
  }
  return 0.0;
}

struct ReplicaResult {
  int n = 0;
  int replica = 0;
  std::uint64_t seed = 0;
  bool anti_diagonal_start = false;
  double mean_lis = 0.0;
};

struct ResultRow {
  int n = 0;
  double beta = 0.0;
  Regime regime = Regime::Uniform;
  double mean_lis = 0.0;
  double stderr_lis = 0.0;
  double normalization = 1.0;
  double ratio = 0.0;
  double target_constant = 0.0;
  int replicas = 0;
  double two_start_z = 0.0;  ///< |identity-start mean - anti-diagonal-start mean| / combined stderr
  bool flagged = false;      ///< two-start disagreement beyond kTwoStartZ
};

inline constexpr double kTwoStartZ = 3.0;

/// Runs `jobs` tasks on `threads` workers; task k writes only its own slot.
inline void parallel_for(std::size_t jobs, int threads, const std::function<void(std::size_t)>& task) {
  unsigned workers = threads > 0 ? static_cast<unsigned>(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, jobs));
  if (workers <= 1) {
    for (std::size_t k = 0; k < jobs; ++k) task(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t k; !failed && (k = next++) < jobs;) {
        try {
          task(k);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline ReplicaResult run_replica(const ExperimentConfig& cfg, int n, int replica) {
  ReplicaResult r;
  r.n = n;
  r.replica = replica;
  r.seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(replica));
  double total = 0.0;
  if (cfg.regime == Regime::Uniform) {
    Rng rng(r.seed);
    for (std::uint64_t s = 0; s < cfg.samples; ++s) total += static_cast<double>(lis(uniform_perm(n, rng)));
  } else {
    r.anti_diagonal_start = replica % 2 == 1;
    const ModelParams params{n, cfg.beta_for(n), regime_model(cfg.regime)};
    ChainState state =
        ChainState::start(params, r.anti_diagonal_start ? Permutation::reversal(n) : Permutation::identity(n), r.seed);
    const ChainSchedule schedule{cfg.burn_in_for(n), cfg.samples, cfg.thin_for(n)};
    for (std::size_t v : run_chain(state, schedule, [](const ChainState& s) { return lis(s.current); }))
      total += static_cast<double>(v);
  }
  r.mean_lis = total / static_cast<double>(cfg.samples);
  return r;
}

struct ExperimentOutput {
  std::vector<ResultRow> rows;
  std::vector<ReplicaResult> replicas;  ///< ordered by (n, replica)
};

using ProgressFn = std::function<void(const ReplicaResult&)>;

inline ExperimentOutput run_lln_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {}) {
  cfg.validate();
  const double target = target_constant(cfg);
  const std::size_t reps = static_cast<std::size_t>(cfg.replicas);
  ExperimentOutput out;
  out.replicas.resize(cfg.n_list.size() * reps);
  parallel_for(out.replicas.size(), cfg.threads, [&](std::size_t k) {
    out.replicas[k] = run_replica(cfg, cfg.n_list[k / reps], static_cast<int>(k % reps));
    if (progress) progress(out.replicas[k]);
  });

  for (std::size_t ni = 0; ni < cfg.n_list.size(); ++ni) {
    const int n = cfg.n_list[ni];
    std::vector<double> all, from_id, from_anti;
    for (std::size_t r = 0; r < reps; ++r) {
      const ReplicaResult& rr = out.replicas[ni * reps + r];
      all.push_back(rr.mean_lis);
      (rr.anti_diagonal_start ? from_anti : from_id).push_back(rr.mean_lis);
    }
    const MeanStderr s = summarize(all);
    ResultRow row;
    row.n = n;
    row.beta = cfg.beta_for(n);
    row.regime = cfg.regime;
    row.mean_lis = s.mean;
    row.stderr_lis = s.std_error;
    row.normalization = lis_normalization(cfg.regime, n, row.beta);
    row.ratio = row.mean_lis / row.normalization;
    row.target_constant = target;
    row.replicas = cfg.replicas;
    if (from_id.size() >= 2 && from_anti.size() >= 2) {
      const MeanStderr a = summarize(from_id), b = summarize(from_anti);
      const double se = std::hypot(a.std_error, b.std_error);
      const double gap = std::abs(a.mean - b.mean);
      row.two_start_z = se > 0.0 ? gap / se : (gap > 0.0 ? INFINITY : 0.0);
      row.flagged = row.two_start_z > kTwoStartZ;
    }
    out.rows.push_back(row);
  }
  return out;
}

inline void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "n,beta,regime,mean_lis,stderr_lis,normalization,ratio,target_constant,replicas,two_start_z,flagged\n";
  for (const ResultRow& r : rows)
    out << r.n << ',' << format_real(r.beta) << ',' << to_string(r.regime) << ',' << format_real(r.mean_lis) << ','
        << format_real(r.stderr_lis) << ',' << format_real(r.normalization) << ',' << format_real(r.ratio) << ','
        << format_real(r.target_constant) << ',' << r.replicas << ',' << format_real(r.two_start_z) << ','
        << (r.flagged ? 1 : 0) << '\n';
}

inline void write_replicas_csv(std::ostream& out, const std::vector<ReplicaResult>& reps) {
  out << "n,replica,seed,start,mean_lis\n";
  for (const ReplicaResult& r : reps)
    out << r.n << ',' << r.replica << ',' << r.seed << ',' << (r.anti_diagonal_start ? "anti_diagonal" : "identity") << ','
        << format_real(r.mean_lis) << '\n';
}

// ---------------------------------------------------------------------------
// Exact stationarity
// ---------------------------------------------------------------------------

enum class KernelKind { HitAndRun, Resample };

struct StationarityOptions {
  ModelParams params{4, 0.3, ModelKind::L1};
  KernelKind kernel = KernelKind::HitAndRun;
  ResampleSpec spec;       ///< used by the resampling kernel
  int steps = 1;           ///< kernel applications per trial
  std::uint64_t trials = 1000000;
  std::uint64_t seed = 1;
  std::optional<double> threshold;  ///< default: 0.01 + 3 * expected sampling TV
};

inline constexpr int kMaxStationaritySize = 5;

struct StationarityReport {
  std::uint64_t trials = 0;
  double tv = 0.0;
  double noise_tv = 0.0;  ///< expected TV of an exact sampler at this many trials
  double threshold = 0.0;
  std::optional<bool> pass;  ///< empty when trials == 0
  std::vector<double> exact, empirical;
};

/// Expected TV between a distribution and its empirical law over `trials` draws,
/// (1/2) sum_k sqrt(2 p_k (1 - p_k) / (pi trials)) to leading order.
inline double expected_sampling_tv(std::span<const double> probs, std::uint64_t trials) {
  if (trials == 0) return 0.0;
  double s = 0.0;
  for (double p : probs) s += std::sqrt(2.0 * p * (1.0 - p) / (std::numbers::pi * static_cast<double>(trials)));
  return 0.5 * s;
}

/// Starts each trial from an exact draw, applies `steps` kernel steps, and
/// compares the law of the result with the exact distribution.
inline StationarityReport verify_stationarity(const StationarityOptions& opt) {
  opt.params.validate();
  if (opt.params.n > kMaxStationaritySize)
    throw std::length_error("verify_stationarity: n above the enumeration guard of " + std::to_string(kMaxStationaritySize));
  if (opt.steps < 0) throw std::invalid_argument("verify_stationarity: steps must be nonnegative");
  if (opt.kernel == KernelKind::Resample) {
    if (opt.params.kind != ModelKind::L2) throw std::invalid_argument("verify_stationarity: resampling needs the L2 model");
    opt.spec.validate(opt.params.n);
  }
  const ExactDistribution dist = exact_distribution(opt.params);
  StationarityReport rep;
  rep.trials = opt.trials;
  rep.exact = dist.probs;
  rep.empirical.assign(dist.size(), 0.0);
  if (opt.trials == 0) return rep;

  std::vector<std::uint64_t> counts(dist.size(), 0);
  ChainState state = ChainState::start(opt.params, Permutation::identity(opt.params.n), opt.seed);
  for (std::uint64_t t = 0; t < opt.trials; ++t) {
    state.current = exact_sample(dist, state.rng);
    for (int k = 0; k < opt.steps; ++k) {
      if (opt.kernel == KernelKind::HitAndRun)
        step(state);
      else
        state.current = resample_l2(state.current, opt.spec, opt.params, state.rng);
    }
    ++counts[dist.index_of(state.current)];
  }
  for (std::size_t k = 0; k < counts.size(); ++k)
    rep.empirical[k] = static_cast<double>(counts[k]) / static_cast<double>(opt.trials);
  rep.tv = tv_distance(rep.empirical, rep.exact);
  rep.noise_tv = expected_sampling_tv(rep.exact, opt.trials);
  rep.threshold = opt.threshold ? *opt.threshold : 0.01 + 3.0 * rep.noise_tv;
  rep.pass = rep.tv < rep.threshold;
  return rep;
}

// ---------------------------------------------------------------------------
// Detailed balance of the resampling kernel
// ---------------------------------------------------------------------------

struct DetailedBalanceRow {
  Permutation tau, tau_prime;
  double forward = 0.0;   ///< estimate of K(tau, tau')
  double backward = 0.0;  ///< estimate of K(tau', tau)
  double log_ratio = 0.0;
  double expected_log_ratio = 0.0;
  double log_ratio_se = 0.0;
  bool pass = false;
};

/// log of P(tau') / P(tau) under the L2 model, which detailed balance equates
/// with log K(tau, tau') / K(tau', tau).
inline double l2_log_weight_ratio(const Permutation& tau, const Permutation& tau_prime, double beta) {
  return -beta * (energy(ModelKind::L2, tau_prime) - energy(ModelKind::L2, tau));
}

inline DetailedBalanceRow detailed_balance_check(const Permutation& tau, const Permutation& tau_prime,
                                                 const ResampleSpec& spec, double beta, std::uint64_t trials,
                                                 std::uint64_t seed) {
  const ModelParams params{tau.size(), beta, ModelKind::L2};
  Rng rng(seed);
  std::uint64_t fwd = 0, bwd = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    if (resample_l2(tau, spec, params, rng) == tau_prime) ++fwd;
    if (resample_l2(tau_prime, spec, params, rng) == tau) ++bwd;
  }
  DetailedBalanceRow row{tau, tau_prime};
  row.forward = static_cast<double>(fwd) / static_cast<double>(trials);
  row.backward = static_cast<double>(bwd) / static_cast<double>(trials);
  row.expected_log_ratio = l2_log_weight_ratio(tau, tau_prime, beta);
  if (fwd == 0 || bwd == 0) return row;
  row.log_ratio = std::log(row.forward / row.backward);
  // delta method: var log p_hat ~ (1 - p) / (trials p)
  row.log_ratio_se = std::sqrt((1.0 - row.forward) / static_cast<double>(fwd) + (1.0 - row.backward) / static_cast<double>(bwd));
  row.pass = std::abs(row.log_ratio - row.expected_log_ratio) <= 3.0 * row.log_ratio_se;
  return row;
}

// ---------------------------------------------------------------------------
// Path sandwich
// ---------------------------------------------------------------------------

struct PathsOptions {
  int trials = 1000;
  int max_n = 60;
  int max_t = 3;
  int max_k0 = 2;
  std::uint64_t seed = 1;
};

struct PathsInstance {
  Permutation perm;
  PathSpec spec;
  Embedding embedding;
};

struct PathsViolation {
  std::uint64_t seed = 0;  ///< regenerate with make_paths_instance(seed, options)
  std::string what;
};

struct PathsReport {
  int trials = 0;
  std::uint64_t paths_checked = 0;
  std::vector<PathsViolation> violations;
  bool pass() const { return violations.empty(); }
};

/// Random instance: n in [1, max_n], T1, T2 in [2, max_t], K0 in [1, max_k0];
/// corner fractions on a grid of twelfths or arbitrary reals (alternately), and
/// an embedding kappa + alpha [0, 1] that stays inside [0, n].
inline PathsInstance make_paths_instance(std::uint64_t seed, const PathsOptions& opt) {
  Rng rng(seed);
  const int n = 1 + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(opt.max_n)));
  const bool rational = (seed & 1) == 0;
  auto fraction_pair = [&] {
    double lo, hi;
    do {
      if (rational) {
        lo = static_cast<double>(uniform_below(rng, 13)) / 12.0;
        hi = static_cast<double>(uniform_below(rng, 13)) / 12.0;
      } else {
        lo = uniform_unit(rng);
        hi = uniform_unit(rng);
      }
      if (lo > hi) std::swap(lo, hi);
    } while (!(lo < hi));
    return std::pair{lo, hi};
  };
  PathSpec spec;
  std::tie(spec.a1, spec.a2) = fraction_pair();
  std::tie(spec.b1, spec.b2) = fraction_pair();
  spec.t1 = 2 + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(opt.max_t - 1)));
  spec.t2 = 2 + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(opt.max_t - 1)));
  spec.k0 = 1 + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(opt.max_k0)));
  Embedding e;
  if (rational) {
    e.kappa = static_cast<double>(uniform_below(rng, static_cast<std::uint64_t>(n / 2 + 1)));
    const double room = n - e.kappa;
    e.alpha = std::max(1.0, std::floor(room * (0.5 + 0.5 * uniform_unit(rng))));
    e.gamma = std::max(1.0, std::floor(room * (0.5 + 0.5 * uniform_unit(rng))));
  } else {
    e.kappa = 0.5 * n * uniform_unit(rng);
    const double room = n - e.kappa;
    e.alpha = room * (0.25 + 0.75 * uniform_unit(rng));
    e.gamma = room * (0.25 + 0.75 * uniform_unit(rng));
  }
  return {uniform_perm(n, rng), spec, e};
}

/// The exact LIS of the big box, by the exhaustive oracle when small enough.
inline std::size_t oracle_box_lis(const PathsInstance& inst) {
  const auto& s = inst.spec;
  const auto& e = inst.embedding;
  const PartialBijection restricted = restrict_to(
      inst.perm, Box{Interval::half_open(e.px(s.a1), e.px(s.a2)), Interval::half_open(e.py(s.b1), e.py(s.b2))});
  return restricted.size() <= kBruteForceLisLimit ? lis_bruteforce(restricted) : lis(restricted);
}

inline PathsReport verify_paths(const PathsOptions& opt) {
  if (opt.trials < 0 || opt.max_n < 1 || opt.max_t < 2 || opt.max_k0 < 1)
    throw std::invalid_argument("verify_paths: bad options");
  PathsReport rep;
  rep.trials = opt.trials;
  for (int t = 0; t < opt.trials; ++t) {
    const std::uint64_t seed = derive_seed(opt.seed, 0, static_cast<std::uint64_t>(t));
    const PathsInstance inst = make_paths_instance(seed, opt);
    const std::size_t exact = oracle_box_lis(inst);
    std::size_t best_upper = 0;
    std::string problem;
    for_each_refined_path(inst.spec, [&](const RefinedPath& path) {
      ++rep.paths_checked;
      const std::size_t lower = lower_bound_lis(inst.perm, path, inst.spec, inst.embedding);
      if (lower > exact && problem.empty())
        problem = "lower bound " + std::to_string(lower) + " exceeds LIS " + std::to_string(exact);
      best_upper = std::max(best_upper, closed_path_sum(inst.perm, path, inst.spec, inst.embedding));
    });
    if (problem.empty() && best_upper < exact)
      problem = "upper bound " + std::to_string(best_upper) + " below LIS " + std::to_string(exact);
    if (!problem.empty()) rep.violations.push_back({seed, problem});
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Chains for local statistics
// ---------------------------------------------------------------------------

/// Window width for L2 resampling sweeps: 10 / sqrt(beta) standard deviations of
/// displacement, so the excluded displacements carry mass about exp(-100).
inline int l2_sweep_width(int n, double beta) {
  return std::clamp(static_cast<int>(std::ceil(10.0 / std::sqrt(beta))), 2, std::max(2, n));
}

/// One unit of chain time: a hit-and-run step for L1, a resampling sweep for L2.
inline void local_step(ChainState& state) {
  if (state.params.kind == ModelKind::L1)
    har_step_l1(state);
  else
    resample_sweep_l2(state, l2_sweep_width(state.params.n, state.params.beta));
}

// ---------------------------------------------------------------------------
// Local measure convergence
// ---------------------------------------------------------------------------

struct LocalMeasureOptions {
  ModelParams params{4000, 0.05, ModelKind::L1};
  int t0 = 0;  ///< 0: n / 2
  double k = 2.0;
  int fn_count = 20;
  int replicas = 50;
  std::uint64_t burn_in = 200;
  std::uint64_t seed = 1;
  int threads = 0;
};

struct LocalMeasureReport {
  int t0 = 0;
  double mean_sup = 0.0;     ///< replica average of sup_f |int f d mu_n - int f d mu|
  double stderr_sup = 0.0;
  double sup_of_mean = 0.0;  ///< sup_f |replica average of int f d mu_n - int f d mu|
  std::vector<double> reference;  ///< int f d mu, one per function (the first is f = 0)
};

/// Checks r beta^{-1} + 1 <= t0 <= n - r beta^{-1} with r = K and the model's local scale.
inline bool in_bulk(int n, int t0, double k, double beta, ModelKind kind) {
  const double reach = k / local_scale(kind, beta);
  return t0 >= reach + 1.0 && t0 <= n - reach;
}

inline LocalMeasureReport verify_local_measure(const LocalMeasureOptions& opt) {
  opt.params.validate();
  LocalMeasureReport rep;
  rep.t0 = opt.t0 > 0 ? opt.t0 : std::max(1, opt.params.n / 2);
  if (opt.params.n > 1 && !in_bulk(opt.params.n, rep.t0, opt.k, opt.params.beta, opt.params.kind))
    throw std::out_of_range("verify_local_measure: t0 is not in the bulk");
  if (opt.replicas < 1) throw std::invalid_argument("verify_local_measure: replicas must be positive");

  Rng fn_rng(derive_seed(opt.seed, 1, 0));
  std::vector<TestFunction> fns{TestFunction::zero(opt.k)};
  for (auto& f : bk_functions(opt.k, opt.fn_count, fn_rng)) fns.push_back(std::move(f));
  for (const auto& f : fns) rep.reference.push_back(reference_integral(f, opt.params.kind));

  std::vector<std::vector<double>> integrals(static_cast<std::size_t>(opt.replicas));
  parallel_for(integrals.size(), opt.threads, [&](std::size_t r) {
    ChainState state = ChainState::at_identity(opt.params, derive_seed(opt.seed, 2, r));
    for (std::uint64_t s = 0; s < opt.burn_in; ++s) local_step(state);
    const EmpiricalMeasure2D mu = mu_local(state.current, rep.t0, opt.params.beta, opt.params.kind);
    for (const auto& f : fns) integrals[r].push_back(integrate(mu, f));
  });

  std::vector<double> sups;
  std::vector<double> means(fns.size(), 0.0);
  for (const auto& row : integrals) {
    double sup = 0.0;
    for (std::size_t j = 0; j < fns.size(); ++j) {
      sup = std::max(sup, std::abs(row[j] - rep.reference[j]));
      means[j] += row[j] / static_cast<double>(integrals.size());
    }
    sups.push_back(sup);
  }
  const MeanStderr s = summarize(sups);
  rep.mean_sup = s.mean;
  rep.stderr_sup = s.std_error;
  for (std::size_t j = 0; j < fns.size(); ++j) rep.sup_of_mean = std::max(rep.sup_of_mean, std::abs(means[j] - rep.reference[j]));
  return rep;
}

// ---------------------------------------------------------------------------
// Displacement tails
// ---------------------------------------------------------------------------

struct DisplacementOptions {
  ModelParams params{2000, 0.02, ModelKind::L1};
  int index = 0;  ///< 0: n / 2
  int replicas = 20;
  std::uint64_t burn_in = 200;
  std::uint64_t samples = 100;  ///< per replica
  std::uint64_t thin = 10;
  std::vector<double> u_multiples{4.0, 6.0, 8.0};  ///< u = multiple * beta^-1 (L1) or beta^-1/2 (L2)
  std::uint64_t seed = 1;
  int threads = 0;
};

struct DisplacementRow {
  std::size_t u = 0;
  double tail = 0.0;
  double std_error = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct DisplacementReport {
  int index = 0;
  DisplacementTail tail;
  double mean_count = 0.0;
  std::vector<DisplacementRow> rows;
  bool pass() const {
    return std::ranges::all_of(rows, [](const DisplacementRow& r) { return r.pass; });
  }
};

inline DisplacementReport verify_displacement(const DisplacementOptions& opt) {
  opt.params.validate();
  if (opt.replicas < 1 || opt.samples < 1 || opt.thin < 1) throw std::invalid_argument("verify_displacement: bad options");
  DisplacementReport rep;
  rep.index = opt.index > 0 ? opt.index : std::max(1, opt.params.n / 2);
  if (rep.index > opt.params.n) throw std::out_of_range("verify_displacement: index outside [1, n]");

  std::vector<std::vector<Permutation>> per_replica(static_cast<std::size_t>(opt.replicas));
  parallel_for(per_replica.size(), opt.threads, [&](std::size_t r) {
    ChainState state = ChainState::at_identity(opt.params, derive_seed(opt.seed, 3, r));
    for (std::uint64_t s = 0; s < opt.burn_in; ++s) local_step(state);
    for (std::uint64_t s = 0; s < opt.samples; ++s) {
      for (std::uint64_t t = 0; t < opt.thin; ++t) local_step(state);
      per_replica[r].push_back(state.current);
    }
  });
  std::vector<Permutation> all;
  for (auto& v : per_replica)
    for (auto& p : v) all.push_back(std::move(p));
  rep.tail = displacement_tail(all, rep.index);
  double total = 0.0;
  for (const auto& p : all) total += displacement_count(p, rep.index);
  rep.mean_count = total / static_cast<double>(all.size());

  const double unit = opt.params.kind == ModelKind::L1 ? 1.0 / opt.params.beta : 1.0 / std::sqrt(opt.params.beta);
  for (double mult : opt.u_multiples) {
    DisplacementRow row;
    row.u = static_cast<std::size_t>(std::ceil(mult * unit));
    row.tail = rep.tail.at(row.u);
    row.std_error = rep.tail.standard_error(row.u);
    row.bound = displacement_tail_bound(static_cast<double>(row.u));
    row.pass = row.tail <= row.bound + 3.0 * row.std_error;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace mallows
