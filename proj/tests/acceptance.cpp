// Acceptance checks. Usage: acceptance N (1..11), or no argument for all of them.
// Prints one "criterion N: PASS|FAIL ..." line per criterion; exit status 1 if any failed.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mallows/harness.hpp"

using namespace mallows;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) { return format_real(v); }

Verdict lis_correctness() {
  std::uint64_t cases = 0;
  for (int n = 1; n <= 7; ++n) {
    std::vector<int> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), 1);
    do {
      const Permutation p(v);
      if (lis(p) != lis_bruteforce(p)) return {false, "mismatch at " + to_string(p)};
      ++cases;
    } while (std::ranges::next_permutation(v).found);
  }
  Rng rng(1);
  for (int t = 0; t < 10000; ++t) {
    const Permutation p = uniform_perm(1 + static_cast<int>(uniform_below(rng, 200)), rng);
    const std::size_t oracle = p.size() <= static_cast<int>(kBruteForceLisLimit) ? lis_bruteforce(p) : lis_quadratic(p.one_line());
    if (lis(p) != oracle) return {false, "mismatch at " + to_string(p)};
    ++cases;
  }
  return {true, std::to_string(cases) + " permutations agree"};
}

Verdict hit_and_run_stationarity() {
  Verdict v{true, ""};
  for (ModelKind kind : {ModelKind::L1, ModelKind::L2})
    for (double beta : {0.1, 0.5})
      for (int k : {1, 5}) {
        StationarityOptions opt;
        opt.params = {5, beta, kind};
        opt.steps = k;
        opt.trials = 1000000;
        opt.seed = derive_seed(2, static_cast<std::uint64_t>(beta * 10), static_cast<std::uint64_t>(k));
        opt.threshold = 0.02;
        const auto rep = verify_stationarity(opt);
        v.pass = v.pass && *rep.pass;
        v.detail += std::string(to_string(kind)) + "/b=" + fmt(beta) + "/k=" + std::to_string(k) + " tv=" + fmt(rep.tv) + " ";
      }
  return v;
}

Verdict resampling_kernel() {
  const ResampleSpec spec{{2, 3, 4}, {2, 3, 4}, 1.0};
  StationarityOptions opt;
  opt.params = {4, 0.3, ModelKind::L2};
  opt.kernel = KernelKind::Resample;
  opt.spec = spec;
  opt.trials = 1000000;
  opt.seed = 3;
  opt.threshold = 0.02;
  const auto rep = verify_stationarity(opt);
  Verdict v{*rep.pass, "tv=" + fmt(rep.tv)};
  const std::vector<std::pair<Permutation, Permutation>> pairs{
      {Permutation({1, 2, 3, 4}), Permutation({1, 3, 2, 4})}, {Permutation({1, 2, 3, 4}), Permutation({1, 4, 3, 2})},
      {Permutation({1, 2, 4, 3}), Permutation({1, 3, 4, 2})}, {Permutation({2, 1, 3, 4}), Permutation({2, 1, 4, 3})},
      {Permutation({1, 2, 3, 4}), Permutation({1, 4, 2, 3})}};
  std::uint64_t seed = 30;
  for (const auto& [tau, tau_prime] : pairs) {
    const auto row = detailed_balance_check(tau, tau_prime, spec, 0.3, 1000000, ++seed);
    v.pass = v.pass && row.pass;
    v.detail += " [" + to_string(tau) + "|" + to_string(tau_prime) + "] log-ratio " + fmt(row.log_ratio) + " vs " +
                fmt(row.expected_log_ratio) + " (se " + fmt(row.log_ratio_se) + ")";
  }
  return v;
}

std::string describe(const std::vector<ResultRow>& rows) {
  std::string s;
  for (const auto& r : rows)
    s += "n=" + std::to_string(r.n) + " ratio=" + fmt(r.ratio) + "+-" + fmt(r.stderr_lis / r.normalization) +
         (r.flagged ? " (two-start flag z=" + fmt(r.two_start_z) + ")" : "") + "; ";
  return s;
}

bool approach_is_monotone(const std::vector<ResultRow>& rows, double target) {
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (std::abs(rows[k].ratio - target) > std::abs(rows[k - 1].ratio - target)) return false;
  return true;
}

Verdict intermediate_regime(Regime regime, double lo, double hi, std::uint64_t burn_in_factor) {
  ExperimentConfig cfg;
  cfg.regime = regime;
  cfg.n_list = {1000, 2000, 4000};
  cfg.beta_p = regime == Regime::L1Intermediate ? 0.5 : 1.0;
  cfg.replicas = 50;
  cfg.burn_in_factor = static_cast<double>(burn_in_factor);
  cfg.samples = 10;
  cfg.master_seed = regime == Regime::L1Intermediate ? 4 : 5;
  const auto out = run_lln_experiment(cfg);
  const double target = out.rows.front().target_constant;
  const double last = out.rows.back().ratio;
  const bool in_window = last >= lo && last <= hi;
  const bool monotone = approach_is_monotone(out.rows, target);
  const bool mixed = std::ranges::none_of(out.rows, [](const ResultRow& r) { return r.flagged; });
  return {in_window && monotone && mixed, describe(out.rows) + "target " + fmt(target) + ", window [" + fmt(lo) + ", " +
                                              fmt(hi) + "] " + (in_window ? "hit" : "missed") + ", approach " +
                                              (monotone ? "monotone" : "not monotone") +
                                              (mixed ? "" : ", two-start diagnostic failed")};
}

Verdict theta_regimes() {
  Verdict v{true, ""};
  for (Regime regime : {Regime::L1Theta, Regime::L2Theta})
    for (double theta : {1.0, 4.0}) {
      ExperimentConfig cfg;
      cfg.regime = regime;
      cfg.theta = theta;
      cfg.n_list = {2000};
      cfg.replicas = 100;
      cfg.burn_in = 200;
      cfg.samples = 10;
      cfg.master_seed = 6;
      const auto row = run_lln_experiment(cfg).rows.front();
      const double rel = std::abs(row.ratio - row.target_constant) / row.target_constant;
      v.pass = v.pass && rel < 0.10 && !row.flagged;
      v.detail += std::string(to_string(regime)) + " theta=" + fmt(theta) + " ratio=" + fmt(row.ratio) + " target=" +
                  fmt(row.target_constant) + " rel=" + fmt(rel) + (row.flagged ? " flagged" : "") + "; ";
    }
  return v;
}

Verdict density_solver() {
  Verdict v{true, ""};
  double worst_marginal = 0.0, worst_symmetry = 0.0, worst_refinement = 0.0;
  for (ModelKind kind : {ModelKind::L1, ModelKind::L2}) {
    const double c0 = lln_constant(solve_density(kind, 1e-6));
    v.pass = v.pass && std::abs(c0 - 2.0) < 1e-4;
    v.detail += std::string(to_string(kind)) + " theta->0 constant " + fmt(c0) + "; ";
    for (double theta : {0.25, 1.0, 2.5, 5.0}) {
      const auto g = solve_density(kind, theta, {1024, 1e-11, 100000});
      const auto g2 = solve_density(kind, theta, {2048, 1e-11, 100000});
      worst_marginal = std::max(worst_marginal, max_marginal_deviation(g));
      for (int i = 0; i < g.m; ++i) worst_symmetry = std::max(worst_symmetry, std::abs(g.a[i] - g.a[g.m - 1 - i]));
      worst_refinement = std::max(worst_refinement, std::abs(lln_constant(g) - lln_constant(g2)));
      for (int k = 0; k <= 20; ++k)
        worst_refinement = std::max(worst_refinement, std::abs(rho_at(g, k / 20.0, k / 20.0) - rho_at(g2, k / 20.0, k / 20.0)));
    }
  }
  v.pass = v.pass && worst_marginal < 1e-10 && worst_symmetry < 1e-10 && worst_refinement < 1e-4;
  v.detail += "marginals " + fmt(worst_marginal) + ", symmetry " + fmt(worst_symmetry) + ", m vs 2m " + fmt(worst_refinement);
  return v;
}

Verdict path_sandwich() {
  const auto rep = verify_paths({1000, 60, 3, 2, 8});
  std::string detail = std::to_string(rep.trials) + " instances, " + std::to_string(rep.paths_checked) + " refined paths, " +
                       std::to_string(rep.violations.size()) + " violations";
  if (!rep.pass()) detail += "; first: seed " + std::to_string(rep.violations.front().seed) + " " + rep.violations.front().what;
  return {rep.pass(), detail};
}

Verdict displacement_tails() {
  Verdict v{true, ""};
  for (ModelKind kind : {ModelKind::L1, ModelKind::L2}) {
    DisplacementOptions opt;
    opt.params = {2000, 0.02, kind};
    opt.seed = 9;
    const auto rep = verify_displacement(opt);
    v.pass = v.pass && rep.pass();
    v.detail += std::string(to_string(kind)) + " E|D|=" + fmt(rep.mean_count);
    for (const auto& r : rep.rows) v.detail += " u=" + std::to_string(r.u) + ":" + fmt(r.tail) + "<=" + fmt(r.bound);
    v.detail += "; ";
  }
  return v;
}

Verdict local_measure() {
  Verdict v{true, ""};
  for (ModelKind kind : {ModelKind::L1, ModelKind::L2}) {
    std::vector<LocalMeasureReport> reps;
    for (double beta : {0.05, 0.01}) {
      LocalMeasureOptions opt;
      opt.params = {4000, beta, kind};
      opt.k = 2.0;
      opt.fn_count = 20;
      opt.replicas = 50;
      opt.seed = 10;
      reps.push_back(verify_local_measure(opt));
    }
    const bool decreases = reps[1].mean_sup < reps[0].mean_sup;
    v.pass = v.pass && decreases;
    v.detail += std::string(to_string(kind)) + " sup " + fmt(reps[0].mean_sup) + "+-" + fmt(reps[0].stderr_sup) + " -> " +
                fmt(reps[1].mean_sup) + "+-" + fmt(reps[1].stderr_sup) + "; ";
  }
  return v;
}

Verdict determinism() {
  Verdict v{true, ""};
  const std::vector<std::string> configs{
      "regime = uniform\nn_list = 100, 400\nreplicas = 8\nsamples = 3\nmaster_seed = 11\n",
      "regime = L1_theta\ntheta = 2\nn_list = 200\nreplicas = 6\nburn_in = 50\nsamples = 4\nmaster_seed = 12\n",
      "regime = L1_intermediate\nn_list = 300\nreplicas = 6\nburn_in_factor = 1\nsamples = 2\nmaster_seed = 13\n",
      "regime = L2_theta\ntheta = 1\nn_list = 200\nreplicas = 6\nburn_in = 50\nsamples = 2\nmaster_seed = 14\n",
      "regime = L2_intermediate\nn_list = 300\nreplicas = 6\nburn_in_factor = 1\nsamples = 2\nmaster_seed = 15\n"};
  for (const auto& text : configs) {
    std::istringstream in(text);
    ExperimentConfig cfg = parse_config(in);
    std::string first;
    for (int threads : {1, 3, 1}) {
      cfg.threads = threads;
      const auto out = run_lln_experiment(cfg);
      std::ostringstream csv;
      write_results_csv(csv, out.rows);
      write_replicas_csv(csv, out.replicas);
      if (first.empty())
        first = csv.str();
      else if (csv.str() != first)
        v.pass = false;
    }
    v.detail += std::string(to_string(cfg.regime)) + (v.pass ? " identical; " : " DIFFERS; ");
  }
  return v;
}

const std::vector<std::function<Verdict()>> kCriteria{
    lis_correctness,
    hit_and_run_stationarity,
    resampling_kernel,
    [] { return intermediate_regime(Regime::L1Intermediate, 1.27, 1.56, 1); },
    [] { return intermediate_regime(Regime::L2Intermediate, 1.35, 1.66, 30); },
    theta_regimes,
    density_solver,
    path_sandwich,
    displacement_tails,
    local_measure,
    determinism,
};

bool run(int criterion) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = kCriteria[static_cast<std::size_t>(criterion - 1)]();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("criterion %d: %s (%.1f s) %s\n", criterion, v.pass ? "PASS" : "FAIL", secs, v.detail.c_str());
  std::fflush(stdout);
  return v.pass;
}

}  // namespace

int main(int argc, char** argv) {
  const int count = static_cast<int>(kCriteria.size());
  if (argc > 2) {
    std::cerr << "usage: acceptance [criterion 1.." << count << "]\n";
    return 2;
  }
  if (argc == 2) {
    const int c = std::atoi(argv[1]);
    if (c < 1 || c > count) {
      std::cerr << "criterion must be in 1.." << count << '\n';
      return 2;
    }
    return run(c) ? 0 : 1;
  }
  bool all = true;
  for (int c = 1; c <= count; ++c) all = run(c) && all;
  return all ? 0 : 1;
}
