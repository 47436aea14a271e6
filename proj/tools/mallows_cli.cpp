// Command line front end: sampling, LIS, limiting densities, LLN experiments, verifications.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>

#include "mallows/csv.hpp"
#include "mallows/density.hpp"
#include "mallows/harness.hpp"
#include "mallows/models.hpp"
#include "mallows/permutation.hpp"
#include "mallows/samplers.hpp"
#include "mallows/stats.hpp"

using namespace mallows;

namespace {

CLI::Option* model_option(CLI::App* cmd, std::string& target) {
  return cmd->add_option("--model", target, "l1 or l2")->check(CLI::IsMember({"l1", "l2"}));
}

std::vector<int> parse_int_list(const std::string& text) {
  std::string spaced = text;
  std::ranges::replace(spaced, ',', ' ');
  std::istringstream in(spaced);
  std::vector<int> out;
  for (int v; in >> v;) out.push_back(v);
  if (!in.eof()) throw std::invalid_argument("bad integer list: " + text);
  return out;
}

void print_verdict(std::ostream& out, std::optional<bool> pass) {
  out << "verdict," << (pass ? (*pass ? "PASS" : "FAIL") : "none") << '\n';
}

struct SampleArgs {
  ModelKind model = ModelKind::L1;
  int n = 0;
  double beta = 0.0;
  std::uint64_t steps = 0;
  std::uint64_t seed = 0;
  std::uint64_t every = 1;
  std::string start = "identity";
  bool emit_perm = false;
};

int run_sample(const SampleArgs& a) {
  const ModelParams params{a.n, a.beta, a.model};
  params.validate();
  ChainState state =
      ChainState::start(params, a.start == "reversal" ? Permutation::reversal(a.n) : Permutation::identity(a.n), a.seed);
  if (a.emit_perm) {
    for (std::uint64_t t = 0; t < a.steps; ++t) step(state);
    std::cout << to_string(state.current) << '\n';
    return 0;
  }
  write_observation_header(std::cout);
  write_observation(std::cout, observe(state));
  for (std::uint64_t t = 1; t <= a.steps; ++t) {
    step(state);
    if (t % a.every == 0 || t == a.steps) write_observation(std::cout, observe(state));
  }
  return 0;
}

int run_lis(const std::string& path) {
  Permutation p;
  if (path == "-") {
    p = read_permutation(std::cin);
  } else {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    p = read_permutation(in);
  }
  std::cout << lis(p) << '\n';
  return 0;
}

struct DensityArgs {
  ModelKind model = ModelKind::L1;
  double theta = 1.0;
  DensityOptions opt;
  bool diagonal = false;
};

int run_density(const DensityArgs& a) {
  const DensityGrid g = solve_density(a.model, a.theta, a.opt);
  if (a.diagonal)
    write_diagonal_csv(std::cout, g);
  else
    write_grid_csv(std::cout, g);
  std::cout << "lln_constant," << format_real(lln_constant(g)) << '\n';
  return 0;
}

int run_experiment(const std::string& config, const std::string& out_dir, std::optional<int> threads, bool quiet) {
  ExperimentConfig cfg = load_config(config);
  if (threads) cfg.threads = *threads;
  std::filesystem::create_directories(out_dir);
  const std::size_t total = cfg.n_list.size() * static_cast<std::size_t>(cfg.replicas);
  std::atomic<std::size_t> done{0};
  std::mutex log_mutex;
  const ExperimentOutput res = run_lln_experiment(cfg, [&](const ReplicaResult& r) {
    const std::size_t k = ++done;
    if (quiet) return;
    std::lock_guard lock(log_mutex);
    std::cerr << "[" << k << "/" << total << "] n=" << r.n << " replica=" << r.replica << " mean_lis=" << format_real(r.mean_lis)
              << '\n';
  });
  const std::filesystem::path dir(out_dir);
  {
    std::ofstream results(dir / "results.csv");
    write_results_csv(results, res.rows);
  }
  {
    std::ofstream replicas(dir / "replicas.csv");
    write_replicas_csv(replicas, res.replicas);
  }
  write_results_csv(std::cout, res.rows);
  return 0;
}

struct StationarityArgs {
  ModelKind model = ModelKind::L1;
  StationarityOptions opt;
  std::string kernel = "har";
  std::string set_x = "2,3,4", set_y;
  double t0 = 1.0;
  std::optional<double> threshold;
};

int run_stationarity(StationarityArgs a) {
  a.opt.params.kind = a.model;
  a.opt.kernel = a.kernel == "resample" ? KernelKind::Resample : KernelKind::HitAndRun;
  a.opt.threshold = a.threshold;
  if (a.opt.kernel == KernelKind::Resample) {
    a.opt.spec.set_x = parse_int_list(a.set_x);
    a.opt.spec.set_y = a.set_y.empty() ? a.opt.spec.set_x : parse_int_list(a.set_y);
    a.opt.spec.t0 = a.t0;
  }
  const StationarityReport rep = verify_stationarity(a.opt);
  std::cout << "trials," << rep.trials << "\ntv," << format_real(rep.tv) << "\nnoise_tv," << format_real(rep.noise_tv)
            << "\nthreshold," << format_real(rep.threshold) << '\n';
  print_verdict(std::cout, rep.pass);
  return rep.pass.value_or(true) ? 0 : 1;
}

int run_paths(const PathsOptions& opt) {
  const PathsReport rep = verify_paths(opt);
  std::cout << "trials," << rep.trials << "\npaths_checked," << rep.paths_checked << "\nviolations," << rep.violations.size()
            << '\n';
  for (const auto& v : rep.violations) std::cout << "violation," << v.seed << ',' << v.what << '\n';
  print_verdict(std::cout, rep.pass());
  return rep.pass() ? 0 : 1;
}

int run_local_measure(const LocalMeasureOptions& opt) {
  const LocalMeasureReport rep = verify_local_measure(opt);
  std::cout << "t0," << rep.t0 << "\nmean_sup," << format_real(rep.mean_sup) << "\nstderr_sup," << format_real(rep.stderr_sup)
            << "\nsup_of_mean," << format_real(rep.sup_of_mean) << '\n';
  return 0;
}

int run_displacement(const DisplacementOptions& opt, const std::string& tail_csv) {
  const DisplacementReport rep = verify_displacement(opt);
  std::cout << "index," << rep.index << "\nmean_count," << format_real(rep.mean_count) << '\n';
  std::cout << "u,empirical_tail,std_error,bound,pass\n";
  for (const auto& r : rep.rows)
    std::cout << r.u << ',' << format_real(r.tail) << ',' << format_real(r.std_error) << ',' << format_real(r.bound) << ','
              << (r.pass ? 1 : 0) << '\n';
  if (!tail_csv.empty()) {
    std::ofstream out(tail_csv);
    std::vector<std::size_t> us(rep.tail.at_least.size());
    std::iota(us.begin(), us.end(), std::size_t{0});
    write_tail_csv(out, rep.tail, us);
  }
  print_verdict(std::cout, rep.pass());
  return rep.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mallows permutations under L1/L2 distances: samplers, LIS, limiting densities"};
  app.require_subcommand(1);
  int status = 0;

  SampleArgs sample;
  std::string sample_model;
  auto* sample_cmd = app.add_subcommand("sample", "run a hit-and-run chain and stream observations as CSV");
  model_option(sample_cmd, sample_model)->required();
  sample_cmd->add_option("--n", sample.n)->required()->check(CLI::PositiveNumber);
  sample_cmd->add_option("--beta", sample.beta)->required()->check(CLI::PositiveNumber);
  sample_cmd->add_option("--steps", sample.steps)->required();
  sample_cmd->add_option("--seed", sample.seed)->required();
  sample_cmd->add_option("--every", sample.every, "write one row every this many steps")->check(CLI::PositiveNumber);
  sample_cmd->add_option("--start", sample.start)->check(CLI::IsMember({"identity", "reversal"}));
  sample_cmd->add_flag("--emit-perm", sample.emit_perm, "print only the final permutation, in one-line form");
  sample_cmd->callback([&] {
    sample.model = parse_model_kind(sample_model);
    status = run_sample(sample);
  });

  std::string perm_file;
  auto* lis_cmd = app.add_subcommand("lis", "LIS of a permutation in one-line form ('-' reads stdin)");
  lis_cmd->add_option("--perm-file", perm_file)->required();
  lis_cmd->callback([&] { status = run_lis(perm_file); });

  DensityArgs dens;
  std::string dens_model;
  auto* dens_cmd = app.add_subcommand("density", "solve for the limiting density at theta");
  model_option(dens_cmd, dens_model)->required();
  dens_cmd->add_option("--theta", dens.theta)->required()->check(CLI::PositiveNumber);
  dens_cmd->add_option("--grid", dens.opt.m, "cells")->capture_default_str();
  dens_cmd->add_option("--tol", dens.opt.tol, "marginal tolerance")->capture_default_str();
  dens_cmd->add_option("--max-iter", dens.opt.max_iter)->capture_default_str();
  dens_cmd->add_flag("--diagonal", dens.diagonal, "write x,rho(x,x) instead of x,a(x)");
  dens_cmd->callback([&] {
    dens.model = parse_model_kind(dens_model);
    status = run_density(dens);
  });

  std::string config, out_dir;
  std::optional<int> threads;
  bool quiet = false;
  auto* exp_cmd = app.add_subcommand("experiment", "run an LIS law-of-large-numbers experiment from a config file");
  exp_cmd->add_option("--config", config)->required()->check(CLI::ExistingFile);
  exp_cmd->add_option("--out", out_dir)->required();
  exp_cmd->add_option("--threads", threads, "override the config's thread count");
  exp_cmd->add_flag("--quiet", quiet);
  exp_cmd->callback([&] { status = run_experiment(config, out_dir, threads, quiet); });

  auto* verify_cmd = app.add_subcommand("verify", "checks of the samplers and of the limit theory");
  verify_cmd->require_subcommand(1);

  StationarityArgs st;
  std::string st_model = "l1";
  auto* st_cmd = verify_cmd->add_subcommand("stationarity", "k kernel steps from an exact draw, TV against the exact law");
  model_option(st_cmd, st_model);
  st_cmd->add_option("--n", st.opt.params.n)->capture_default_str();
  st_cmd->add_option("--beta", st.opt.params.beta)->capture_default_str();
  st_cmd->add_option("--kernel", st.kernel)->check(CLI::IsMember({"har", "resample"}));
  st_cmd->add_option("--steps", st.opt.steps)->capture_default_str();
  st_cmd->add_option("--trials", st.opt.trials)->capture_default_str();
  st_cmd->add_option("--seed", st.opt.seed);
  st_cmd->add_option("--set-x", st.set_x, "resampled places, comma separated")->capture_default_str();
  st_cmd->add_option("--set-y", st.set_y, "resampled values (default: same as --set-x)");
  st_cmd->add_option("--t0", st.t0)->capture_default_str();
  st_cmd->add_option("--threshold", st.threshold);
  st_cmd->callback([&] {
    st.model = parse_model_kind(st_model);
    status = run_stationarity(st);
  });

  PathsOptions po;
  auto* paths_cmd = verify_cmd->add_subcommand("paths", "refined-path LIS sandwich on random instances");
  paths_cmd->add_option("--trials", po.trials)->capture_default_str();
  paths_cmd->add_option("--max-n", po.max_n)->capture_default_str();
  paths_cmd->add_option("--max-t", po.max_t)->capture_default_str();
  paths_cmd->add_option("--max-k0", po.max_k0)->capture_default_str();
  paths_cmd->add_option("--seed", po.seed);
  paths_cmd->callback([&] { status = run_paths(po); });

  LocalMeasureOptions lm;
  std::string lm_model = "l1";
  auto* lm_cmd = verify_cmd->add_subcommand("local-measure", "sup over test functions of the local-measure discrepancy");
  model_option(lm_cmd, lm_model);
  lm_cmd->add_option("--n", lm.params.n)->capture_default_str();
  lm_cmd->add_option("--beta", lm.params.beta)->capture_default_str();
  lm_cmd->add_option("--t0", lm.t0, "0 means n/2");
  lm_cmd->add_option("--k", lm.k)->capture_default_str();
  lm_cmd->add_option("--fn-count", lm.fn_count)->capture_default_str();
  lm_cmd->add_option("--replicas", lm.replicas)->capture_default_str();
  lm_cmd->add_option("--burn-in", lm.burn_in)->capture_default_str();
  lm_cmd->add_option("--seed", lm.seed);
  lm_cmd->add_option("--threads", lm.threads);
  lm_cmd->callback([&] {
    lm.params.kind = parse_model_kind(lm_model);
    status = run_local_measure(lm);
  });

  DisplacementOptions dp;
  std::string dp_model = "l1";
  std::string tail_csv;
  auto* dp_cmd = verify_cmd->add_subcommand("displacement", "tail of the displacement count at a bulk index");
  model_option(dp_cmd, dp_model);
  dp_cmd->add_option("--n", dp.params.n)->capture_default_str();
  dp_cmd->add_option("--beta", dp.params.beta)->capture_default_str();
  dp_cmd->add_option("--index", dp.index, "0 means n/2");
  dp_cmd->add_option("--replicas", dp.replicas)->capture_default_str();
  dp_cmd->add_option("--burn-in", dp.burn_in)->capture_default_str();
  dp_cmd->add_option("--samples", dp.samples)->capture_default_str();
  dp_cmd->add_option("--thin", dp.thin)->capture_default_str();
  dp_cmd->add_option("--u", dp.u_multiples, "u in units of the local scale")->delimiter(',');
  dp_cmd->add_option("--seed", dp.seed);
  dp_cmd->add_option("--threads", dp.threads);
  dp_cmd->add_option("--tail-csv", tail_csv, "write the whole empirical tail here");
  dp_cmd->callback([&] {
    dp.params.kind = parse_model_kind(dp_model);
    status = run_displacement(dp, tail_csv);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return status;
}
