#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "mallows/harness.hpp"

using namespace mallows;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string results_text(const ExperimentConfig& cfg) {
  const auto out = run_lln_experiment(cfg);
  std::ostringstream s;
  write_results_csv(s, out.rows);
  write_replicas_csv(s, out.replicas);
  return s.str();
}

}  // namespace

TEST(Config, ParsesEveryKey) {
  const auto cfg = parse(R"(# comment line
regime = L1_intermediate
n_list = 100, 200 400
beta_c = 2
beta_p = 0.25   # trailing comment
replicas = 6
burn_in = 300
thin = 7
samples = 3
master_seed = 18446744073709551615
threads = 2
)");
  EXPECT_EQ(cfg.regime, Regime::L1Intermediate);
  EXPECT_EQ(cfg.n_list, (std::vector<int>{100, 200, 400}));
  EXPECT_EQ(cfg.replicas, 6);
  EXPECT_EQ(cfg.burn_in_for(100), 300u);
  EXPECT_EQ(cfg.thin_for(100), 7u);
  EXPECT_EQ(cfg.samples, 3u);
  EXPECT_EQ(cfg.master_seed, 18446744073709551615ULL);
  EXPECT_DOUBLE_EQ(cfg.beta_for(256), 2.0 / 4.0);
}

TEST(Config, Defaults) {
  const auto l1 = parse("regime = L1_intermediate\nn_list = 1000");
  EXPECT_DOUBLE_EQ(l1.beta_p, 0.5);
  EXPECT_DOUBLE_EQ(l1.beta_for(10000), 0.01);
  EXPECT_EQ(l1.burn_in_for(1000), 50000u);
  EXPECT_EQ(l1.thin_for(1000), 100u);
  EXPECT_EQ(l1.thin_for(5), 1u);
  const auto l2 = parse("regime = L2_intermediate\nn_list = 1000");
  EXPECT_DOUBLE_EQ(l2.beta_p, 1.0);
  const auto th = parse("regime = L2_theta\ntheta = 4\nn_list = 10");
  EXPECT_DOUBLE_EQ(th.beta_for(10), 0.04);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse("n_list = 10"), ConfigError);
  EXPECT_THROW(parse("regime = L3_theta\nn_list = 10"), ConfigError);
  EXPECT_THROW(parse("regime = uniform\nn_list = 10\nbogus = 1"), ConfigError);
  EXPECT_THROW(parse("regime = uniform\nn_list = 10\nn_list = 20"), ConfigError);
  EXPECT_THROW(parse("regime = uniform\nn_list = 10\nreplicas"), ConfigError);
  EXPECT_THROW(parse("regime = uniform\nn_list = 10\nreplicas = 2x"), ConfigError);
  EXPECT_THROW(parse("regime = uniform"), ConfigError);
  EXPECT_THROW(parse("regime = uniform\nn_list = 0"), ConfigError);
  EXPECT_THROW(parse("regime = uniform\nn_list = 10\nreplicas = 0"), ConfigError);
}

TEST(Config, RegimeRuleCompatibility) {
  EXPECT_THROW(parse("regime = L1_intermediate\nn_list = 10\nbeta_p = 1"), ConfigError);
  EXPECT_THROW(parse("regime = L1_intermediate\nn_list = 10\nbeta_p = 0"), ConfigError);
  EXPECT_NO_THROW(parse("regime = L2_intermediate\nn_list = 10\nbeta_p = 1.5"));
  EXPECT_THROW(parse("regime = L2_intermediate\nn_list = 10\nbeta_p = 2"), ConfigError);
  EXPECT_THROW(parse("regime = L1_theta\nn_list = 10"), ConfigError);
  EXPECT_THROW(parse("regime = L1_theta\nn_list = 10\ntheta = 1\nbeta_p = 0.5"), ConfigError);
  EXPECT_THROW(parse("regime = L1_intermediate\nn_list = 10\ntheta = 1"), ConfigError);
}

TEST(Targets, RegimeConstants) {
  ExperimentConfig cfg;
  cfg.regime = Regime::Uniform;
  EXPECT_EQ(target_constant(cfg), 2.0);
  cfg.regime = Regime::L1Intermediate;
  EXPECT_NEAR(target_constant(cfg), 1.41421356, 1e-6);
  cfg.regime = Regime::L2Intermediate;
  EXPECT_NEAR(target_constant(cfg), 1.5022511, 1e-6);
  cfg.regime = Regime::L1Theta;
  cfg.theta = 1e-3;
  EXPECT_NEAR(target_constant(cfg), 2.0, 1e-3);
  cfg.theta = 1.0;
  EXPECT_NEAR(target_constant(cfg), lln_constant(solve_density(ModelKind::L1, 1.0)), 1e-12);
}

TEST(Normalization, PerRegime) {
  EXPECT_DOUBLE_EQ(lis_normalization(Regime::Uniform, 400, 0.0), 20.0);
  EXPECT_DOUBLE_EQ(lis_normalization(Regime::L1Theta, 400, 0.01), 20.0);
  EXPECT_DOUBLE_EQ(lis_normalization(Regime::L1Intermediate, 400, 0.04), 80.0);
  EXPECT_DOUBLE_EQ(lis_normalization(Regime::L2Intermediate, 400, 0.0016), 80.0);
}

TEST(Experiment, RowsAndRatios) {
  const auto cfg = parse("regime = L1_theta\ntheta = 2\nn_list = 30, 60\nreplicas = 4\nburn_in = 40\nsamples = 3\nthreads = 1");
  const auto out = run_lln_experiment(cfg);
  ASSERT_EQ(out.rows.size(), 2u);
  ASSERT_EQ(out.replicas.size(), 8u);
  for (std::size_t k = 0; k < out.replicas.size(); ++k) {
    EXPECT_EQ(out.replicas[k].replica, static_cast<int>(k % 4));
    EXPECT_EQ(out.replicas[k].anti_diagonal_start, k % 2 == 1);
  }
  for (const auto& row : out.rows) {
    EXPECT_GE(row.stderr_lis, 0.0);
    EXPECT_DOUBLE_EQ(row.ratio, row.mean_lis / row.normalization);
    EXPECT_EQ(row.replicas, 4);
  }
  EXPECT_DOUBLE_EQ(out.rows[1].beta, 2.0 / 60);
}

TEST(Experiment, ByteIdenticalAcrossThreadCounts) {
  auto cfg = parse("regime = L2_intermediate\nn_list = 40, 80\nreplicas = 5\nburn_in = 30\nsamples = 2\nmaster_seed = 77");
  cfg.threads = 1;
  const std::string one = results_text(cfg);
  cfg.threads = 3;
  EXPECT_EQ(results_text(cfg), one);
  EXPECT_EQ(results_text(cfg), one);
  cfg.master_seed = 78;
  EXPECT_NE(results_text(cfg), one);
}

TEST(Experiment, ReplicaIndependence) {
  const auto cfg = parse("regime = uniform\nn_list = 50\nreplicas = 6\nsamples = 2\nmaster_seed = 3");
  const auto all = run_lln_experiment(cfg);
  for (int r = 5; r >= 0; --r) {
    const auto alone = run_replica(cfg, 50, r);
    EXPECT_EQ(alone.mean_lis, all.replicas[static_cast<std::size_t>(r)].mean_lis);
  }
}

TEST(Experiment, CsvSchema) {
  const auto cfg = parse("regime = uniform\nn_list = 16\nreplicas = 2\nthreads = 1");
  const std::string text = results_text(cfg);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "n,beta,regime,mean_lis,stderr_lis,normalization,ratio,target_constant,replicas,two_start_z,flagged");
  EXPECT_NE(text.find("\nn,replica,seed,start,mean_lis\n"), std::string::npos);
  EXPECT_NE(text.find(",uniform,"), std::string::npos);
}

TEST(ParallelFor, PropagatesExceptions) {
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t k) {
                 if (k == 7) throw std::runtime_error("boom");
               }),
               std::runtime_error);
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), 4, [&](std::size_t k) { hit[k] += 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
}

TEST(Stationarity, NoTrialsNoVerdict) {
  StationarityOptions opt;
  opt.trials = 0;
  const auto rep = verify_stationarity(opt);
  EXPECT_FALSE(rep.pass.has_value());
  EXPECT_EQ(rep.exact.size(), 24u);
}

TEST(Stationarity, Guards) {
  StationarityOptions opt;
  opt.params = {6, 0.3, ModelKind::L1};
  EXPECT_THROW(verify_stationarity(opt), std::length_error);
  opt.params = {4, 0.3, ModelKind::L1};
  opt.kernel = KernelKind::Resample;
  opt.spec = {{2, 3}, {2, 3}, 1.0};
  EXPECT_THROW(verify_stationarity(opt), std::invalid_argument);
}

TEST(Stationarity, SmallRunsPass) {
  StationarityOptions opt;
  opt.params = {4, 0.5, ModelKind::L2};
  opt.trials = 200000;
  opt.steps = 2;
  EXPECT_TRUE(*verify_stationarity(opt).pass);
  opt.kernel = KernelKind::Resample;
  opt.spec = {{2, 3, 4}, {2, 3, 4}, 1.0};
  EXPECT_TRUE(*verify_stationarity(opt).pass);
}

TEST(Stationarity, ExplicitThreshold) {
  StationarityOptions opt;
  opt.params = {3, 0.1, ModelKind::L1};
  opt.trials = 1000;
  opt.threshold = 1e-9;
  const auto rep = verify_stationarity(opt);
  EXPECT_EQ(rep.threshold, 1e-9);
  EXPECT_FALSE(*rep.pass);
}

TEST(DetailedBalance, RatiosMatchWeights) {
  const ResampleSpec spec{{2, 3, 4}, {2, 3, 4}, 1.0};
  const auto row = detailed_balance_check(Permutation({1, 2, 3, 4}), Permutation({1, 3, 2, 4}), spec, 0.3, 200000, 5);
  EXPECT_TRUE(row.pass) << row.log_ratio << " vs " << row.expected_log_ratio;
  EXPECT_NEAR(row.expected_log_ratio, -0.6, 1e-12);
  const auto unreachable = detailed_balance_check(Permutation({1, 2, 3, 4}), Permutation({2, 1, 3, 4}), spec, 0.3, 1000, 5);
  EXPECT_FALSE(unreachable.pass);
  EXPECT_EQ(unreachable.forward, 0.0);
}

TEST(Paths, SmallRunAndTrivialSizes) {
  const auto rep = verify_paths({200, 30, 3, 2, 8});
  EXPECT_TRUE(rep.pass());
  EXPECT_EQ(rep.trials, 200);
  const auto one = verify_paths({50, 1, 2, 1, 9});
  EXPECT_TRUE(one.pass());
  EXPECT_THROW(verify_paths({10, 0, 2, 1, 1}), std::invalid_argument);
}

TEST(Paths, InstancesAreReproducible) {
  const PathsOptions opt{10, 60, 3, 2, 1};
  for (std::uint64_t seed : {4ULL, 5ULL}) {
    const auto a = make_paths_instance(seed, opt), b = make_paths_instance(seed, opt);
    EXPECT_EQ(a.perm, b.perm);
    EXPECT_EQ(a.spec.k0, b.spec.k0);
    EXPECT_LE(a.embedding.kappa + a.embedding.alpha, a.perm.size() + 1e-9);
    EXPECT_LE(a.embedding.kappa + a.embedding.gamma, a.perm.size() + 1e-9);
  }
}

TEST(LocalChains, SweepWidth) {
  EXPECT_EQ(l2_sweep_width(2000, 0.02), 71);
  EXPECT_EQ(l2_sweep_width(30, 0.02), 30);
  EXPECT_EQ(l2_sweep_width(2000, 1e4), 2);
}

TEST(LocalMeasure, BulkAndDegenerate) {
  EXPECT_TRUE(in_bulk(4000, 2000, 2.0, 0.01, ModelKind::L1));
  EXPECT_FALSE(in_bulk(4000, 100, 2.0, 0.01, ModelKind::L1));
  EXPECT_TRUE(in_bulk(4000, 100, 2.0, 0.01, ModelKind::L2));
  LocalMeasureOptions opt;
  opt.params = {400, 0.05, ModelKind::L1};
  opt.t0 = 10;
  opt.replicas = 2;
  EXPECT_THROW(verify_local_measure(opt), std::out_of_range);
  opt.params = {1, 0.05, ModelKind::L1};
  opt.t0 = 0;
  opt.fn_count = 3;
  const auto rep = verify_local_measure(opt);
  EXPECT_EQ(rep.t0, 1);
  ASSERT_EQ(rep.reference.size(), 4u);
  EXPECT_EQ(rep.reference[0], 0.0);
  EXPECT_GE(rep.mean_sup, rep.sup_of_mean - 1e-15);
}

TEST(LocalMeasure, DeterministicAcrossThreads) {
  LocalMeasureOptions opt;
  opt.params = {600, 0.1, ModelKind::L2};
  opt.replicas = 4;
  opt.fn_count = 4;
  opt.burn_in = 20;
  opt.threads = 1;
  const auto a = verify_local_measure(opt);
  opt.threads = 2;
  const auto b = verify_local_measure(opt);
  EXPECT_EQ(a.mean_sup, b.mean_sup);
  EXPECT_EQ(a.sup_of_mean, b.sup_of_mean);
}

TEST(Displacement, SmallRun) {
  DisplacementOptions opt;
  opt.params = {300, 0.1, ModelKind::L1};
  opt.replicas = 3;
  opt.samples = 20;
  opt.burn_in = 50;
  const auto rep = verify_displacement(opt);
  EXPECT_EQ(rep.index, 150);
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_EQ(rep.rows[0].u, 40u);
  EXPECT_EQ(rep.tail.samples, 60u);
  EXPECT_TRUE(rep.pass());
  opt.index = 301;
  EXPECT_THROW(verify_displacement(opt), std::out_of_range);
}
