#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "abcm/harness.hpp"

using namespace abcm;

namespace {

SweepConfig small_sweep() {
  SweepConfig c;
  c.model = ModelKind::HK;
  c.graph.kind = "er";
  c.graph.n = 30;
  c.graph.p = 0.3;
  c.grid = {{0.0, 0.1}, {0.5, 0.9, 1.0}, {0.1, 0.2, 0.3, 0.5}, {}};
  c.graphs_per_setting = 5;
  c.opinions_per_graph = 10;
  c.base_seed = 42;
  return c;
}

std::vector<RunResult> collect(const SweepConfig& c, unsigned threads) {
  std::vector<RunResult> out;
  SweepOptions opts;
  opts.threads = threads;
  run_sweep(c, [&](RunResult&& r) { out.push_back(std::move(r)); }, opts);
  return out;
}

void expect_same_outcome(const RunResult& a, const RunResult& b) {
  EXPECT_EQ(a.seed, b.seed);
  EXPECT_EQ(a.T, b.T);
  EXPECT_EQ(a.converged, b.converged);
  EXPECT_EQ(a.clusters_determinable, b.clusters_determinable);
  EXPECT_EQ(a.final_assignment, b.final_assignment);
  EXPECT_EQ(a.final_spread, b.final_spread);
  ASSERT_EQ(a.metrics.has_value(), b.metrics.has_value());
  if (a.metrics) {
    EXPECT_EQ(a.metrics->n_major, b.metrics->n_major);
    EXPECT_EQ(a.metrics->entropy, b.metrics->entropy);
    EXPECT_EQ(a.metrics->w_fraction, b.metrics->w_fraction);
  }
}

RunResult with_metrics(std::uint64_t T, std::size_t major, double entropy) {
  RunResult r;
  r.T = T;
  r.converged = r.clusters_determinable = true;
  r.metrics = ClusterMetrics{major, 0, entropy, 1.0, false};
  return r;
}

}  // namespace

TEST(Seeds, MixIsDeterministicAndSpread) {
  EXPECT_EQ(mix_seed(7, {1, 2}), mix_seed(7, {1, 2}));
  EXPECT_NE(mix_seed(7, {1, 2}), mix_seed(7, {2, 1}));
  EXPECT_NE(mix_seed(7, {1}), mix_seed(8, {1}));
  std::set<std::uint64_t> seen;
  for (std::uint32_t k = 0; k < 10; ++k)
    for (std::uint32_t m = 0; m < 10; ++m)
      for (std::uint64_t gi = 0; gi < 10; ++gi) seen.insert(SweepSeeds::run(0, k, m, gi));
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(InitialOpinions, Determinism) {
  Rng a(5), b(5);
  EXPECT_EQ(initial_opinions(100, a), initial_opinions(100, b));
  Rng c(6);
  auto one = initial_opinions(1, c);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_TRUE(one[0] >= 0.0 && one[0] <= 1.0);
}

TEST(InitialOpinions, Moments) {
  Rng rng(2718);
  auto x = initial_opinions(100000, rng);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= x.size();
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= x.size();
  EXPECT_NEAR(mean, 0.5, 0.005);
  EXPECT_NEAR(var, 1.0 / 12.0, 0.003);
}

TEST(RunSingle, BaselineHkConsensusAtLargeC0) {
  auto g = generate_complete(1000);
  Rng rng(17);
  auto x = initial_opinions(1000, rng);
  RunConfig cfg;
  cfg.params = {ModelKind::HK, 0.0, 1.0, 0.5, std::nullopt};
  auto r = run_single(g, x, cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_FALSE(r.bailed_out);
  ASSERT_TRUE(r.metrics);
  EXPECT_EQ(r.metrics->n_major, 1u);
  EXPECT_EQ(r.metrics->w_fraction, 1.0);
  EXPECT_EQ(r.tolerance, 1e-6);
  EXPECT_EQ(r.check_interval, 1u);
}

TEST(RunSingle, FrozenAtZeroConfidence) {
  Rng rng(3);
  auto g = generate_er(40, 0.3, rng);
  auto x = initial_opinions(40, rng);
  RunConfig cfg;
  cfg.params = {ModelKind::HK, 0.2, 0.5, 0.0, std::nullopt};
  auto r = run_single(g, x, cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.T, r.check_interval);
  ASSERT_TRUE(r.metrics);
  EXPECT_EQ(r.metrics->n_major + r.metrics->n_minor, 40u);
  EXPECT_TRUE(r.metrics->w_all_isolated);
}

TEST(RunSingle, Determinism) {
  Rng rng(8);
  auto g = generate_er(40, 0.3, rng);
  auto x = initial_opinions(40, rng);
  RunConfig cfg;
  cfg.params = {ModelKind::DW, 0.1, 0.5, 0.3, 0.3};
  cfg.seed = 1234;
  cfg.traces.enabled = true;
  auto a = run_single(g, x, cfg);
  auto b = run_single(g, x, cfg);
  expect_same_outcome(a, b);
  EXPECT_EQ(a.check_interval, g.num_edges());
  ASSERT_TRUE(a.traces && b.traces);
  ASSERT_EQ(a.traces->confidence.size(), b.traces->confidence.size());
  for (std::size_t k = 0; k < a.traces->confidence.size(); ++k)
    EXPECT_EQ(a.traces->confidence[k].values, b.traces->confidence[k].values);
}

TEST(RunSingle, BailoutCapsSteps) {
  auto g = generate_complete(50);
  Rng rng(2);
  auto x = initial_opinions(50, rng);
  RunConfig cfg;
  cfg.params = {ModelKind::DW, 0.0, 1.0, 0.3, 0.01};
  cfg.bailout = 1000;
  cfg.check_interval = 300;
  auto r = run_single(g, x, cfg);
  EXPECT_TRUE(r.bailed_out);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.T, 1000u);
}

TEST(RunSingle, IndeterminableAtBailout) {
  auto g = generate_complete(50);
  Rng rng(2);
  auto x = initial_opinions(50, rng);
  RunConfig cfg;
  cfg.params = {ModelKind::DW, 0.0, 1.0, 1.0, 0.01};
  cfg.bailout = 10;
  auto r = run_single(g, x, cfg);
  EXPECT_TRUE(r.bailed_out);
  EXPECT_FALSE(r.clusters_determinable);
  EXPECT_FALSE(r.metrics);

  cfg.indeterminate_factor = 1e6;
  auto loose = run_single(g, x, cfg);
  EXPECT_TRUE(loose.clusters_determinable);
  EXPECT_TRUE(loose.metrics);
}

TEST(RunSingle, HkTracesCoverWindow) {
  auto g = generate_complete(20);
  Rng rng(4);
  auto x = initial_opinions(20, rng);
  RunConfig cfg;
  cfg.params = {ModelKind::HK, 0.1, 0.5, 0.2, std::nullopt};
  cfg.traces.enabled = true;
  cfg.traces.horizon = 50;
  auto r = run_single(g, x, cfg);
  ASSERT_TRUE(r.traces);
  EXPECT_EQ(r.traces->window_start, r.T);
  EXPECT_EQ(r.traces->window_end, r.T + 50);
  ASSERT_EQ(r.traces->confidence.size(), g.num_edges());
  EXPECT_EQ(r.traces->confidence[0].times.size(), 51u);
  EXPECT_EQ(r.traces->effective.times.size(), 51u);
}

TEST(Sweep, CountsAndOrder) {
  auto c = small_sweep();
  EXPECT_EQ(c.grid_points().size(), 24u);
  EXPECT_EQ(c.total_runs(), 1200u);
  auto results = collect(c, 4);
  ASSERT_EQ(results.size(), 1200u);
  // Run-id order: graph, then opinion set, then grid point.
  EXPECT_EQ(results[0].graph.id, 0u);
  EXPECT_EQ(results[24].trial, 1u);
  EXPECT_EQ(results[240].graph.id, 1u);
  EXPECT_EQ(results[1].params.c0, 0.2);
  EXPECT_EQ(results[4].params.delta, 0.9);
  EXPECT_EQ(results[12].params.gamma, 0.1);
  for (const auto& r : results) EXPECT_LE(r.T, c.bailout);
}

TEST(Sweep, FullHkGridCount) {
  SweepConfig c;
  c.graph.n = 1000;
  c.grid.gamma.assign(8, 0.0);
  c.grid.delta.assign(7, 1.0);
  c.grid.c0.assign(22, 0.1);
  c.opinions_per_graph = 10;
  EXPECT_EQ(c.total_runs(), 12320u);
}

TEST(Sweep, DeterministicAcrossThreadCounts) {
  auto c = small_sweep();
  c.graphs_per_setting = 2;
  c.model = ModelKind::DW;
  c.graph.n = 20;
  c.grid = {{0.1}, {0.5}, {0.3, 0.6}, {0.3}};
  c.bailout = 200000;
  auto a = collect(c, 1);
  auto b = collect(c, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) expect_same_outcome(a[k], b[k]);
}

TEST(Sweep, OpinionSetsSharedAcrossGridPoints) {
  // Duplicate grid values differ only in grid index; HK uses no run randomness,
  // so identical outcomes mean identical initial opinions.
  auto c = small_sweep();
  c.graphs_per_setting = 2;
  c.opinions_per_graph = 3;
  c.grid = {{0.1, 0.1}, {0.5}, {0.2}, {}};
  auto results = collect(c, 2);
  ASSERT_EQ(results.size(), 12u);
  for (std::size_t k = 0; k < results.size(); k += 2) {
    EXPECT_NE(results[k].seed, results[k + 1].seed);
    EXPECT_EQ(results[k].T, results[k + 1].T);
    EXPECT_EQ(results[k].final_assignment, results[k + 1].final_assignment);
  }
}

TEST(Sweep, SkipPredicate) {
  auto c = small_sweep();
  c.graphs_per_setting = 1;
  c.opinions_per_graph = 2;
  std::vector<RunResult> out;
  SweepOptions opts;
  opts.skip = [](const RunResult& r) { return r.trial == 0; };
  auto executed = run_sweep(c, [&](RunResult&& r) { out.push_back(std::move(r)); }, opts);
  EXPECT_EQ(executed, 24u);
  EXPECT_EQ(out.size(), 24u);
  for (const auto& r : out) EXPECT_EQ(r.trial, 1u);
}

TEST(Sweep, ValidatesGrid) {
  auto c = small_sweep();
  c.grid.mu = {0.3};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_sweep();
  c.model = ModelKind::DW;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_sweep();
  c.grid.c0 = {1.5};
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(BuildGraph, ErRecordsLccSizes) {
  GraphSpec spec;
  spec.kind = "er";
  spec.n = 200;
  spec.p = 0.005;
  auto built = build_graph(spec, 99, 3);
  EXPECT_EQ(built.info.id, 3u);
  EXPECT_EQ(built.info.source_nodes, 200u);
  EXPECT_EQ(built.info.nodes, built.graph.num_nodes());
  EXPECT_LT(built.info.nodes, 200u);
  std::size_t count = 0;
  connected_components(built.graph, &count);
  EXPECT_EQ(count, 1u);
}

TEST(Summarize, IdenticalResultsHaveZeroStd) {
  std::vector<RunResult> rs(10, with_metrics(120, 1, 0.0));
  auto rows = summarize(rs, {"gamma"});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].count, 10u);
  EXPECT_EQ(rows[0].n_major.stddev, 0.0);
  EXPECT_EQ(rows[0].entropy.stddev, 0.0);
  EXPECT_EQ(rows[0].log10_T.stddev, 0.0);
  EXPECT_EQ(rows[0].w_fraction.stddev, 0.0);
}

TEST(Summarize, LogMean) {
  auto rows = summarize({with_metrics(10, 1, 0.0), with_metrics(1000, 1, 0.0)}, {});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rows[0].log10_T.mean, 2.0);
}

TEST(Summarize, IndeterminableExcluded) {
  std::vector<RunResult> rs;
  for (int k = 0; k < 7; ++k) rs.push_back(with_metrics(100, 2, 0.5));
  for (int k = 0; k < 3; ++k) {
    RunResult r;
    r.T = kDefaultBailout;
    r.bailed_out = true;
    rs.push_back(r);
  }
  auto rows = summarize(rs, {"model"});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].count, 10u);
  EXPECT_EQ(rows[0].n_bailout, 3u);
  EXPECT_EQ(rows[0].n_indeterminate, 3u);
  EXPECT_EQ(rows[0].n_used, 7u);
  EXPECT_EQ(rows[0].n_major.mean, 2.0);
  EXPECT_DOUBLE_EQ(rows[0].log10_T.mean, 2.0);
}

TEST(Summarize, GroupsSortNumerically) {
  std::vector<RunResult> rs;
  for (double c0 : {0.5, 0.05, 0.1}) {
    auto r = with_metrics(10, 1, 0.0);
    r.params.c0 = c0;
    rs.push_back(r);
  }
  auto rows = summarize(rs, {"c0"});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].key[0], "0.05");
  EXPECT_EQ(rows[2].key[0], "0.5");
  EXPECT_THROW(summarize(rs, {"bogus"}), std::invalid_argument);
  EXPECT_THROW(summarize({}, {"c0"}), std::invalid_argument);
}
