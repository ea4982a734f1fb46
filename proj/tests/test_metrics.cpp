#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "abcm/harness.hpp"
#include "abcm/metrics.hpp"
#include "oracles.hpp"

using namespace abcm;

namespace {

ClusterProfile sizes_only(std::vector<std::size_t> sizes) {
  ClusterProfile p;
  p.sizes = std::move(sizes);
  p.internal_edges_original.assign(p.sizes.size(), 1);
  p.internal_edges_effective.assign(p.sizes.size(), 1);
  for (std::uint32_t r = 0; r < p.sizes.size(); ++r) p.assignment.insert(p.assignment.end(), p.sizes[r], r);
  return p;
}

// Groups node ids by cluster label, in order of first appearance.
std::vector<std::vector<std::size_t>> members(const ClusterProfile& p) {
  std::vector<std::vector<std::size_t>> out(p.num_clusters());
  for (std::size_t i = 0; i < p.assignment.size(); ++i) out[p.assignment[i]].push_back(i);
  return out;
}

}  // namespace

TEST(EffectiveEdges, Examples) {
  auto g = generate_complete(2);
  EXPECT_TRUE(effective_edges(init_state(g, 0.5, std::vector<double>{0.0, 1.0}), g).empty());

  auto k5 = generate_complete(5);
  auto same = init_state(k5, 0.01, std::vector<double>(5, 0.4));
  EXPECT_EQ(effective_edges(same, k5).size(), 10u);

  auto path = Graph::from_edges(3, {{0, 1}, {1, 2}});
  SimState s;
  s.opinions = {0.15, 0.15, 0.9};
  s.confidence = {0.235, 0.075};
  EXPECT_EQ(effective_edges(s, path), (std::vector<EdgeId>{0}));

  auto profile = opinion_clusters(s, path);
  EXPECT_EQ(profile.assignment, (std::vector<std::uint32_t>{0, 0, 1}));
  EXPECT_EQ(profile.sizes, (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ(profile.internal_edges_original[0], 1u);
  EXPECT_EQ(profile.internal_edges_effective[0], 1u);
}

TEST(EffectiveEdges, ExtremeBounds) {
  Rng rng(4);
  auto g = generate_er(30, 0.4, rng);
  auto x = initial_opinions(30, rng);
  x[0] = 0.0;
  x[1] = 1.0;
  EXPECT_TRUE(effective_edges(init_state(g, 0.0, x), g).empty());
  auto all = init_state(g, 1.0, x);
  std::size_t expected = 0;
  for (const auto& e : g.edges())
    if (std::abs(x[e.u] - x[e.v]) < 1.0) ++expected;
  EXPECT_EQ(effective_edges(all, g).size(), expected);
}

TEST(Clusters, SingletonsAndWhole) {
  auto g = generate_complete(5);
  auto frozen = init_state(g, 0.0, std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5});
  auto p = opinion_clusters(frozen, g);
  EXPECT_EQ(p.num_clusters(), 5u);
  auto open = init_state(g, 1.0, std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5});
  p = opinion_clusters(open, g);
  EXPECT_EQ(p.num_clusters(), 1u);
  EXPECT_EQ(p.internal_edges_original[0], 10u);
}

TEST(Clusters, IdsOrderedBySmallestMember) {
  auto g = Graph::from_edges(5, {{3, 4}, {1, 2}});
  SimState s;
  s.opinions = {0.5, 0.5, 0.5, 0.5, 0.5};
  s.confidence = {0.1, 0.1};
  EXPECT_EQ(opinion_clusters(s, g).assignment, (std::vector<std::uint32_t>{0, 1, 1, 2, 2}));
}

TEST(Classify, StrictOnePercent) {
  EXPECT_EQ(classify_clusters(sizes_only({998, 2}), 1000), (ClusterCounts{1, 1}));
  EXPECT_EQ(classify_clusters(sizes_only({990, 10}), 1000), (ClusterCounts{1, 1}));
  EXPECT_EQ(classify_clusters(sizes_only({989, 11}), 1000), (ClusterCounts{2, 0}));
  EXPECT_TRUE(classify_clusters(sizes_only({998, 2}), 1000).consensus());
}

TEST(Entropy, Examples) {
  EXPECT_EQ(shannon_entropy(sizes_only({50}), 50), 0.0);
  EXPECT_NEAR(shannon_entropy(sizes_only({5, 5}), 10), std::log(2.0), 1e-15);
  EXPECT_NEAR(shannon_entropy(sizes_only({998, 2}), 1000), 0.014427214862176116, 1e-15);
}

TEST(Entropy, BoundsFuzz) {
  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    const std::size_t r = 1 + rng() % 20;
    std::vector<std::size_t> sizes;
    std::size_t n = 0;
    for (std::size_t i = 0; i < r; ++i) {
      sizes.push_back(1 + rng() % 30);
      n += sizes.back();
    }
    const double h = shannon_entropy(sizes_only(sizes), n);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log(double(r)) + 1e-12);
  }
  EXPECT_NEAR(shannon_entropy(sizes_only({7, 7, 7, 7}), 28), std::log(4.0), 1e-14);
}

TEST(EdgeFractionTest, Examples) {
  // 4-cycle with one dropped edge, a 3-path fully kept, and an isolated node.
  auto g = Graph::from_edges(8, {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {4, 5}, {5, 6}});
  std::vector<EdgeId> eff{*g.find_edge(0, 1), *g.find_edge(1, 2), *g.find_edge(2, 3),
                          *g.find_edge(4, 5), *g.find_edge(5, 6)};
  auto p = clusters_from_edges(g, eff);
  auto w = weighted_edge_fraction(p, 8);
  EXPECT_FALSE(w.all_isolated);
  EXPECT_NEAR(w.value, 6.0 / 7.0, 1e-15);

  std::vector<EdgeId> all(g.num_edges());
  std::iota(all.begin(), all.end(), 0u);
  EXPECT_EQ(weighted_edge_fraction(clusters_from_edges(g, all), 8).value, 1.0);

  auto none = weighted_edge_fraction(clusters_from_edges(g, std::vector<EdgeId>{}), 8);
  EXPECT_TRUE(none.all_isolated);
  EXPECT_EQ(none.value, 0.0);
}

TEST(EdgeFractionTest, FullyEffectiveIsExactlyOne) {
  // Summing size/n per cluster can round away from 1 (e.g. 0.1 + 0.2).
  Rng rng(6);
  std::uniform_int_distribution<std::size_t> parts_dist(2, 13), size_dist(1, 300);
  for (int k = 0; k < 2000; ++k) {
    std::vector<std::size_t> sizes;
    std::size_t n = 0;
    const auto parts = parts_dist(rng);
    for (std::size_t r = 0; r < parts; ++r) {
      sizes.push_back(size_dist(rng));
      n += sizes.back();
    }
    auto p = sizes_only(sizes);
    ASSERT_EQ(weighted_edge_fraction(p, n).value, 1.0);
  }
}

TEST(Convergence, Examples) {
  auto g = generate_complete(4);
  EXPECT_TRUE(converged(init_state(g, 0.0, std::vector<double>{0.1, 0.4, 0.7, 0.9}), g, 1e-9));

  auto pair = generate_complete(2);
  EXPECT_TRUE(converged(init_state(pair, 0.5, std::vector<double>{0.5, 0.5 + 1e-7}), pair, 1e-6));
  EXPECT_FALSE(converged(init_state(pair, 0.5, std::vector<double>{0.1, 0.13}), pair, 0.02));
  EXPECT_THROW(converged(init_state(pair, 0.5, std::vector<double>{0.1, 0.13}), pair, 0.0),
               std::invalid_argument);
}

TEST(Convergence, ChainSpreadAcrossSmallGaps) {
  // Every effective gap is below tolerance but the cluster range is not.
  auto g = Graph::from_edges(4, {{0, 1}, {1, 2}, {2, 3}});
  auto s = init_state(g, 0.5, std::vector<double>{0.0, 0.015, 0.03, 0.045});
  EXPECT_NEAR(max_cluster_spread(opinion_clusters(s, g), s.opinions), 0.045, 1e-15);
  EXPECT_FALSE(converged(s, g, 0.02));
}

TEST(Metrics, ConsensusImpliesZeroEntropy) {
  auto g = generate_complete(10);
  auto s = init_state(g, 0.5, std::vector<double>(10, 0.3));
  auto p = opinion_clusters(s, g);
  auto c = classify_clusters(p, 10);
  EXPECT_EQ(c, (ClusterCounts{1, 0}));
  EXPECT_EQ(shannon_entropy(p, 10), 0.0);
}

TEST(Metrics, AgreeWithBruteForce) {
  Rng rng(1001);
  for (int inst = 0; inst < 300; ++inst) {
    const std::size_t n = 1 + rng() % 200;
    auto g = generate_er(n, uniform01(rng) * 0.2, rng);
    auto x = initial_opinions(n, rng);
    auto s = init_state(g, 0.0, x);
    for (auto& c : s.confidence) c = uniform01(rng) * 0.5;
    oracle::Dense d(g);
    auto comps = oracle::effective_components(d, s.opinions, s.confidence);
    auto p = opinion_clusters(s, g);
    ASSERT_EQ(members(p), comps);
    EXPECT_NEAR(shannon_entropy(p, n), oracle::entropy(comps, n), 1e-12);
    bool isolated = false;
    const double w = oracle::edge_fraction(d, s.opinions, s.confidence, comps, &isolated);
    const auto got = weighted_edge_fraction(p, n);
    EXPECT_EQ(got.all_isolated, isolated);
    EXPECT_NEAR(got.value, w, 1e-12);
  }
}
