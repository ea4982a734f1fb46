#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "abcm/graph.hpp"
#include "abcm/models.hpp"

namespace abcm {

/// Ids of the edges whose endpoints can currently influence each other.
inline std::vector<EdgeId> effective_edges(const SimState& s, const Graph& g) {
  std::vector<EdgeId> out;
  const auto edges = g.edges();
  for (EdgeId e = 0; e < edges.size(); ++e)
    if (receptive(s.opinions[edges[e].u], s.opinions[edges[e].v], s.confidence[e]))
      out.push_back(e);
  return out;
}

/// Union-find with path halving and union by size.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0u);
  }

  std::uint32_t find(std::uint32_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }

  bool unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
};

/// Opinion clusters: connected components of the effective graph.
struct ClusterProfile {
  std::vector<std::uint32_t> assignment;  // cluster id per node
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> internal_edges_original;
  std::vector<std::size_t> internal_edges_effective;

  std::size_t num_clusters() const noexcept { return sizes.size(); }
};

/// Builds a profile from an arbitrary set of effective edge ids. Cluster ids
/// are ordered by smallest member node.
inline ClusterProfile clusters_from_edges(const Graph& g, std::span<const EdgeId> effective) {
  const std::size_t n = g.num_nodes();
  DisjointSets sets(n);
  for (EdgeId e : effective) sets.unite(g.edge(e).u, g.edge(e).v);

  ClusterProfile p;
  p.assignment.assign(n, kNoNode);
  std::vector<std::uint32_t> id_of_root(n, kNoNode);
  for (NodeId i = 0; i < n; ++i) {
    auto root = sets.find(i);
    if (id_of_root[root] == kNoNode) {
      id_of_root[root] = static_cast<std::uint32_t>(p.sizes.size());
      p.sizes.push_back(0);
    }
    p.assignment[i] = id_of_root[root];
    ++p.sizes[p.assignment[i]];
  }
  p.internal_edges_original.assign(p.sizes.size(), 0);
  p.internal_edges_effective.assign(p.sizes.size(), 0);
  for (const auto& e : g.edges())
    if (p.assignment[e.u] == p.assignment[e.v]) ++p.internal_edges_original[p.assignment[e.u]];
  for (EdgeId e : effective) ++p.internal_edges_effective[p.assignment[g.edge(e).u]];
  return p;
}

inline ClusterProfile opinion_clusters(const SimState& s, const Graph& g) {
  const auto eff = effective_edges(s, g);
  return clusters_from_edges(g, eff);
}

struct ClusterCounts {
  std::size_t major = 0;
  std::size_t minor = 0;

  bool consensus() const noexcept { return major == 1; }
  friend bool operator==(const ClusterCounts&, const ClusterCounts&) = default;
};

/// Major clusters hold strictly more than 1% of the n nodes.
inline ClusterCounts classify_clusters(const ClusterProfile& profile, std::size_t n) {
  ClusterCounts out;
  // size > n/100  <=>  100*size > n, exact in integers.
  for (auto size : profile.sizes) (100 * size > n ? out.major : out.minor)++;
  return out;
}

/// Shannon entropy (natural log) of the cluster-size distribution.
inline double shannon_entropy(const ClusterProfile& profile, std::size_t n) {
  double h = 0.0;
  const double total = static_cast<double>(n);
  for (auto size : profile.sizes) {
    if (size == 0) continue;
    const double q = static_cast<double>(size) / total;
    h -= q * std::log(q);
  }
  return h < 0.0 ? 0.0 : h;
}

struct EdgeFraction {
  double value = 0.0;
  bool all_isolated = false;  // every node is a singleton; value is the sentinel 0
};

/// Size-weighted mean, over non-singleton clusters, of the fraction of each
/// cluster's original internal edges that are still effective.
inline EdgeFraction weighted_edge_fraction(const ClusterProfile& profile, std::size_t n) {
  std::size_t isolated = 0;
  for (std::size_t r = 0; r < profile.num_clusters(); ++r)
    if (profile.internal_edges_original[r] == 0) isolated += profile.sizes[r];
  if (isolated == n) return {0.0, true};

  // Divide once at the end: when every cluster is fully effective the
  // numerator is an exact integer equal to the denominator, so W is exactly 1.
  double num = 0.0;
  for (std::size_t r = 0; r < profile.num_clusters(); ++r) {
    const auto orig = profile.internal_edges_original[r];
    if (orig == 0) continue;
    const auto eff = profile.internal_edges_effective[r];
    const double size = static_cast<double>(profile.sizes[r]);
    num += eff == orig ? size : size * static_cast<double>(eff) / static_cast<double>(orig);
  }
  return {num / static_cast<double>(n - isolated), false};
}

/// Largest within-cluster opinion range (max - min).
inline double max_cluster_spread(const ClusterProfile& profile, std::span<const double> opinions) {
  const std::size_t r = profile.num_clusters();
  std::vector<double> lo(r, std::numeric_limits<double>::infinity());
  std::vector<double> hi(r, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < opinions.size(); ++i) {
    const auto k = profile.assignment[i];
    lo[k] = std::min(lo[k], opinions[i]);
    hi[k] = std::max(hi[k], opinions[i]);
  }
  double spread = 0.0;
  for (std::size_t k = 0; k < r; ++k) spread = std::max(spread, hi[k] - lo[k]);
  return spread;
}

/// Stopping criterion: every cluster's opinion range is below `tolerance`.
inline bool converged(const SimState& s, const Graph& g, double tolerance) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("converged: tolerance must be positive");
  // Cheap rejection: an effective edge whose gap already reaches the
  // tolerance puts both endpoints in one cluster with range >= tolerance.
  const auto edges = g.edges();
  const double* x = s.opinions.data();
  const double* c = s.confidence.data();
  for (EdgeId e = 0; e < edges.size(); ++e) {
    const double gap = std::abs(x[edges[e].u] - x[edges[e].v]);
    if (gap < c[e] && gap >= tolerance) return false;
  }
  return max_cluster_spread(opinion_clusters(s, g), s.opinions) < tolerance;
}

}  // namespace abcm
