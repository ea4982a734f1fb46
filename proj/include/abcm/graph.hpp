#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "abcm/random.hpp"

namespace abcm {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

/// Unordered node pair stored with u < v.
struct Edge {
  NodeId u;
  NodeId v;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// One adjacency entry: the neighbor and the id of the connecting edge.
struct Neighbor {
  NodeId node;
  EdgeId edge;
};

/// Immutable undirected simple graph.
///
/// Edges are kept in lexicographic (u, v) order with u < v, and the position
/// in that order is the edge id. Consequently the edges whose lower endpoint
/// is `u` occupy the contiguous id range `upper_edges(u)`, which the HK step
/// exploits. Adjacency lists are sorted by neighbor id.
class Graph {
 public:
  Graph() = default;

  /// Builds a graph from unordered pairs. Pairs may be given in either
  /// orientation and any order; they are canonicalized. Throws
  /// std::invalid_argument on self-edges, duplicates or out-of-range ids.
  static Graph from_edges(std::size_t num_nodes, std::vector<Edge> edges) {
    if (num_nodes >= kNoNode) throw std::invalid_argument("graph: too many nodes");
    if (edges.size() >= std::numeric_limits<EdgeId>::max())
      throw std::invalid_argument("graph: too many edges");
    for (auto& e : edges) {
      if (e.u == e.v)
        throw std::invalid_argument("graph: self-edge at node " + std::to_string(e.u));
      if (e.u >= num_nodes || e.v >= num_nodes)
        throw std::invalid_argument("graph: node id out of range");
      if (e.u > e.v) std::swap(e.u, e.v);
    }
    std::sort(edges.begin(), edges.end());
    if (auto dup = std::adjacent_find(edges.begin(), edges.end()); dup != edges.end())
      throw std::invalid_argument("graph: duplicate edge (" + std::to_string(dup->u) + ", " +
                                  std::to_string(dup->v) + ")");
    return Graph(num_nodes, std::move(edges));
  }

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  bool empty() const noexcept { return num_nodes_ == 0; }

  std::span<const Edge> edges() const noexcept { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_[e]; }

  std::span<const Neighbor> neighbors(NodeId i) const noexcept {
    return {adjacency_.data() + adj_offsets_[i], adjacency_.data() + adj_offsets_[i + 1]};
  }
  std::size_t degree(NodeId i) const noexcept { return adj_offsets_[i + 1] - adj_offsets_[i]; }

  /// Half-open id range [first, last) of edges (u, v) with v > u.
  std::pair<EdgeId, EdgeId> upper_edges(NodeId u) const noexcept {
    return {upper_offsets_[u], upper_offsets_[u + 1]};
  }

  /// Edge id joining i and j, if any. O(log deg).
  std::optional<EdgeId> find_edge(NodeId i, NodeId j) const {
    auto nbrs = neighbors(i);
    auto it = std::lower_bound(nbrs.begin(), nbrs.end(), j,
                               [](const Neighbor& n, NodeId id) { return n.node < id; });
    if (it == nbrs.end() || it->node != j) return std::nullopt;
    return it->edge;
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.num_nodes_ == b.num_nodes_ && a.edges_ == b.edges_;
  }

 private:
  Graph(std::size_t num_nodes, std::vector<Edge> sorted_edges)
      : num_nodes_(num_nodes), edges_(std::move(sorted_edges)) {
    adj_offsets_.assign(num_nodes_ + 1, 0);
    upper_offsets_.assign(num_nodes_ + 1, 0);
    for (const auto& e : edges_) {
      ++adj_offsets_[e.u + 1];
      ++adj_offsets_[e.v + 1];
      ++upper_offsets_[e.u + 1];
    }
    std::partial_sum(adj_offsets_.begin(), adj_offsets_.end(), adj_offsets_.begin());
    std::partial_sum(upper_offsets_.begin(), upper_offsets_.end(), upper_offsets_.begin());

    // Filling in edge-id order yields sorted adjacency: node i first receives
    // its lower neighbors (edges (j, i), ascending j), then its upper ones.
    adjacency_.resize(2 * edges_.size());
    std::vector<std::uint32_t> cursor(adj_offsets_.begin(), adj_offsets_.end() - 1);
    for (EdgeId id = 0; id < edges_.size(); ++id) {
      const auto& e = edges_[id];
      adjacency_[cursor[e.v]++] = {e.u, id};
    }
    for (EdgeId id = 0; id < edges_.size(); ++id) {
      const auto& e = edges_[id];
      adjacency_[cursor[e.u]++] = {e.v, id};
    }
  }

  std::size_t num_nodes_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::uint32_t> adj_offsets_{0};
  std::vector<Neighbor> adjacency_;
  std::vector<EdgeId> upper_offsets_{0};
};

// ---------------------------------------------------------------------------
// Generators

inline Graph generate_complete(std::size_t n) {
  if (n == 0) throw std::invalid_argument("generate_complete: n must be positive");
  std::vector<Edge> edges;
  edges.reserve(n * (n - 1) / 2);
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j) edges.push_back({i, j});
  return Graph::from_edges(n, std::move(edges));
}

inline void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument(std::string(what) + ": probability must lie in [0, 1]");
}

/// G(n, p): every pair of distinct nodes is joined independently with
/// probability p. Connectivity is not enforced.
inline Graph generate_er(std::size_t n, double p, Rng& rng) {
  if (n == 0) throw std::invalid_argument("generate_er: n must be positive");
  check_probability(p, "generate_er");
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (uniform01(rng) < p) edges.push_back({i, j});
  return Graph::from_edges(n, std::move(edges));
}

/// Two-block stochastic block model. Block A holds nodes [0, round(frac_a*n)).
struct SbmSpec {
  std::size_t n = 0;
  double frac_a = 0.75;
  double p_aa = 1.0;
  double p_bb = 1.0;
  double p_ab = 0.01;

  std::size_t block_a_size() const {
    return static_cast<std::size_t>(std::llround(frac_a * static_cast<double>(n)));
  }

  void validate() const {
    if (n == 0) throw std::invalid_argument("sbm: n must be positive");
    if (!(frac_a > 0.0 && frac_a < 1.0))
      throw std::invalid_argument("sbm: frac_a must lie in (0, 1)");
    check_probability(p_aa, "sbm p_aa");
    check_probability(p_bb, "sbm p_bb");
    check_probability(p_ab, "sbm p_ab");
  }
};

struct SbmGraph {
  Graph graph;
  std::size_t block_a_size = 0;

  /// 0 for block A, 1 for block B.
  int block_of(NodeId i) const { return i < block_a_size ? 0 : 1; }
};

inline SbmGraph generate_sbm(const SbmSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t a = spec.block_a_size();
  std::vector<Edge> edges;
  for (NodeId i = 0; i < spec.n; ++i) {
    for (NodeId j = i + 1; j < spec.n; ++j) {
      const bool i_in_a = i < a;
      const bool j_in_a = j < a;
      const double p = (i_in_a && j_in_a) ? spec.p_aa
                       : (!i_in_a && !j_in_a) ? spec.p_bb
                                              : spec.p_ab;
      if (uniform01(rng) < p) edges.push_back({i, j});
    }
  }
  return {Graph::from_edges(spec.n, std::move(edges)), a};
}

// ---------------------------------------------------------------------------
// Components

/// Component label per node; labels are dense and ordered by smallest member.
inline std::vector<std::uint32_t> connected_components(const Graph& g, std::size_t* count = nullptr) {
  std::vector<std::uint32_t> label(g.num_nodes(), kNoNode);
  std::vector<NodeId> stack;
  std::uint32_t next = 0;
  for (NodeId s = 0; s < g.num_nodes(); ++s) {
    if (label[s] != kNoNode) continue;
    label[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      NodeId v = stack.back();
      stack.pop_back();
      for (const auto& nb : g.neighbors(v)) {
        if (label[nb.node] == kNoNode) {
          label[nb.node] = next;
          stack.push_back(nb.node);
        }
      }
    }
    ++next;
  }
  if (count) *count = next;
  return label;
}

/// Induced subgraph on a component plus the id mappings in both directions.
struct Subgraph {
  Graph graph;
  std::vector<NodeId> old_to_new;  // kNoNode for dropped nodes
  std::vector<NodeId> new_to_old;
};

/// Largest connected component, relabeled densely in original id order.
/// Equal-size components are broken by the smallest original node id.
inline Subgraph largest_connected_component(const Graph& g) {
  if (g.empty()) throw std::invalid_argument("largest_connected_component: empty graph");
  std::size_t count = 0;
  auto label = connected_components(g, &count);
  std::vector<std::size_t> sizes(count, 0);
  for (auto l : label) ++sizes[l];
  // Labels are ordered by smallest member, so the first maximum wins ties.
  const auto best = static_cast<std::uint32_t>(
      std::max_element(sizes.begin(), sizes.end()) - sizes.begin());

  Subgraph out;
  out.old_to_new.assign(g.num_nodes(), kNoNode);
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    if (label[i] == best) {
      out.old_to_new[i] = static_cast<NodeId>(out.new_to_old.size());
      out.new_to_old.push_back(i);
    }
  }
  std::vector<Edge> edges;
  for (const auto& e : g.edges())
    if (label[e.u] == best) edges.push_back({out.old_to_new[e.u], out.old_to_new[e.v]});
  out.graph = Graph::from_edges(out.new_to_old.size(), std::move(edges));
  return out;
}

// ---------------------------------------------------------------------------
// Edge-list text format

/// Raised for malformed edge-list input; `line()` is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct LoadedGraph {
  Graph graph;
  std::size_t duplicate_edges = 0;
  std::vector<std::uint64_t> original_ids;  // indexed by dense node id
};

namespace detail {

inline std::uint64_t parse_node_id(const std::string& token, std::size_t line) {
  if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos)
    throw ParseError(line, "not a non-negative integer node id: '" + token + "'");
  try {
    return std::stoull(token);
  } catch (const std::out_of_range&) {
    throw ParseError(line, "node id out of range: '" + token + "'");
  }
}

}  // namespace detail

/// Reads "i j" pairs, one per line. '#' lines and blank lines are skipped.
/// Node ids are compacted to 0..N-1 in numeric order; repeated pairs (either
/// orientation) are collapsed and counted.
inline LoadedGraph load_edge_list(std::istream& in) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> raw;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    auto first = text.find_first_not_of(" \t");
    if (first == std::string::npos || text[first] == '#') continue;

    std::istringstream fields(text);
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(std::move(tok));
    if (tokens.size() != 2)
      throw ParseError(line_no, "expected 2 node ids, found " + std::to_string(tokens.size()));
    auto a = detail::parse_node_id(tokens[0], line_no);
    auto b = detail::parse_node_id(tokens[1], line_no);
    if (a == b) throw ParseError(line_no, "self-loop on node " + tokens[0]);
    raw.emplace_back(std::min(a, b), std::max(a, b));
  }

  LoadedGraph out;
  for (const auto& [a, b] : raw) {
    out.original_ids.push_back(a);
    out.original_ids.push_back(b);
  }
  std::sort(out.original_ids.begin(), out.original_ids.end());
  out.original_ids.erase(std::unique(out.original_ids.begin(), out.original_ids.end()),
                         out.original_ids.end());
  auto dense = [&](std::uint64_t id) {
    return static_cast<NodeId>(
        std::lower_bound(out.original_ids.begin(), out.original_ids.end(), id) -
        out.original_ids.begin());
  };

  std::vector<Edge> edges;
  edges.reserve(raw.size());
  for (const auto& [a, b] : raw) edges.push_back({dense(a), dense(b)});
  std::sort(edges.begin(), edges.end());
  auto last = std::unique(edges.begin(), edges.end());
  out.duplicate_edges = static_cast<std::size_t>(edges.end() - last);
  edges.erase(last, edges.end());
  out.graph = Graph::from_edges(out.original_ids.size(), std::move(edges));
  return out;
}

/// One "i j" line per edge (i < j) in lexicographic order.
inline void write_edge_list(const Graph& g, std::ostream& out) {
  for (const auto& e : g.edges()) out << e.u << ' ' << e.v << '\n';
}

}  // namespace abcm
