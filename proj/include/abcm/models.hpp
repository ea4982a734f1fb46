#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "abcm/graph.hpp"
#include "abcm/random.hpp"

namespace abcm {

enum class ModelKind { HK, DW };

inline std::string_view to_string(ModelKind kind) { return kind == ModelKind::HK ? "HK" : "DW"; }

inline ModelKind parse_model_kind(std::string_view text) {
  if (text == "HK") return ModelKind::HK;
  if (text == "DW") return ModelKind::DW;
  throw std::invalid_argument("unknown model kind '" + std::string(text) + "' (expected HK or DW)");
}

/// BCM parameters. `mu` is the DW compromise parameter and must be absent or
/// ignored for HK.
struct ModelParams {
  ModelKind kind = ModelKind::HK;
  double gamma = 0.0;
  double delta = 1.0;
  double c0 = 0.1;
  std::optional<double> mu;

  void validate() const {
    auto unit = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
    };
    unit(gamma, "gamma");
    unit(delta, "delta");
    unit(c0, "c0");
    if (kind == ModelKind::DW) {
      if (!mu) throw std::invalid_argument("mu is required for the DW model");
      if (!(*mu > 0.0 && *mu <= 0.5)) throw std::invalid_argument("mu must lie in (0, 0.5]");
    }
  }

  /// (gamma, delta) = (0, 1) leaves every confidence bound at c0.
  bool is_baseline() const noexcept { return gamma == 0.0 && delta == 1.0; }
};

/// Opinions per node and one confidence bound per undirected edge.
struct SimState {
  std::uint64_t t = 0;
  std::vector<double> opinions;
  std::vector<double> confidence;

  friend bool operator==(const SimState&, const SimState&) = default;
};

inline SimState init_state(const Graph& g, double c0, std::span<const double> opinions) {
  if (opinions.size() != g.num_nodes())
    throw std::invalid_argument("init_state: opinion vector length " +
                                std::to_string(opinions.size()) + " does not match " +
                                std::to_string(g.num_nodes()) + " nodes");
  if (!(c0 >= 0.0 && c0 <= 1.0)) throw std::invalid_argument("init_state: c0 must lie in [0, 1]");
  for (double x : opinions)
    if (!(x >= 0.0 && x <= 1.0))
      throw std::invalid_argument("init_state: opinions must lie in [0, 1]");
  SimState s;
  s.opinions.assign(opinions.begin(), opinions.end());
  s.confidence.assign(g.num_edges(), c0);
  return s;
}

/// Dyads interact iff their opinion gap is strictly below the bound.
inline bool receptive(double xi, double xj, double c) noexcept { return std::abs(xi - xj) < c; }

inline double confidence_update(double c, bool interacted, double gamma, double delta) noexcept {
  return interacted ? c + gamma * (1.0 - c) : delta * c;
}

/// Uniform edge id in [0, m). Shared by the adaptive and baseline DW steps so
/// equal seeds select equal edges.
inline EdgeId select_edge(Rng& rng, std::size_t m) {
  return static_cast<EdgeId>(std::uniform_int_distribution<std::size_t>(0, m - 1)(rng));
}

/// Reusable buffers for hk_step.
struct HkScratch {
  std::vector<double> sums;
  std::vector<std::uint32_t> counts;
};

/// One synchronous round of the adaptive-confidence HK model.
///
/// Single pass over the edges in id order. Node u's self term is added once
/// every edge (j, u) with j < u has been seen, so each node's mean is summed
/// in ascending node-id order. All comparisons use time-t opinions and bounds.
inline void hk_step(SimState& s, const Graph& g, const ModelParams& p, HkScratch& scratch) {
  if (p.kind != ModelKind::HK) throw std::invalid_argument("hk_step: params are not HK");
  const std::size_t n = g.num_nodes();
  auto& sums = scratch.sums;
  auto& counts = scratch.counts;
  sums.assign(n, 0.0);
  counts.assign(n, 0);

  const double* x = s.opinions.data();
  double* c = s.confidence.data();
  const Edge* edges = g.edges().data();
  const double gamma = p.gamma;
  const double delta = p.delta;

  for (NodeId u = 0; u < n; ++u) {
    const double xu = x[u];
    double su = sums[u] + xu;
    std::uint32_t cu = counts[u] + 1;
    const auto [first, last] = g.upper_edges(u);
    for (EdgeId e = first; e < last; ++e) {
      const NodeId v = edges[e].v;
      const double xv = x[v];
      const double ce = c[e];
      if (std::abs(xu - xv) < ce) {
        su += xv;
        ++cu;
        sums[v] += xu;
        ++counts[v];
        c[e] = ce + gamma * (1.0 - ce);
      } else {
        c[e] = delta * ce;
      }
    }
    sums[u] = su;
    counts[u] = cu;
  }
  for (NodeId i = 0; i < n; ++i) s.opinions[i] = sums[i] / counts[i];
  ++s.t;
}

inline void hk_step(SimState& s, const Graph& g, const ModelParams& p) {
  HkScratch scratch;
  hk_step(s, g, p, scratch);
}

/// Outcome of one DW selection.
struct StepRecord {
  EdgeId edge = 0;
  bool interacted = false;
};

/// One asynchronous step of the adaptive-confidence DW model: a uniformly
/// random edge is selected and only its endpoints and bound may change.
inline StepRecord dw_step(SimState& s, const Graph& g, const ModelParams& p, Rng& rng) {
  if (p.kind != ModelKind::DW) throw std::invalid_argument("dw_step: params are not DW");
  if (g.num_edges() == 0) throw std::invalid_argument("dw_step: graph has no edges");
  const EdgeId e = select_edge(rng, g.num_edges());
  const auto [i, j] = g.edge(e);
  const double xi = s.opinions[i];
  const double xj = s.opinions[j];
  double& c = s.confidence[e];
  const bool interacted = receptive(xi, xj, c);
  if (interacted) {
    const double mu = *p.mu;
    s.opinions[i] = xi + mu * (xj - xi);
    s.opinions[j] = xj + mu * (xi - xj);
  }
  c = confidence_update(c, interacted, p.gamma, p.delta);
  ++s.t;
  return {e, interacted};
}

/// Non-adaptive models with one fixed bound shared by every dyad. These are
/// written independently of the adaptive steps and serve as their oracle at
/// (gamma, delta) = (0, 1).
namespace baseline {

/// Classic HK round with bound `c`; state.confidence is left untouched.
inline void hk_step(SimState& s, const Graph& g, double c) {
  const std::size_t n = g.num_nodes();
  std::vector<double> next(n);
  for (NodeId i = 0; i < n; ++i) {
    const double xi = s.opinions[i];
    double sum = 0.0;
    std::uint32_t count = 0;
    bool self_added = false;
    for (const auto& nb : g.neighbors(i)) {
      if (!self_added && nb.node > i) {
        sum += xi;
        ++count;
        self_added = true;
      }
      const double xj = s.opinions[nb.node];
      if (std::abs(xi - xj) < c) {
        sum += xj;
        ++count;
      }
    }
    if (!self_added) {
      sum += xi;
      ++count;
    }
    next[i] = sum / count;
  }
  s.opinions = std::move(next);
  ++s.t;
}

/// Classic DW step with bound `c` and compromise `mu`.
inline StepRecord dw_step(SimState& s, const Graph& g, double c, double mu, Rng& rng) {
  if (g.num_edges() == 0) throw std::invalid_argument("baseline::dw_step: graph has no edges");
  const EdgeId e = select_edge(rng, g.num_edges());
  const Edge& edge = g.edge(e);
  auto& x = s.opinions;
  const double gap = x[edge.v] - x[edge.u];
  const bool interacted = std::abs(gap) < c;
  if (interacted) {
    const double xu = x[edge.u];
    const double xv = x[edge.v];
    x[edge.u] = xu + mu * (xv - xu);
    x[edge.v] = xv + mu * (xu - xv);
  }
  ++s.t;
  return {e, interacted};
}

}  // namespace baseline

/// Dispatches to the baseline step matching `p.kind` using the fixed bound p.c0.
inline void baseline_step(SimState& s, const Graph& g, const ModelParams& p, Rng& rng) {
  if (p.kind == ModelKind::HK)
    baseline::hk_step(s, g, p.c0);
  else
    baseline::dw_step(s, g, p.c0, *p.mu, rng);
}

}  // namespace abcm
