#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "abcm/graph.hpp"
#include "abcm/metrics.hpp"
#include "abcm/models.hpp"

namespace abcm {

/// Sampled confidence-bound trajectory of one dyad.
struct ConfidenceTrace {
  EdgeId edge = 0;
  Edge endpoints{};
  std::vector<std::uint64_t> times;
  std::vector<double> values;
  bool same_cluster = false;  // endpoints share a final cluster

  void push(std::uint64_t t, double c) {
    if (!times.empty() && t <= times.back())
      throw std::invalid_argument("ConfidenceTrace: times must be strictly increasing");
    times.push_back(t);
    values.push_back(c);
  }
};

enum class ConfidenceLimit { Zero, One, Undetermined };

inline const char* to_string(ConfidenceLimit l) {
  switch (l) {
    case ConfidenceLimit::Zero: return "zero";
    case ConfidenceLimit::One: return "one";
    default: return "undetermined";
  }
}

/// Classifies the final sample: <= eps is Zero, >= 1 - eps is One.
inline ConfidenceLimit classify_confidence_limit(const ConfidenceTrace& trace, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw std::invalid_argument("eps must lie in (0, 0.5)");
  if (trace.values.empty()) return ConfidenceLimit::Undetermined;
  const double last = trace.values.back();
  if (last <= eps) return ConfidenceLimit::Zero;
  if (last >= 1.0 - eps) return ConfidenceLimit::One;
  return ConfidenceLimit::Undetermined;
}

enum class MonotoneMode { Strict, Weak };
enum class Direction { Increasing, Decreasing, Constant };

struct MonotoneOnset {
  std::uint64_t time = 0;
  std::size_t index = 0;
  Direction direction = Direction::Constant;
};

/// Update rates that produced a trace. Used to recognize floating-point
/// saturation: a bound whose next update rounds back to itself.
struct UpdateRates {
  double gamma = 0.0;
  double delta = 1.0;
};

/// Earliest sample from which the rest of the trace is monotone.
///
/// Strict mode requires every consecutive pair to move, except at a
/// floating-point fixed point of the update in the direction of travel. In
/// exact arithmetic c + gamma(1 - c) and delta c approach 1 and 0 without
/// reaching them; in double precision they stall once the step drops below
/// half an ulp. Without `rates` only exact 1 and 0 count as stalled. Weak mode
/// accepts any repeats. Returns nullopt for traces with fewer than two samples
/// or no monotone final pair.
inline std::optional<MonotoneOnset> eventual_monotonicity_onset(const ConfidenceTrace& trace, MonotoneMode mode,
                                                                const std::optional<UpdateRates>& rates = {}) {
  const auto& v = trace.values;
  if (v.size() < 2) return std::nullopt;
  const bool strict = mode == MonotoneMode::Strict;

  auto stalled_up = [&](double a) {
    return rates ? confidence_update(a, true, rates->gamma, rates->delta) == a : a == 1.0;
  };
  auto stalled_down = [&](double a) {
    return rates ? confidence_update(a, false, rates->gamma, rates->delta) == a : a == 0.0;
  };
  auto up_ok = [&](double a, double b) { return strict ? (a < b || (a == b && stalled_up(a))) : a <= b; };
  auto down_ok = [&](double a, double b) { return strict ? (a > b || (a == b && stalled_down(a))) : a >= b; };

  std::size_t up_start = v.size() - 1;
  while (up_start > 0 && up_ok(v[up_start - 1], v[up_start])) --up_start;
  std::size_t down_start = v.size() - 1;
  while (down_start > 0 && down_ok(v[down_start - 1], v[down_start])) --down_start;

  const std::size_t last = v.size() - 1;
  if (up_start == last && down_start == last) return std::nullopt;

  MonotoneOnset out;
  if (up_start < down_start) {
    out.index = up_start;
    out.direction = Direction::Increasing;
  } else if (down_start < up_start) {
    out.index = down_start;
    out.direction = Direction::Decreasing;
  } else {
    out.index = up_start;
    out.direction = Direction::Constant;
  }
  out.time = trace.times[out.index];
  return out;
}

/// Effective edge sets over time, stored only where they change.
struct EffectiveGraphHistory {
  struct Change {
    std::size_t sample = 0;  // index into `times`
    std::vector<Edge> edges;  // sorted
  };

  std::vector<std::uint64_t> times;
  std::vector<Change> changes;

  void record(std::uint64_t t, std::vector<Edge> edges) {
    if (!times.empty() && t <= times.back())
      throw std::invalid_argument("EffectiveGraphHistory: times must be strictly increasing");
    std::sort(edges.begin(), edges.end());
    if (changes.empty() || changes.back().edges != edges)
      changes.push_back({times.size(), std::move(edges)});
    times.push_back(t);
  }

  const std::vector<Edge>& final_edges() const {
    if (changes.empty()) throw std::logic_error("EffectiveGraphHistory: no samples");
    return changes.back().edges;
  }
};

inline std::vector<Edge> effective_edge_pairs(const SimState& s, const Graph& g) {
  std::vector<Edge> out;
  for (EdgeId e : effective_edges(s, g)) out.push_back(g.edge(e));
  return out;
}

/// Earliest sampled time after which the edge set never changes. A change at
/// the final sample leaves fixation unobserved.
inline std::optional<std::uint64_t> effective_graph_fixation(const EffectiveGraphHistory& h) {
  if (h.times.empty()) return std::nullopt;
  const auto& last = h.changes.back();
  if (last.sample != 0 && last.sample == h.times.size() - 1) return std::nullopt;
  return h.times[last.sample];
}

/// True iff no edge of the final effective graph joins two different clusters.
inline bool cross_cluster_edge_check(const EffectiveGraphHistory& h,
                                     std::span<const std::uint32_t> final_assignment) {
  for (const auto& e : h.final_edges()) {
    if (e.u >= final_assignment.size() || e.v >= final_assignment.size())
      throw std::invalid_argument("cross_cluster_edge_check: edge outside assignment");
    if (final_assignment[e.u] != final_assignment[e.v]) return false;
  }
  return true;
}

inline bool cross_cluster_edge_check(const EffectiveGraphHistory& h, const ClusterProfile& final_profile) {
  return cross_cluster_edge_check(h, final_profile.assignment);
}

/// Everything recorded while a converged run is continued past convergence.
struct RunTraces {
  ModelKind kind = ModelKind::HK;
  std::optional<UpdateRates> rates;
  std::uint64_t window_start = 0;  // convergence time
  std::uint64_t window_end = 0;
  std::vector<ConfidenceTrace> confidence;
  EffectiveGraphHistory effective;
  std::vector<std::uint32_t> final_assignment;  // clusters at window_end
};

struct CheckOptions {
  double eps = 1e-3;
  /// A monotone suffix counts as settled when it spans at least this
  /// fraction of the recorded window.
  double settle_fraction = 0.5;
};

/// Aggregated verdicts of the limit-behavior checks for one run.
struct TheoremVerdict {
  ModelKind kind = ModelKind::HK;
  std::size_t traces = 0;
  std::size_t limit_zero = 0;
  std::size_t limit_one = 0;
  std::size_t limit_undetermined = 0;
  std::size_t with_onset = 0;
  std::size_t settled = 0;
  std::size_t cross_cluster_traces = 0;
  std::size_t cross_cluster_decreasing = 0;
  std::optional<std::uint64_t> fixation;
  bool cross_cluster_ok = true;

  bool limits_ok() const { return limit_undetermined == 0; }
  bool onsets_ok() const { return settled == traces; }
  double settled_fraction() const { return traces == 0 ? 1.0 : double(settled) / double(traces); }
};

inline TheoremVerdict check_theorems(const RunTraces& run, const CheckOptions& opts = {}) {
  TheoremVerdict v;
  v.kind = run.kind;
  const auto mode = run.kind == ModelKind::HK ? MonotoneMode::Strict : MonotoneMode::Weak;
  const double span = static_cast<double>(run.window_end - run.window_start);

  for (const auto& tr : run.confidence) {
    ++v.traces;
    switch (classify_confidence_limit(tr, opts.eps)) {
      case ConfidenceLimit::Zero: ++v.limit_zero; break;
      case ConfidenceLimit::One: ++v.limit_one; break;
      default: ++v.limit_undetermined; break;
    }
    if (!tr.same_cluster) ++v.cross_cluster_traces;
    const auto onset = eventual_monotonicity_onset(tr, mode, run.rates);
    if (!onset) continue;
    ++v.with_onset;
    const double covered = static_cast<double>(tr.times.back() - onset->time);
    if (span <= 0.0 || covered >= opts.settle_fraction * span) ++v.settled;
    if (!tr.same_cluster && onset->direction != Direction::Increasing) ++v.cross_cluster_decreasing;
  }
  if (!run.effective.times.empty()) {
    v.fixation = effective_graph_fixation(run.effective);
    v.cross_cluster_ok = cross_cluster_edge_check(run.effective, run.final_assignment);
  }
  return v;
}

}  // namespace abcm
