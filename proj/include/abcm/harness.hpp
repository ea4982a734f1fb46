#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "abcm/format.hpp"
#include "abcm/graph.hpp"
#include "abcm/metrics.hpp"
#include "abcm/models.hpp"
#include "abcm/properties.hpp"
#include "abcm/random.hpp"

namespace abcm {

inline constexpr double kHkTolerance = 1e-6;
inline constexpr double kDwTolerance = 0.02;
inline constexpr std::uint64_t kDefaultBailout = 1'000'000;

inline double default_tolerance(ModelKind kind) {
  return kind == ModelKind::HK ? kHkTolerance : kDwTolerance;
}

/// HK checks every round; DW every |E| selections.
inline std::uint64_t default_check_interval(ModelKind kind, const Graph& g) {
  return kind == ModelKind::HK ? 1 : std::max<std::uint64_t>(1, g.num_edges());
}

/// n independent Uniform[0, 1) draws.
inline std::vector<double> initial_opinions(std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("initial_opinions: n must be positive");
  std::vector<double> x(n);
  for (auto& v : x) v = uniform01(rng);
  return x;
}

/// Recording of confidence traces and effective graphs after convergence.
struct TraceOptions {
  bool enabled = false;
  /// Extra steps past convergence; 0 picks 500 rounds (a DW round is |E| selections).
  std::uint64_t horizon = 0;
  /// At most this many edges get a confidence trace, spread evenly over ids.
  std::size_t max_traced_edges = 5000;
  /// DW: all traced bounds and the effective graph are sampled every `stride`
  /// selections (0 picks |E|), in addition to whenever a traced edge is selected.
  std::uint64_t dw_stride = 0;
};

struct RunConfig {
  ModelParams params;
  double tolerance = 0.0;  // 0 picks the model default
  std::uint64_t bailout = kDefaultBailout;
  std::uint64_t check_interval = 0;  // 0 picks the model default
  std::uint64_t seed = 0;
  bool run_to_convergence = false;
  /// At bailout, clusters count as determinable when no cluster's opinion
  /// range exceeds this multiple of the tolerance.
  double indeterminate_factor = 10.0;
  TraceOptions traces;

  double effective_tolerance() const {
    return tolerance > 0.0 ? tolerance : default_tolerance(params.kind);
  }

  void validate() const {
    params.validate();
    if (tolerance < 0.0) throw std::invalid_argument("tolerance must be positive");
    if (bailout < 1) throw std::invalid_argument("bailout must be at least 1");
    if (!(indeterminate_factor > 0.0))
      throw std::invalid_argument("indeterminate_factor must be positive");
  }
};

/// Where a run's graph came from.
struct GraphInfo {
  std::string kind = "custom";
  std::uint32_t id = 0;
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t source_nodes = 0;  // before LCC extraction
  std::size_t source_edges = 0;
};

struct ClusterMetrics {
  std::size_t n_major = 0;
  std::size_t n_minor = 0;
  double entropy = 0.0;
  double w_fraction = 0.0;
  bool w_all_isolated = false;
};

struct RunResult {
  ModelParams params;
  GraphInfo graph;
  std::uint32_t trial = 0;
  std::uint64_t seed = 0;
  bool converged = false;
  bool bailed_out = false;
  bool clusters_determinable = false;
  std::uint64_t T = 0;
  std::optional<ClusterMetrics> metrics;  // present iff clusters_determinable
  double tolerance = 0.0;
  std::uint64_t check_interval = 0;
  double final_spread = 0.0;
  double wall_seconds = 0.0;
  std::vector<std::uint32_t> final_assignment;
  std::optional<RunTraces> traces;
};

namespace detail {

inline void advance(SimState& s, const Graph& g, const ModelParams& p, Rng& rng, HkScratch& scratch,
                    std::uint64_t steps) {
  if (p.kind == ModelKind::HK) {
    for (std::uint64_t k = 0; k < steps; ++k) hk_step(s, g, p, scratch);
  } else {
    for (std::uint64_t k = 0; k < steps; ++k) dw_step(s, g, p, rng);
  }
}

inline std::vector<EdgeId> traced_edge_ids(const Graph& g, std::size_t limit) {
  const std::size_t m = g.num_edges();
  std::vector<EdgeId> ids;
  if (m <= limit) {
    for (EdgeId e = 0; e < m; ++e) ids.push_back(e);
  } else {
    for (std::size_t k = 0; k < limit; ++k) ids.push_back(static_cast<EdgeId>(k * m / limit));
  }
  return ids;
}

/// Continues a converged state for the trace horizon while recording.
inline RunTraces record_traces(SimState s, const Graph& g, const ModelParams& p, Rng& rng,
                               const TraceOptions& opts) {
  RunTraces out;
  out.kind = p.kind;
  out.rates = UpdateRates{p.gamma, p.delta};
  out.window_start = s.t;
  const std::uint64_t horizon =
      opts.horizon ? opts.horizon : (p.kind == ModelKind::HK ? 500 : 500 * g.num_edges());

  const auto ids = traced_edge_ids(g, opts.max_traced_edges);
  std::vector<std::int64_t> slot(g.num_edges(), -1);
  out.confidence.resize(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    out.confidence[k].edge = ids[k];
    out.confidence[k].endpoints = g.edge(ids[k]);
    slot[ids[k]] = static_cast<std::int64_t>(k);
  }
  auto sample_all = [&] {
    for (std::size_t k = 0; k < ids.size(); ++k) {
      auto& tr = out.confidence[k];
      if (tr.times.empty() || tr.times.back() != s.t) tr.push(s.t, s.confidence[ids[k]]);
    }
    out.effective.record(s.t, effective_edge_pairs(s, g));
  };

  sample_all();
  const std::uint64_t end = s.t + horizon;
  if (p.kind == ModelKind::HK) {
    HkScratch scratch;
    while (s.t < end) {
      hk_step(s, g, p, scratch);
      sample_all();
    }
  } else if (g.num_edges() > 0) {
    const std::uint64_t stride = opts.dw_stride ? opts.dw_stride : g.num_edges();
    while (s.t < end) {
      const auto rec = dw_step(s, g, p, rng);
      if (slot[rec.edge] >= 0) out.confidence[slot[rec.edge]].push(s.t, s.confidence[rec.edge]);
      if ((s.t - out.window_start) % stride == 0 || s.t == end) sample_all();
    }
  }
  out.window_end = s.t;

  const auto profile = opinion_clusters(s, g);
  out.final_assignment = profile.assignment;
  for (auto& tr : out.confidence)
    tr.same_cluster = profile.assignment[tr.endpoints.u] == profile.assignment[tr.endpoints.v];
  return out;
}

}  // namespace detail

/// Runs one simulation until the stopping criterion holds or bailout.
inline RunResult run_single(const Graph& g, std::span<const double> x0, const RunConfig& cfg) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  const auto& p = cfg.params;

  RunResult r;
  r.params = p;
  r.seed = cfg.seed;
  r.tolerance = cfg.effective_tolerance();
  r.check_interval = cfg.check_interval ? cfg.check_interval : default_check_interval(p.kind, g);
  r.graph.nodes = r.graph.source_nodes = g.num_nodes();
  r.graph.edges = r.graph.source_edges = g.num_edges();

  SimState s = init_state(g, p.c0, x0);
  Rng rng(cfg.seed);
  HkScratch scratch;

  bool done = converged(s, g, r.tolerance);
  while (!done) {
    std::uint64_t steps = r.check_interval;
    if (!cfg.run_to_convergence) {
      if (s.t >= cfg.bailout) break;
      steps = std::min(steps, cfg.bailout - s.t);
    }
    detail::advance(s, g, p, rng, scratch, steps);
    done = converged(s, g, r.tolerance);
  }

  r.T = s.t;
  r.converged = done;
  r.bailed_out = !done;
  const auto profile = opinion_clusters(s, g);
  r.final_spread = max_cluster_spread(profile, s.opinions);
  r.clusters_determinable = done || r.final_spread <= cfg.indeterminate_factor * r.tolerance;
  if (r.clusters_determinable) {
    ClusterMetrics m;
    const auto counts = classify_clusters(profile, g.num_nodes());
    m.n_major = counts.major;
    m.n_minor = counts.minor;
    m.entropy = shannon_entropy(profile, g.num_nodes());
    const auto w = weighted_edge_fraction(profile, g.num_nodes());
    m.w_fraction = w.value;
    m.w_all_isolated = w.all_isolated;
    r.metrics = m;
  }
  r.final_assignment = profile.assignment;

  if (cfg.traces.enabled && done) r.traces = detail::record_traces(s, g, p, rng, cfg.traces);

  r.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return r;
}

// ---------------------------------------------------------------------------
// Sweeps

struct GraphSpec {
  std::string kind = "complete";  // complete | er | sbm | edgelist
  std::size_t n = 0;
  double p = 0.0;  // er
  SbmSpec sbm;     // sbm (sbm.n mirrors n)
  std::string path;  // edgelist
  bool largest_component = true;  // er, sbm, edgelist

  friend bool operator==(const GraphSpec& a, const GraphSpec& b) {
    return a.kind == b.kind && a.n == b.n && a.p == b.p && a.sbm.frac_a == b.sbm.frac_a &&
           a.sbm.p_aa == b.sbm.p_aa && a.sbm.p_bb == b.sbm.p_bb && a.sbm.p_ab == b.sbm.p_ab &&
           a.path == b.path && a.largest_component == b.largest_component;
  }
};

struct Grid {
  std::vector<double> gamma;
  std::vector<double> delta;
  std::vector<double> c0;
  std::vector<double> mu;  // DW only

  friend bool operator==(const Grid&, const Grid&) = default;
};

struct SweepConfig {
  ModelKind model = ModelKind::HK;
  GraphSpec graph;
  Grid grid;
  std::uint32_t graphs_per_setting = 1;
  std::uint32_t opinions_per_graph = 10;
  std::uint64_t base_seed = 0;
  std::optional<double> tolerance;
  std::uint64_t bailout = kDefaultBailout;
  std::optional<std::uint64_t> check_interval;
  bool run_to_convergence = false;
  double indeterminate_factor = 10.0;
  std::string output_dir = "results";

  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;

  /// Parameter sets in grid order: gamma, then delta, then c0, then mu.
  std::vector<ModelParams> grid_points() const {
    std::vector<ModelParams> out;
    const std::vector<std::optional<double>> mus =
        model == ModelKind::DW ? std::vector<std::optional<double>>(grid.mu.begin(), grid.mu.end())
                               : std::vector<std::optional<double>>{std::nullopt};
    for (double g : grid.gamma)
      for (double d : grid.delta)
        for (double c : grid.c0)
          for (const auto& m : mus) out.push_back({model, g, d, c, m});
    return out;
  }

  std::size_t total_runs() const {
    return std::size_t{graphs_per_setting} * opinions_per_graph * grid_points().size();
  }

  RunConfig run_config(const ModelParams& p) const {
    RunConfig rc;
    rc.params = p;
    rc.tolerance = tolerance.value_or(0.0);
    rc.bailout = bailout;
    rc.check_interval = check_interval.value_or(0);
    rc.run_to_convergence = run_to_convergence;
    rc.indeterminate_factor = indeterminate_factor;
    return rc;
  }

  void validate() const {
    if (grid.gamma.empty() || grid.delta.empty() || grid.c0.empty())
      throw std::invalid_argument("grid: gamma, delta and c0 must be nonempty");
    if (model == ModelKind::DW && grid.mu.empty())
      throw std::invalid_argument("grid: mu is required for DW");
    if (model == ModelKind::HK && !grid.mu.empty())
      throw std::invalid_argument("grid: mu is only valid for DW");
    if (graphs_per_setting < 1 || opinions_per_graph < 1)
      throw std::invalid_argument("graphs_per_setting and opinions_per_graph must be >= 1");
    if (bailout < 1) throw std::invalid_argument("bailout must be at least 1");
    if (check_interval && *check_interval < 1)
      throw std::invalid_argument("check_interval must be at least 1");
    if (tolerance && !(*tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
    for (const auto& p : grid_points()) p.validate();
  }
};

/// Seeds derived from the sweep's base seed. Opinion seeds ignore the grid
/// index so every grid point starts from the same opinions.
struct SweepSeeds {
  static std::uint64_t graph(std::uint64_t base, std::uint32_t k) { return mix_seed(base, {0, k}); }
  static std::uint64_t opinions(std::uint64_t base, std::uint32_t k, std::uint32_t m) {
    return mix_seed(base, {1, k, m});
  }
  static std::uint64_t run(std::uint64_t base, std::uint32_t k, std::uint32_t m, std::uint64_t gi) {
    return mix_seed(base, {2, k, m, gi});
  }
};

struct BuiltGraph {
  Graph graph;
  GraphInfo info;
};

inline BuiltGraph build_graph(const GraphSpec& spec, std::uint64_t seed, std::uint32_t id) {
  BuiltGraph out;
  Graph raw;
  Rng rng(seed);
  if (spec.kind == "complete") {
    raw = generate_complete(spec.n);
  } else if (spec.kind == "er") {
    raw = generate_er(spec.n, spec.p, rng);
  } else if (spec.kind == "sbm") {
    SbmSpec s = spec.sbm;
    s.n = spec.n;
    raw = generate_sbm(s, rng).graph;
  } else if (spec.kind == "edgelist") {
    std::ifstream in(spec.path);
    if (!in) throw std::runtime_error("cannot open edge list '" + spec.path + "'");
    raw = load_edge_list(in).graph;
  } else {
    throw std::invalid_argument("unknown graph kind '" + spec.kind + "'");
  }
  out.info.kind = spec.kind;
  out.info.id = id;
  out.info.source_nodes = raw.num_nodes();
  out.info.source_edges = raw.num_edges();
  if (spec.largest_component && spec.kind != "complete" && !raw.empty())
    out.graph = largest_connected_component(raw).graph;
  else
    out.graph = std::move(raw);
  out.info.nodes = out.graph.num_nodes();
  out.info.edges = out.graph.num_edges();
  return out;
}

/// Identifies a run inside a sweep independently of execution order.
struct RunKey {
  std::uint32_t graph_id = 0;
  std::uint32_t trial = 0;
  std::size_t grid_index = 0;
};

struct SweepOptions {
  unsigned threads = 1;
  TraceOptions traces;
  /// Runs for which this returns true are skipped (already completed).
  std::function<bool(const RunResult&)> skip;
};

/// Executes every (graph, opinion set, grid point) combination. Results reach
/// `sink` in run-id order regardless of thread count. Failed runs are reported
/// through `on_error` and the sweep continues. Returns the number of runs executed.
inline std::size_t run_sweep(const SweepConfig& cfg, const std::function<void(RunResult&&)>& sink,
                             const SweepOptions& opts = {},
                             const std::function<void(const RunKey&, const std::string&)>& on_error = {}) {
  cfg.validate();
  const auto points = cfg.grid_points();
  const std::size_t per_trial = points.size();
  const std::size_t total = cfg.total_runs();

  std::vector<BuiltGraph> graphs;
  for (std::uint32_t k = 0; k < cfg.graphs_per_setting; ++k)
    graphs.push_back(build_graph(cfg.graph, SweepSeeds::graph(cfg.base_seed, k), k));
  std::vector<std::vector<std::vector<double>>> opinions(cfg.graphs_per_setting);
  for (std::uint32_t k = 0; k < cfg.graphs_per_setting; ++k) {
    for (std::uint32_t m = 0; m < cfg.opinions_per_graph; ++m) {
      Rng rng(SweepSeeds::opinions(cfg.base_seed, k, m));
      opinions[k].push_back(initial_opinions(graphs[k].graph.num_nodes(), rng));
    }
  }

  auto key_of = [&](std::size_t id) {
    RunKey key;
    key.grid_index = id % per_trial;
    key.trial = static_cast<std::uint32_t>((id / per_trial) % cfg.opinions_per_graph);
    key.graph_id = static_cast<std::uint32_t>(id / per_trial / cfg.opinions_per_graph);
    return key;
  };
  auto stub_for = [&](const RunKey& key) {
    RunResult r;
    r.params = points[key.grid_index];
    r.graph = graphs[key.graph_id].info;
    r.trial = key.trial;
    r.seed = SweepSeeds::run(cfg.base_seed, key.graph_id, key.trial, key.grid_index);
    return r;
  };

  std::mutex mu;
  std::map<std::size_t, std::optional<RunResult>> pending;
  std::size_t next_to_emit = 0;
  std::atomic<std::size_t> next_id{0};
  std::atomic<std::size_t> executed{0};

  auto flush_locked = [&] {
    while (!pending.empty() && pending.begin()->first == next_to_emit) {
      auto node = pending.extract(pending.begin());
      if (node.mapped()) sink(std::move(*node.mapped()));
      ++next_to_emit;
    }
  };

  auto worker = [&] {
    for (;;) {
      const std::size_t id = next_id.fetch_add(1);
      if (id >= total) return;
      const RunKey key = key_of(id);
      std::optional<RunResult> out;
      RunResult stub = stub_for(key);
      if (!(opts.skip && opts.skip(stub))) {
        try {
          RunConfig rc = cfg.run_config(stub.params);
          rc.seed = stub.seed;
          rc.traces = opts.traces;
          const auto& bg = graphs[key.graph_id];
          RunResult r = run_single(bg.graph, opinions[key.graph_id][key.trial], rc);
          r.graph = bg.info;
          r.trial = key.trial;
          out = std::move(r);
          ++executed;
        } catch (const std::exception& ex) {
          std::lock_guard lock(mu);
          if (on_error) on_error(key, ex.what());
        }
      }
      std::lock_guard lock(mu);
      pending.emplace(id, std::move(out));
      flush_locked();
    }
  };

  const unsigned threads = std::max(1u, opts.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return executed.load();
}

// ---------------------------------------------------------------------------
// Summaries

/// Keys a summary can be grouped by.
inline const std::vector<std::string>& summary_key_names() {
  static const std::vector<std::string> names{"model", "graph_kind", "graph_id", "trial",
                                              "gamma", "delta",      "c0",       "mu"};
  return names;
}

struct Stat {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for fewer than two values
};

inline Stat mean_std(const std::vector<double>& v) {
  Stat s;
  if (v.empty()) {
    s.mean = s.stddev = std::nan("");
    return s;
  }
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

struct SummaryRow {
  std::vector<std::string> key;  // formatted values, one per group key
  std::size_t count = 0;
  std::size_t n_bailout = 0;
  std::size_t n_indeterminate = 0;
  std::size_t n_used = 0;
  Stat n_major, n_minor, entropy, w_fraction, log10_T;
};

inline std::string summary_key_value(const RunResult& r, const std::string& key) {
  if (key == "model") return std::string(to_string(r.params.kind));
  if (key == "graph_kind") return r.graph.kind;
  if (key == "graph_id") return std::to_string(r.graph.id);
  if (key == "trial") return std::to_string(r.trial);
  if (key == "gamma") return format_double(r.params.gamma);
  if (key == "delta") return format_double(r.params.delta);
  if (key == "c0") return format_double(r.params.c0);
  if (key == "mu") return r.params.mu ? format_double(*r.params.mu) : std::string();
  throw std::invalid_argument("unknown group key '" + key + "'");
}

/// Groups results and reports mean and sample standard deviation per metric.
/// Runs whose clusters are not determinable are counted but excluded from
/// every metric. log10 T uses max(T, 1).
inline std::vector<SummaryRow> summarize(const std::vector<RunResult>& results,
                                         const std::vector<std::string>& keys) {
  if (results.empty()) throw std::invalid_argument("summarize: no results");
  struct Acc {
    SummaryRow row;
    std::vector<double> major, minor, entropy, w, logt;
  };
  auto less = [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] == b[i]) continue;
      char* ea = nullptr;
      char* eb = nullptr;
      const double da = std::strtod(a[i].c_str(), &ea);
      const double db = std::strtod(b[i].c_str(), &eb);
      const bool numeric = !a[i].empty() && !b[i].empty() && *ea == '\0' && *eb == '\0';
      return numeric ? da < db : a[i] < b[i];
    }
    return false;
  };
  std::map<std::vector<std::string>, Acc, decltype(less)> groups(less);
  for (const auto& r : results) {
    std::vector<std::string> key;
    for (const auto& k : keys) key.push_back(summary_key_value(r, k));
    auto& acc = groups[key];
    acc.row.key = key;
    ++acc.row.count;
    if (r.bailed_out) ++acc.row.n_bailout;
    if (!r.clusters_determinable || !r.metrics) {
      ++acc.row.n_indeterminate;
      continue;
    }
    ++acc.row.n_used;
    acc.major.push_back(static_cast<double>(r.metrics->n_major));
    acc.minor.push_back(static_cast<double>(r.metrics->n_minor));
    acc.entropy.push_back(r.metrics->entropy);
    acc.w.push_back(r.metrics->w_fraction);
    acc.logt.push_back(std::log10(static_cast<double>(std::max<std::uint64_t>(r.T, 1))));
  }
  std::vector<SummaryRow> out;
  for (auto& [key, acc] : groups) {
    acc.row.n_major = mean_std(acc.major);
    acc.row.n_minor = mean_std(acc.minor);
    acc.row.entropy = mean_std(acc.entropy);
    acc.row.w_fraction = mean_std(acc.w);
    acc.row.log10_T = mean_std(acc.logt);
    out.push_back(std::move(acc.row));
  }
  return out;
}

}  // namespace abcm
