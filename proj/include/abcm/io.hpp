#pragma once

#include <cstdint>
#include <istream>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "abcm/format.hpp"
#include "abcm/harness.hpp"

namespace abcm {

using json = nlohmann::json;

/// Invalid configuration; `path()` is a JSON-pointer-like location.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

namespace detail {

inline void reject_unknown(const json& obj, const std::string& path, std::set<std::string> allowed) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError(path + "/" + key, "unknown key");
}

inline const json& require(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.contains(key)) throw ConfigError(path + "/" + key, "missing required key");
  return obj.at(key);
}

inline double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

inline std::uint64_t get_count(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
    throw ConfigError(path, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

inline std::vector<double> get_grid(const json& v, const std::string& path, bool is_mu) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a nonempty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string at = path + "/" + std::to_string(i);
    const double x = get_number(v[i], at);
    if (is_mu ? !(x > 0.0 && x <= 0.5) : !(x >= 0.0 && x <= 1.0))
      throw ConfigError(at, is_mu ? "out of range (0, 0.5]" : "out of range [0, 1]");
    out.push_back(x);
  }
  return out;
}

}  // namespace detail

/// Parses and validates a sweep/run configuration document (JSON).
///
/// Defaults: tolerance 1e-6 (HK) or 0.02 (DW), bailout 1e6, one graph, ten
/// opinion sets, seed 0, output directory "results". check_interval stays
/// unset unless given, since the DW default depends on the graph.
inline SweepConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("", "config must be a JSON object");
  detail::reject_unknown(doc, "", {"model", "graph", "grid", "graphs_per_setting",
                                   "opinions_per_graph", "base_seed", "tolerance", "bailout",
                                   "check_interval", "run_to_convergence",
                                   "indeterminate_factor", "output_dir"});
  SweepConfig c;
  const auto& model = detail::require(doc, "", "model");
  if (!model.is_string()) throw ConfigError("/model", "expected \"HK\" or \"DW\"");
  try {
    c.model = parse_model_kind(model.get<std::string>());
  } catch (const std::invalid_argument& ex) {
    throw ConfigError("/model", ex.what());
  }

  const auto& graph = detail::require(doc, "", "graph");
  if (!graph.is_object()) throw ConfigError("/graph", "expected an object");
  const auto& kind = detail::require(graph, "/graph", "kind");
  if (!kind.is_string()) throw ConfigError("/graph/kind", "expected a string");
  c.graph.kind = kind.get<std::string>();
  if (c.graph.kind == "complete") {
    detail::reject_unknown(graph, "/graph", {"kind", "n"});
  } else if (c.graph.kind == "er") {
    detail::reject_unknown(graph, "/graph", {"kind", "n", "p", "largest_component"});
    c.graph.p = detail::get_number(detail::require(graph, "/graph", "p"), "/graph/p");
    if (!(c.graph.p >= 0.0 && c.graph.p <= 1.0)) throw ConfigError("/graph/p", "out of range [0, 1]");
  } else if (c.graph.kind == "sbm") {
    detail::reject_unknown(graph, "/graph",
                           {"kind", "n", "frac_a", "p_aa", "p_bb", "p_ab", "largest_component"});
    auto num = [&](const char* key, double& dst) {
      if (graph.contains(key)) dst = detail::get_number(graph.at(key), std::string("/graph/") + key);
    };
    num("frac_a", c.graph.sbm.frac_a);
    num("p_aa", c.graph.sbm.p_aa);
    num("p_bb", c.graph.sbm.p_bb);
    num("p_ab", c.graph.sbm.p_ab);
  } else if (c.graph.kind == "edgelist") {
    detail::reject_unknown(graph, "/graph", {"kind", "path", "largest_component"});
    const auto& path = detail::require(graph, "/graph", "path");
    if (!path.is_string()) throw ConfigError("/graph/path", "expected a string");
    c.graph.path = path.get<std::string>();
  } else {
    throw ConfigError("/graph/kind", "unknown graph kind '" + c.graph.kind + "'");
  }
  if (c.graph.kind != "edgelist") {
    c.graph.n = detail::get_count(detail::require(graph, "/graph", "n"), "/graph/n");
    if (c.graph.n == 0) throw ConfigError("/graph/n", "must be positive");
    c.graph.sbm.n = c.graph.n;
  }
  if (graph.contains("largest_component")) {
    if (!graph.at("largest_component").is_boolean())
      throw ConfigError("/graph/largest_component", "expected a boolean");
    c.graph.largest_component = graph.at("largest_component").get<bool>();
  }
  if (c.graph.kind == "sbm") {
    try {
      c.graph.sbm.validate();
    } catch (const std::invalid_argument& ex) {
      throw ConfigError("/graph", ex.what());
    }
  }

  const auto& grid = detail::require(doc, "", "grid");
  if (!grid.is_object()) throw ConfigError("/grid", "expected an object");
  detail::reject_unknown(grid, "/grid", {"gamma", "delta", "c0", "mu"});
  c.grid.gamma = detail::get_grid(detail::require(grid, "/grid", "gamma"), "/grid/gamma", false);
  c.grid.delta = detail::get_grid(detail::require(grid, "/grid", "delta"), "/grid/delta", false);
  c.grid.c0 = detail::get_grid(detail::require(grid, "/grid", "c0"), "/grid/c0", false);
  if (c.model == ModelKind::DW) {
    c.grid.mu = detail::get_grid(detail::require(grid, "/grid", "mu"), "/grid/mu", true);
  } else if (grid.contains("mu")) {
    throw ConfigError("/grid/mu", "mu is only valid for the DW model");
  }

  if (doc.contains("graphs_per_setting")) {
    auto v = detail::get_count(doc["graphs_per_setting"], "/graphs_per_setting");
    if (v < 1) throw ConfigError("/graphs_per_setting", "must be at least 1");
    c.graphs_per_setting = static_cast<std::uint32_t>(v);
  }
  if (doc.contains("opinions_per_graph")) {
    auto v = detail::get_count(doc["opinions_per_graph"], "/opinions_per_graph");
    if (v < 1) throw ConfigError("/opinions_per_graph", "must be at least 1");
    c.opinions_per_graph = static_cast<std::uint32_t>(v);
  }
  if (doc.contains("base_seed")) c.base_seed = detail::get_count(doc["base_seed"], "/base_seed");
  c.tolerance = default_tolerance(c.model);
  if (doc.contains("tolerance")) {
    c.tolerance = detail::get_number(doc["tolerance"], "/tolerance");
    if (!(*c.tolerance > 0.0)) throw ConfigError("/tolerance", "must be positive");
  }
  if (doc.contains("bailout")) {
    c.bailout = detail::get_count(doc["bailout"], "/bailout");
    if (c.bailout < 1) throw ConfigError("/bailout", "must be at least 1");
  }
  if (doc.contains("check_interval")) {
    c.check_interval = detail::get_count(doc["check_interval"], "/check_interval");
    if (*c.check_interval < 1) throw ConfigError("/check_interval", "must be at least 1");
  }
  if (doc.contains("run_to_convergence")) {
    if (!doc["run_to_convergence"].is_boolean())
      throw ConfigError("/run_to_convergence", "expected a boolean");
    c.run_to_convergence = doc["run_to_convergence"].get<bool>();
  }
  if (doc.contains("indeterminate_factor")) {
    c.indeterminate_factor = detail::get_number(doc["indeterminate_factor"], "/indeterminate_factor");
    if (!(c.indeterminate_factor > 0.0)) throw ConfigError("/indeterminate_factor", "must be positive");
  }
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string()) throw ConfigError("/output_dir", "expected a string");
    c.output_dir = doc["output_dir"].get<std::string>();
  }
  return c;
}

inline SweepConfig parse_config(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& ex) {
    throw ConfigError("", std::string("malformed JSON: ") + ex.what());
  }
  return parse_config(doc);
}

inline SweepConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline json serialize_config(const SweepConfig& c) {
  json doc;
  doc["model"] = std::string(to_string(c.model));
  json graph;
  graph["kind"] = c.graph.kind;
  if (c.graph.kind != "edgelist") graph["n"] = c.graph.n;
  if (c.graph.kind == "er") graph["p"] = c.graph.p;
  if (c.graph.kind == "sbm") {
    graph["frac_a"] = c.graph.sbm.frac_a;
    graph["p_aa"] = c.graph.sbm.p_aa;
    graph["p_bb"] = c.graph.sbm.p_bb;
    graph["p_ab"] = c.graph.sbm.p_ab;
  }
  if (c.graph.kind == "edgelist") graph["path"] = c.graph.path;
  if (c.graph.kind != "complete") graph["largest_component"] = c.graph.largest_component;
  doc["graph"] = graph;
  doc["grid"] = {{"gamma", c.grid.gamma}, {"delta", c.grid.delta}, {"c0", c.grid.c0}};
  if (c.model == ModelKind::DW) doc["grid"]["mu"] = c.grid.mu;
  doc["graphs_per_setting"] = c.graphs_per_setting;
  doc["opinions_per_graph"] = c.opinions_per_graph;
  doc["base_seed"] = c.base_seed;
  doc["tolerance"] = c.tolerance.value_or(default_tolerance(c.model));
  doc["bailout"] = c.bailout;
  if (c.check_interval) doc["check_interval"] = *c.check_interval;
  doc["run_to_convergence"] = c.run_to_convergence;
  doc["indeterminate_factor"] = c.indeterminate_factor;
  doc["output_dir"] = c.output_dir;
  return doc;
}

// ---------------------------------------------------------------------------
// Results CSV

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{
      "model",     "graph_kind", "graph_id",  "trial",     "gamma",      "delta",
      "c0",        "mu",         "seed",      "converged", "bailed_out", "clusters_determinable",
      "T",         "n_major",    "n_minor",   "entropy",   "w_fraction", "tolerance",
      "check_interval"};
  return cols;
}

inline std::string csv_header() {
  std::string line;
  for (const auto& c : csv_columns()) line += (line.empty() ? "" : ",") + c;
  return line;
}

/// One CSV line (no newline). Cluster metrics are empty when not determinable.
inline std::string csv_row(const RunResult& r) {
  std::string s;
  bool first = true;
  auto put = [&](const std::string& v) {
    if (!first) s += ',';
    first = false;
    s += v;
  };
  put(std::string(to_string(r.params.kind)));
  put(r.graph.kind);
  put(std::to_string(r.graph.id));
  put(std::to_string(r.trial));
  put(format_double(r.params.gamma));
  put(format_double(r.params.delta));
  put(format_double(r.params.c0));
  put(r.params.mu ? format_double(*r.params.mu) : "");
  put(std::to_string(r.seed));
  put(r.converged ? "1" : "0");
  put(r.bailed_out ? "1" : "0");
  put(r.clusters_determinable ? "1" : "0");
  put(std::to_string(r.T));
  if (r.metrics) {
    put(std::to_string(r.metrics->n_major));
    put(std::to_string(r.metrics->n_minor));
    put(format_double(r.metrics->entropy));
    put(format_double(r.metrics->w_fraction));
  } else {
    put("");
    put("");
    put("");
    put("");
  }
  put(format_double(r.tolerance));
  put(std::to_string(r.check_interval));
  return s;
}

inline void write_results_csv(const std::vector<RunResult>& results, std::ostream& out) {
  out << csv_header() << '\n';
  for (const auto& r : results) out << csv_row(r) << '\n';
  if (!out) throw std::runtime_error("write_results_csv: stream write failed");
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  out.push_back(std::move(field));
  return out;
}

inline bool parse_flag(const std::string& v) {
  if (v == "1") return true;
  if (v == "0") return false;
  throw std::invalid_argument("expected 0 or 1, found '" + v + "'");
}

}  // namespace detail

/// Parses a results CSV written by write_results_csv. Throws ParseError with
/// the offending line number.
inline std::vector<RunResult> read_results_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(1, "missing CSV header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header()) throw ParseError(1, "unexpected CSV header");
  std::vector<RunResult> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != csv_columns().size())
      throw ParseError(line_no, "expected " + std::to_string(csv_columns().size()) + " fields, found " +
                                    std::to_string(f.size()));
    try {
      RunResult r;
      r.params.kind = parse_model_kind(f[0]);
      r.graph.kind = f[1];
      r.graph.id = parse_integer<std::uint32_t>(f[2]);
      r.trial = parse_integer<std::uint32_t>(f[3]);
      r.params.gamma = parse_double(f[4]);
      r.params.delta = parse_double(f[5]);
      r.params.c0 = parse_double(f[6]);
      if (!f[7].empty()) r.params.mu = parse_double(f[7]);
      r.seed = parse_integer<std::uint64_t>(f[8]);
      r.converged = detail::parse_flag(f[9]);
      r.bailed_out = detail::parse_flag(f[10]);
      r.clusters_determinable = detail::parse_flag(f[11]);
      r.T = parse_integer<std::uint64_t>(f[12]);
      if (!f[13].empty()) {
        ClusterMetrics m;
        m.n_major = parse_integer<std::size_t>(f[13]);
        m.n_minor = parse_integer<std::size_t>(f[14]);
        m.entropy = parse_double(f[15]);
        m.w_fraction = parse_double(f[16]);
        r.metrics = m;
      }
      r.tolerance = parse_double(f[17]);
      r.check_interval = parse_integer<std::uint64_t>(f[18]);
      out.push_back(std::move(r));
    } catch (const std::invalid_argument& ex) {
      throw ParseError(line_no, ex.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-run JSON

inline json traces_to_json(const RunTraces& t) {
  json j;
  j["kind"] = std::string(to_string(t.kind));
  if (t.rates) j["rates"] = {{"gamma", t.rates->gamma}, {"delta", t.rates->delta}};
  j["window_start"] = t.window_start;
  j["window_end"] = t.window_end;
  json traces = json::array();
  for (const auto& tr : t.confidence) {
    traces.push_back({{"edge", tr.edge},
                      {"u", tr.endpoints.u},
                      {"v", tr.endpoints.v},
                      {"same_cluster", tr.same_cluster},
                      {"times", tr.times},
                      {"values", tr.values}});
  }
  j["confidence_traces"] = std::move(traces);
  json changes = json::array();
  for (const auto& ch : t.effective.changes) {
    json edges = json::array();
    for (const auto& e : ch.edges) edges.push_back({e.u, e.v});
    changes.push_back({{"sample", ch.sample}, {"edges", std::move(edges)}});
  }
  j["effective_history"] = {{"times", t.effective.times}, {"changes", std::move(changes)}};
  j["final_assignment"] = t.final_assignment;
  return j;
}

inline RunTraces traces_from_json(const json& j) {
  RunTraces t;
  t.kind = parse_model_kind(j.at("kind").get<std::string>());
  if (j.contains("rates"))
    t.rates = UpdateRates{j.at("rates").at("gamma").get<double>(), j.at("rates").at("delta").get<double>()};
  t.window_start = j.at("window_start").get<std::uint64_t>();
  t.window_end = j.at("window_end").get<std::uint64_t>();
  for (const auto& tj : j.at("confidence_traces")) {
    ConfidenceTrace tr;
    tr.edge = tj.at("edge").get<EdgeId>();
    tr.endpoints = {tj.at("u").get<NodeId>(), tj.at("v").get<NodeId>()};
    tr.same_cluster = tj.at("same_cluster").get<bool>();
    tr.times = tj.at("times").get<std::vector<std::uint64_t>>();
    tr.values = tj.at("values").get<std::vector<double>>();
    if (tr.times.size() != tr.values.size())
      throw std::invalid_argument("trace times and values differ in length");
    t.confidence.push_back(std::move(tr));
  }
  const auto& h = j.at("effective_history");
  t.effective.times = h.at("times").get<std::vector<std::uint64_t>>();
  for (const auto& cj : h.at("changes")) {
    EffectiveGraphHistory::Change ch;
    ch.sample = cj.at("sample").get<std::size_t>();
    for (const auto& e : cj.at("edges")) ch.edges.push_back({e.at(0).get<NodeId>(), e.at(1).get<NodeId>()});
    t.effective.changes.push_back(std::move(ch));
  }
  t.final_assignment = j.at("final_assignment").get<std::vector<std::uint32_t>>();
  return t;
}

/// Same fields as the CSV row plus graph metadata, timing, the final cluster
/// assignment and (when recorded) traces.
inline json run_to_json(const RunResult& r) {
  json j;
  j["model"] = std::string(to_string(r.params.kind));
  j["graph_kind"] = r.graph.kind;
  j["graph_id"] = r.graph.id;
  j["graph_nodes"] = r.graph.nodes;
  j["graph_edges"] = r.graph.edges;
  j["graph_source_nodes"] = r.graph.source_nodes;
  j["graph_source_edges"] = r.graph.source_edges;
  j["trial"] = r.trial;
  j["gamma"] = r.params.gamma;
  j["delta"] = r.params.delta;
  j["c0"] = r.params.c0;
  j["mu"] = r.params.mu ? json(*r.params.mu) : json(nullptr);
  j["seed"] = r.seed;
  j["converged"] = r.converged;
  j["bailed_out"] = r.bailed_out;
  j["clusters_determinable"] = r.clusters_determinable;
  j["T"] = r.T;
  if (r.metrics) {
    j["n_major"] = r.metrics->n_major;
    j["n_minor"] = r.metrics->n_minor;
    j["entropy"] = r.metrics->entropy;
    j["w_fraction"] = r.metrics->w_fraction;
    j["w_all_isolated"] = r.metrics->w_all_isolated;
  } else {
    j["n_major"] = j["n_minor"] = j["entropy"] = j["w_fraction"] = nullptr;
  }
  j["tolerance"] = r.tolerance;
  j["check_interval"] = r.check_interval;
  j["final_spread"] = r.final_spread;
  j["wall_seconds"] = r.wall_seconds;
  j["final_assignment"] = r.final_assignment;
  if (r.traces) j["traces"] = traces_to_json(*r.traces);
  return j;
}

inline RunResult run_from_json(const json& j) {
  RunResult r;
  r.params.kind = parse_model_kind(j.at("model").get<std::string>());
  r.graph.kind = j.at("graph_kind").get<std::string>();
  r.graph.id = j.at("graph_id").get<std::uint32_t>();
  r.graph.nodes = j.value("graph_nodes", std::size_t{0});
  r.graph.edges = j.value("graph_edges", std::size_t{0});
  r.graph.source_nodes = j.value("graph_source_nodes", r.graph.nodes);
  r.graph.source_edges = j.value("graph_source_edges", r.graph.edges);
  r.trial = j.at("trial").get<std::uint32_t>();
  r.params.gamma = j.at("gamma").get<double>();
  r.params.delta = j.at("delta").get<double>();
  r.params.c0 = j.at("c0").get<double>();
  if (!j.at("mu").is_null()) r.params.mu = j.at("mu").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.converged = j.at("converged").get<bool>();
  r.bailed_out = j.at("bailed_out").get<bool>();
  r.clusters_determinable = j.at("clusters_determinable").get<bool>();
  r.T = j.at("T").get<std::uint64_t>();
  if (!j.at("n_major").is_null()) {
    ClusterMetrics m;
    m.n_major = j.at("n_major").get<std::size_t>();
    m.n_minor = j.at("n_minor").get<std::size_t>();
    m.entropy = j.at("entropy").get<double>();
    m.w_fraction = j.at("w_fraction").get<double>();
    m.w_all_isolated = j.value("w_all_isolated", false);
    r.metrics = m;
  }
  r.tolerance = j.at("tolerance").get<double>();
  r.check_interval = j.at("check_interval").get<std::uint64_t>();
  r.final_spread = j.value("final_spread", 0.0);
  r.wall_seconds = j.value("wall_seconds", 0.0);
  r.final_assignment = j.value("final_assignment", std::vector<std::uint32_t>{});
  if (j.contains("traces")) r.traces = traces_from_json(j.at("traces"));
  return r;
}

inline void write_run_json(const RunResult& r, std::ostream& out) {
  out << run_to_json(r).dump() << '\n';
  if (!out) throw std::runtime_error("write_run_json: stream write failed");
}

inline RunResult read_run_json(std::istream& in) { return run_from_json(json::parse(in)); }

/// File name of a run's JSON inside a sweep output directory.
inline std::string run_file_name(const RunResult& r) {
  std::string name = "run_g" + std::to_string(r.graph.id) + "_t" + std::to_string(r.trial) + "_gamma" +
                     format_double(r.params.gamma) + "_delta" + format_double(r.params.delta) + "_c" +
                     format_double(r.params.c0);
  if (r.params.mu) name += "_mu" + format_double(*r.params.mu);
  return name + ".json";
}

// ---------------------------------------------------------------------------
// Summary CSV

inline void write_summary_csv(const std::vector<SummaryRow>& rows, const std::vector<std::string>& keys,
                              std::ostream& out) {
  for (const auto& k : keys) out << k << ',';
  out << "count,n_bailout,n_indeterminate,n_used";
  for (const char* m : {"n_major", "n_minor", "entropy", "w_fraction", "log10_T"})
    out << ',' << m << "_mean," << m << "_std";
  out << '\n';
  for (const auto& row : rows) {
    for (const auto& v : row.key) out << v << ',';
    out << row.count << ',' << row.n_bailout << ',' << row.n_indeterminate << ',' << row.n_used;
    for (const Stat* s : {&row.n_major, &row.n_minor, &row.entropy, &row.w_fraction, &row.log10_T})
      out << ',' << format_double(s->mean) << ',' << format_double(s->stddev);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_summary_csv: stream write failed");
}

}  // namespace abcm
