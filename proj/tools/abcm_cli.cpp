// Command-line front end: run | sweep | analyze | check.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "abcm/abcm.hpp"

namespace fs = std::filesystem;
using namespace abcm;

namespace {

struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

SweepConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError("cannot open config '" + path + "'");
  try {
    return parse_config(in);
  } catch (const ConfigError& e) {
    throw CliError(path + ": " + e.what());
  }
}

std::ofstream open_out(const fs::path& p, std::ios::openmode mode = std::ios::trunc) {
  std::ofstream out(p, std::ios::binary | mode);
  if (!out) throw CliError("cannot write '" + p.string() + "'");
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw CliError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Identity of a run inside one sweep, as it appears in the results CSV.
using RowKey = std::tuple<std::uint32_t, std::uint32_t, std::string, std::string, std::string, std::string>;

RowKey key_of(const RunResult& r) {
  return {r.graph.id, r.trial, format_double(r.params.gamma), format_double(r.params.delta),
          format_double(r.params.c0), r.params.mu ? format_double(*r.params.mu) : std::string()};
}

// Keeps the complete, parseable prefix of an existing results file and
// returns the keys it covers. A torn final line from an interrupted sweep is
// dropped.
std::set<RowKey> recover_results(const fs::path& csv) {
  std::set<RowKey> done;
  if (!fs::exists(csv)) return done;
  std::string text = slurp(csv);
  if (auto nl = text.rfind('\n'); nl == std::string::npos)
    text.clear();
  else
    text.resize(nl + 1);

  std::string kept;
  std::istringstream lines(text);
  std::string line;
  bool header = true;
  while (std::getline(lines, line)) {
    if (header) {
      if (line != csv_header()) throw CliError(csv.string() + ": unexpected header; refusing to resume");
      header = false;
      kept += line + '\n';
      continue;
    }
    std::istringstream one(csv_header() + '\n' + line + '\n');
    try {
      auto parsed = read_results_csv(one);
      if (parsed.size() != 1) break;
      done.insert(key_of(parsed[0]));
      kept += line + '\n';
    } catch (const ParseError&) {
      break;
    }
  }
  if (header) kept = csv_header() + '\n';
  open_out(csv) << kept;
  return done;
}

// Guards resumption against a different sweep in the same directory.
void pin_config(const fs::path& dir, const SweepConfig& cfg) {
  const fs::path path = dir / "config.json";
  const std::string text = serialize_config(cfg).dump(2) + '\n';
  if (fs::exists(path)) {
    if (slurp(path) != text)
      throw CliError(dir.string() + " holds results of a different configuration");
    return;
  }
  open_out(path) << text;
}

std::size_t execute(const SweepConfig& cfg, const fs::path& out_dir, unsigned threads, bool traces,
                    std::uint64_t horizon) {
  fs::create_directories(out_dir / "runs");
  pin_config(out_dir, cfg);
  const fs::path csv_path = out_dir / "results.csv";
  const auto done = recover_results(csv_path);
  auto csv = open_out(csv_path, std::ios::app);
  if (fs::file_size(csv_path) == 0) csv << csv_header() << '\n';

  SweepOptions opts;
  opts.threads = threads;
  opts.traces.enabled = traces;
  opts.traces.horizon = horizon;
  if (!done.empty()) opts.skip = [&](const RunResult& r) { return done.count(key_of(r)) > 0; };

  std::size_t failures = 0;
  const std::size_t total = cfg.total_runs();
  std::size_t written = 0;
  std::string write_error;
  // Runs on a worker thread; exceptions must not escape it.
  auto sink = [&](RunResult&& r) {
    if (!write_error.empty()) return;
    try {
      csv << csv_row(r) << '\n' << std::flush;
      if (!csv) throw CliError("write failed: " + csv_path.string());
      auto json = open_out(out_dir / "runs" / run_file_name(r));
      write_run_json(r, json);
      ++written;
    } catch (const std::exception& e) {
      write_error = e.what();
    }
  };
  auto on_error = [&](const RunKey& k, const std::string& what) {
    ++failures;
    std::cerr << "run g" << k.graph_id << " t" << k.trial << " point " << k.grid_index << " failed: " << what
              << '\n';
  };
  run_sweep(cfg, sink, opts, on_error);
  if (!write_error.empty()) throw CliError(write_error);
  std::cerr << written << " runs written, " << done.size() << " already present, " << total << " planned\n";
  if (failures) throw CliError(std::to_string(failures) + " runs failed");
  return written;
}

std::vector<std::string> split_keys(const std::string& text) {
  std::vector<std::string> keys;
  std::stringstream ss(text);
  for (std::string k; std::getline(ss, k, ',');)
    if (!k.empty()) keys.push_back(k);
  const auto& known = summary_key_names();
  for (const auto& k : keys)
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw CliError("unknown group key '" + k + "'");
  return keys;
}

void print_table(const std::vector<std::vector<std::string>>& rows, std::ostream& out) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  for (const auto& row : rows) {
    for (std::size_t c = 0; c + 1 < row.size(); ++c)
      out << std::left << std::setw(static_cast<int>(width[c]) + 2) << row[c];
    if (!row.empty()) out << row.back();
    out << '\n';
  }
}

std::vector<std::string> verdict_row(const std::string& file, const RunResult& r, const CheckOptions& opts) {
  std::vector<std::string> row{fs::path(file).filename().string(),
                               std::string(to_string(r.params.kind)),
                               format_double(r.params.gamma),
                               format_double(r.params.delta),
                               format_double(r.params.c0),
                               r.params.mu ? format_double(*r.params.mu) : "",
                               r.converged ? "1" : "0"};
  if (!r.traces) {
    row.insert(row.end(), {"0", "", "", "", "", "", "", "", "", "", "no traces"});
    return row;
  }
  const auto v = check_theorems(*r.traces, opts);
  auto n = [](std::size_t x) { return std::to_string(x); };
  row.insert(row.end(), {n(v.traces), n(v.limit_zero), n(v.limit_one), n(v.limit_undetermined), n(v.with_onset),
                         n(v.settled), n(v.cross_cluster_traces), n(v.cross_cluster_decreasing),
                         v.fixation ? std::to_string(*v.fixation) : "none", v.cross_cluster_ok ? "1" : "0"});
  const bool hk = r.params.kind == ModelKind::HK;
  const bool ok = v.cross_cluster_ok && (hk ? v.limits_ok() && v.onsets_ok() && v.fixation.has_value() : true);
  row.push_back(ok ? "ok" : "violated");
  return row;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive-confidence bounded-confidence opinion dynamics"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  bool traces = false;
  std::uint64_t horizon = 0;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "Run one simulation (the config must have a single grid point)");
  run->add_option("--config", config_path, "Config file (JSON)")->required();
  run->add_option("--seed", seed, "Override base_seed");
  run->add_option("--out", out_dir, "Output directory (default: config output_dir)");
  run->add_flag("--traces", traces, "Record confidence traces past convergence");
  run->add_option("--horizon", horizon, "Steps recorded past convergence (0: model default)");

  auto* sweep = app.add_subcommand("sweep", "Run every grid point, graph and opinion set of a config");
  sweep->add_option("--config", config_path, "Config file (JSON)")->required();
  sweep->add_option("--out", out_dir, "Output directory (default: config output_dir)");
  sweep->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  sweep->add_flag("--traces", traces, "Record confidence traces past convergence");
  sweep->add_option("--horizon", horizon, "Steps recorded past convergence (0: model default)");

  std::vector<std::string> inputs;
  std::string group = "gamma,delta,c0";
  auto* analyze = app.add_subcommand("analyze", "Summarize results CSVs by group");
  analyze->add_option("csv", inputs, "results.csv files")->required()->check(CLI::ExistingFile);
  analyze->add_option("--group", group, "Comma-separated group keys");
  analyze->add_option("--out", out_dir, "Write summary.csv here instead of stdout");

  CheckOptions check_opts;
  auto* check = app.add_subcommand("check", "Evaluate limit-behavior checks on per-run JSON files");
  check->add_option("json", inputs, "Per-run JSON files")->required()->check(CLI::ExistingFile);
  check->add_option("--eps", check_opts.eps, "Limit classification threshold")->check(CLI::Range(1e-300, 0.4999));
  check->add_option("--settle", check_opts.settle_fraction, "Window fraction a monotone suffix must cover")
      ->check(CLI::Range(0.0, 1.0));
  check->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  check->add_option("--out", out_dir, "Also write check.csv here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed() || sweep->parsed()) {
      auto cfg = load_config(config_path);
      if (seed) cfg.base_seed = *seed;
      if (run->parsed()) {
        if (cfg.grid_points().size() != 1)
          throw CliError("run needs exactly one grid point; use sweep for " +
                         std::to_string(cfg.grid_points().size()));
        cfg.graphs_per_setting = 1;
        cfg.opinions_per_graph = 1;
        threads = 1;
      }
      const fs::path dir = out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(out_dir);
      execute(cfg, dir, threads, traces, horizon);
      if (run->parsed()) {
        std::ifstream in(dir / "results.csv");
        std::cout << in.rdbuf();
      }
    } else if (analyze->parsed()) {
      const auto keys = split_keys(group);
      std::vector<RunResult> all;
      for (const auto& path : inputs) {
        std::ifstream in(path);
        if (!in) throw CliError("cannot open '" + path + "'");
        try {
          auto rs = read_results_csv(in);
          all.insert(all.end(), std::make_move_iterator(rs.begin()), std::make_move_iterator(rs.end()));
        } catch (const ParseError& e) {
          throw CliError(path + ": " + e.what());
        }
      }
      if (all.empty()) throw CliError("no result rows in input");
      const auto rows = summarize(all, keys);
      if (out_dir.empty()) {
        write_summary_csv(rows, keys, std::cout);
      } else {
        fs::create_directories(out_dir);
        auto out = open_out(fs::path(out_dir) / "summary.csv");
        write_summary_csv(rows, keys, out);
      }
    } else if (check->parsed()) {
      std::vector<std::vector<std::string>> rows(inputs.size() + 1);
      rows[0] = {"file", "model", "gamma", "delta", "c0", "mu", "converged", "traces", "zero", "one",
                 "undetermined", "onset", "settled", "cross", "cross_decreasing", "fixation",
                 "cross_cluster_ok", "verdict"};
      std::atomic<std::size_t> next{0};
      std::vector<std::string> errors(inputs.size());
      auto worker = [&] {
        for (std::size_t k; (k = next++) < inputs.size();) {
          try {
            std::ifstream in(inputs[k]);
            rows[k + 1] = verdict_row(inputs[k], read_run_json(in), check_opts);
          } catch (const std::exception& e) {
            errors[k] = inputs[k] + ": " + e.what();
          }
        }
      };
      {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < std::min<std::size_t>(threads, inputs.size()); ++t) pool.emplace_back(worker);
      }
      for (const auto& e : errors)
        if (!e.empty()) throw CliError(e);
      print_table(rows, std::cout);
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        auto out = open_out(fs::path(out_dir) / "check.csv");
        for (const auto& row : rows) {
          for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
          out << '\n';
        }
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "abcm: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
