// mstat: kernel M-statistic change-point detection from the command line.
//
// Subcommands: threshold, moments, detect-offline, detect-online, simulate.
// Every command prints a JSON report to stdout; detect-online additionally
// streams one JSON line per emitted statistic. Exit codes: 0 no change,
// 2 change detected, 1 error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mstat/baselines.hpp"
#include "mstat/experiments.hpp"
#include "mstat/generators.hpp"
#include "mstat/io.hpp"
#include "mstat/kernel.hpp"
#include "mstat/moments.hpp"
#include "mstat/offline.hpp"
#include "mstat/online.hpp"
#include "mstat/rng.hpp"
#include "mstat/thresholds.hpp"

using nlohmann::json;
using namespace mstat;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string data_path;
  std::string ref_path;
  std::string out_path;
  std::string format = "json";
  std::int64_t seed = -1;
  bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonOpts& opt) {
  cmd->add_option("--config", opt.config_path, "JSON config file");
  cmd->add_option("--data", opt.data_path, "input CSV (or '-' for stdin)");
  cmd->add_option("--ref", opt.ref_path, "reference pool CSV");
  cmd->add_option("--out", opt.out_path, "output file for the series/table");
  cmd->add_option("--format", opt.format, "series format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--seed", opt.seed, "master seed (required wherever randomness is used)")
      ->each([&opt](const std::string&) { opt.seed_given = true; });
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  json j;
  in >> j;
  if (!j.is_object()) throw std::runtime_error("config must be a JSON object");
  return j;
}

std::uint64_t require_seed(const CommonOpts& opt, const json& cfg) {
  if (opt.seed_given) return static_cast<std::uint64_t>(opt.seed);
  if (cfg.contains("seed")) return cfg.at("seed").get<std::uint64_t>();
  throw std::runtime_error("a seed is required: pass --seed or put \"seed\" in the config");
}

Matrix require_ref(const CommonOpts& opt) {
  if (opt.ref_path.empty()) throw std::runtime_error("--ref is required for this command");
  return load_csv(opt.ref_path);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

// --- model resolution shared by moments/detect commands ------------------

struct ModelBundle {
  KernelSpec spec;
  NullMoments moments;
};

// bandwidth "median" (default) resolves against the reference pool only
double resolve_bandwidth(const json& cfg, const Eigen::Ref<const Matrix>& ref,
                         std::uint64_t seed) {
  if (cfg.contains("bandwidth") && cfg.at("bandwidth").is_number()) {
    return cfg.at("bandwidth").get<double>();
  }
  if (cfg.contains("bandwidth") && cfg.at("bandwidth") != json("median")) {
    throw std::runtime_error("bandwidth must be a number or \"median\"");
  }
  return median_bandwidth(ref, 1000, derive_seed(seed, 101));
}

ModelBundle resolve_model(const json& cfg, const Eigen::Ref<const Matrix>& ref, int n_blocks,
                          int b_max, std::uint64_t seed) {
  if (cfg.contains("moments")) {
    std::ifstream in(cfg.at("moments").get<std::string>());
    if (!in) throw std::runtime_error("cannot open moments file");
    json wrapper;
    in >> wrapper;
    ModelBundle mb;
    mb.spec.bandwidth = wrapper.at("bandwidth").get<double>();
    NullMoments stored = moments_from_json(wrapper.at("moments").dump());
    mb.moments = NullMoments::build(stored.h, n_blocks, b_max);
    return mb;
  }
  ModelBundle mb;
  mb.spec.bandwidth = resolve_bandwidth(cfg, ref, seed);
  const auto n_draws = cfg.value("n_draws", std::uint64_t{20000});
  if (cfg.contains("cache")) {
    const std::string cache_path = cfg.at("cache").get<std::string>();
    const std::string key = pool_cache_key(ref, mb.spec.bandwidth, n_draws, seed);
    if (auto hit = cache_lookup(cache_path, key)) {
      mb.moments = NullMoments::build(hit->h, n_blocks, b_max);
      return mb;
    }
    HMoments h = estimate_h_moments(ref, mb.spec, n_draws, seed);
    mb.moments = NullMoments::build(h, n_blocks, b_max);
    cache_store(cache_path, key, mb.moments);
    return mb;
  }
  HMoments h = estimate_h_moments(ref, mb.spec, n_draws, seed);
  mb.moments = NullMoments::build(h, n_blocks, b_max);
  return mb;
}

json moments_wrapper(const ModelBundle& mb) {
  return json{{"bandwidth", mb.spec.bandwidth}, {"moments", json::parse(moments_to_json(mb.moments))}};
}

// --- line-by-line CSV stream for online monitoring -----------------------

class CsvStream {
 public:
  explicit CsvStream(const std::string& path) {
    if (path == "-") {
      in_ = &std::cin;
    } else {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot open " + path);
      in_ = &file_;
    }
  }

  std::optional<RowVec> next() {
    std::string line;
    while (std::getline(*in_, line)) {
      ++line_no_;
      if (is_blank(line)) continue;
      std::vector<double> row;
      if (!parse_row(line, row)) {
        if (first_) {  // header
          first_ = false;
          continue;
        }
        throw std::runtime_error("line " + std::to_string(line_no_) + ": not numeric");
      }
      first_ = false;
      if (cols_ < 0) cols_ = static_cast<long>(row.size());
      if (static_cast<long>(row.size()) != cols_) {
        throw std::runtime_error("line " + std::to_string(line_no_) + ": expected " +
                                 std::to_string(cols_) + " columns, found " +
                                 std::to_string(row.size()));
      }
      RowVec x(cols_);
      for (long j = 0; j < cols_; ++j) x[j] = row[static_cast<std::size_t>(j)];
      return x;
    }
    return std::nullopt;
  }

 private:
  static bool is_blank(const std::string& s) {
    return s.find_first_not_of(" \t\r") == std::string::npos;
  }

  static bool parse_row(const std::string& line, std::vector<double>& out) {
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      std::string field = line.substr(start, comma == std::string::npos ? std::string::npos
                                                                        : comma - start);
      const std::size_t a = field.find_first_not_of(" \t\r");
      if (a == std::string::npos) return false;
      const std::size_t b = field.find_last_not_of(" \t\r");
      field = field.substr(a, b - a + 1);
      char* end = nullptr;
      out.push_back(std::strtod(field.c_str(), &end));
      if (end != field.c_str() + field.size()) return false;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return true;
  }

  std::ifstream file_;
  std::istream* in_ = nullptr;
  long line_no_ = 0;
  long cols_ = -1;
  bool first_ = true;
};

// --- subcommands ----------------------------------------------------------

int cmd_threshold(const CommonOpts& opt) {
  json cfg = load_config(opt.config_path);
  const std::string mode = cfg.at("mode").get<std::string>();
  const bool corrected = cfg.value("corrected", false);
  const bool wide_nu = cfg.value("wide_nu", false);
  json report{{"mode", mode}, {"corrected", corrected}};

  std::optional<ModelBundle> model;
  auto need_model = [&](int n_blocks, int b_max) {
    const std::uint64_t seed = require_seed(opt, cfg);
    Matrix ref = require_ref(opt);
    model = resolve_model(cfg, ref, n_blocks, b_max, seed);
  };

  if (mode == "offline") {
    const double alpha = cfg.at("alpha").get<double>();
    const int b_max = cfg.at("b_max").get<int>();
    report["alpha"] = alpha;
    report["b_max"] = b_max;
    if (corrected) {
      need_model(cfg.value("n_blocks", 5), b_max);
      int fallbacks = 0;
      report["b"] = solve_offline_threshold_corrected(alpha, b_max, model->moments.skew_by_b,
                                                      wide_nu, &fallbacks);
      report["fallbacks"] = fallbacks;
      report["bandwidth"] = model->spec.bandwidth;
    } else {
      report["b"] = solve_offline_threshold(alpha, b_max, wide_nu);
    }
  } else if (mode == "online") {
    const double arl = cfg.at("arl").get<double>();
    const int b0 = cfg.at("b0").get<int>();
    report["arl"] = arl;
    report["b0"] = b0;
    if (corrected) {
      need_model(cfg.value("n_blocks", 5), b0);
      report["b"] = solve_online_threshold_corrected(arl, b0, model->moments.skew_by_b.at(b0));
      report["bandwidth"] = model->spec.bandwidth;
    } else {
      report["b"] = solve_online_threshold(arl, b0);
    }
  } else {
    throw std::runtime_error("mode must be offline or online");
  }

  const std::string text = report.dump(2);
  std::cout << text << "\n";
  if (!opt.out_path.empty()) write_text(opt.out_path, text);
  return 0;
}

int cmd_moments(const CommonOpts& opt) {
  json cfg = load_config(opt.config_path);
  const std::uint64_t seed = require_seed(opt, cfg);
  Matrix ref = require_ref(opt);
  const int n_blocks = cfg.value("n_blocks", 5);
  const int b_max = cfg.value("b_max", 200);
  ModelBundle mb = resolve_model(cfg, ref, n_blocks, b_max, seed);
  const std::string text = moments_wrapper(mb).dump(2);
  std::cout << text << "\n";
  if (!opt.out_path.empty()) write_text(opt.out_path, text);
  return 0;
}

int cmd_detect_offline(const CommonOpts& opt) {
  json cfg = load_config(opt.config_path);
  const std::uint64_t seed = require_seed(opt, cfg);
  Matrix ref = require_ref(opt);
  if (opt.data_path.empty()) throw std::runtime_error("--data is required");
  Matrix data = load_csv(opt.data_path);

  const int n_blocks = cfg.value("n_blocks", 5);
  const int b_max = cfg.value("b_max", static_cast<int>(data.rows()));
  const double alpha = cfg.value("alpha", 0.05);
  const bool corrected = cfg.value("corrected", false);
  const bool wide_nu = cfg.value("wide_nu", false);
  const bool contiguous = cfg.value("contiguous", false);
  if (data.rows() < b_max) throw std::runtime_error("test data has fewer rows than b_max");
  Matrix test = data.bottomRows(b_max);  // scan is right-aligned

  ModelBundle mb = resolve_model(cfg, ref, n_blocks, b_max, seed);
  int fallbacks = 0;
  double b;
  if (corrected) {
    b = solve_offline_threshold_corrected(alpha, b_max, mb.moments.skew_by_b, wide_nu,
                                          &fallbacks);
  } else {
    b = solve_offline_threshold(alpha, b_max, wide_nu);
  }
  OfflineBlocks blocks =
      build_offline_blocks(ref, test, n_blocks, b_max, derive_seed(seed, 102), contiguous);
  OfflineScan scan = scan_offline(blocks.ref_blocks, blocks.test_block, mb.moments, mb.spec, b);

  json report{{"mode", "offline"},
              {"alpha", alpha},
              {"threshold", b},
              {"corrected", corrected},
              {"fallbacks", fallbacks},
              {"bandwidth", mb.spec.bandwidth},
              {"n_blocks", n_blocks},
              {"b_max", b_max},
              {"m", scan.m},
              {"argmax_b", scan.argmax_b},
              {"change_index", scan.change_index},
              {"alarm", scan.alarm}};
  std::cout << report.dump(2) << "\n";

  if (!opt.out_path.empty()) {
    if (opt.format == "csv") {
      Matrix series(scan.z_by_b.size(), 3);
      for (long i = 0; i < series.rows(); ++i) {
        series(i, 0) = static_cast<double>(i + 2);
        series(i, 1) = scan.z_by_b[i];
        series(i, 2) = scan.z_prime_by_b[i];
      }
      save_csv(opt.out_path, series, {"b", "z", "z_prime"});
    } else {
      json series{{"b_start", 2},
                  {"z", std::vector<double>(scan.z_by_b.begin(), scan.z_by_b.end())},
                  {"z_prime",
                   std::vector<double>(scan.z_prime_by_b.begin(), scan.z_prime_by_b.end())}};
      report["series"] = series;
      write_text(opt.out_path, report.dump(2));
    }
  }
  return scan.alarm ? 2 : 0;
}

int cmd_detect_online(const CommonOpts& opt) {
  json cfg = load_config(opt.config_path);
  const std::uint64_t seed = require_seed(opt, cfg);
  Matrix ref = require_ref(opt);
  if (opt.data_path.empty()) throw std::runtime_error("--data is required");

  const int b0 = cfg.value("b0", 20);
  const int n_blocks = cfg.value("n_blocks", 5);
  const bool corrected = cfg.value("corrected", false);
  const bool stop_on_alarm = cfg.value("stop_on_alarm", true);

  ModelBundle mb = resolve_model(cfg, ref, n_blocks, b0, seed);
  double threshold;
  double arl = 0.0;
  if (cfg.contains("threshold")) {
    threshold = cfg.at("threshold").get<double>();
  } else {
    arl = cfg.value("arl", 5000.0);
    threshold = corrected ? solve_online_threshold_corrected(arl, b0, mb.moments.skew_by_b.at(b0))
                          : solve_online_threshold(arl, b0);
  }

  OnlineConfig det_cfg;
  det_cfg.b0 = b0;
  det_cfg.n_blocks = n_blocks;
  det_cfg.kernel = mb.spec;
  det_cfg.var_z = mb.moments.var_by_b.at(b0);
  det_cfg.threshold = threshold;
  det_cfg.seed = derive_seed(seed, 203);
  OnlineDetector det(ref, det_cfg);

  CsvStream stream(opt.data_path);
  std::vector<double> series;
  long stop_time = -1;
  long steps = 0;
  while (auto x = stream.next()) {
    ++steps;
    if (auto outp = det.step(*x)) {
      series.push_back(outp->m);
      std::cout << json{{"t", outp->t}, {"m", outp->m}, {"alarm", outp->alarm}}.dump() << "\n";
      if (outp->alarm) {
        stop_time = outp->t;
        if (stop_on_alarm) break;
      }
    }
  }

  json report{{"mode", "online"},
              {"b0", b0},
              {"n_blocks", n_blocks},
              {"bandwidth", mb.spec.bandwidth},
              {"var_z", det_cfg.var_z},
              {"threshold", threshold},
              {"corrected", corrected},
              {"steps", steps},
              {"alarm", stop_time >= 0},
              {"stop_time", stop_time >= 0 ? json(stop_time) : json(nullptr)},
              {"kernel_evals", det.kernel_evals()}};
  if (arl > 0.0) report["arl"] = arl;
  std::cout << report.dump() << "\n";

  if (!opt.out_path.empty()) {
    if (opt.format == "csv") {
      Matrix table(static_cast<long>(series.size()), 2);
      for (long i = 0; i < table.rows(); ++i) {
        table(i, 0) = static_cast<double>(b0 + i);
        table(i, 1) = series[static_cast<std::size_t>(i)];
      }
      save_csv(opt.out_path, table, {"t", "m"});
    } else {
      report["m_series"] = series;
      write_text(opt.out_path, report.dump(2));
    }
  }
  return stop_time >= 0 ? 2 : 0;
}

json arl_rows_to_json(const std::vector<ArlRow>& rows) {
  json out = json::array();
  for (const ArlRow& r : rows) {
    out.push_back({{"dist", r.dist},
                   {"dim", r.dim},
                   {"threshold", r.threshold},
                   {"mean_run_length", r.mean_run_length}});
  }
  return out;
}

int cmd_simulate(const CommonOpts& opt) {
  json cfg = load_config(opt.config_path);
  const std::uint64_t seed = require_seed(opt, cfg);
  const std::string experiment = cfg.at("experiment").get<std::string>();
  json report{{"experiment", experiment}, {"seed", seed}};
  Matrix table;
  std::vector<std::string> header;

  if (experiment == "sl") {
    const double alpha = cfg.value("alpha", 0.05);
    const int b_max = cfg.value("b_max", 10);
    const int n_blocks = cfg.value("n_blocks", 10);
    const int dim = cfg.value("dim", 20);
    const int trials = cfg.value("trials", 1000);
    SlResult r = run_sl_experiment(alpha, b_max, n_blocks, dim, trials, seed);
    report["alpha"] = alpha;
    report["b_max"] = b_max;
    report["n_blocks"] = n_blocks;
    report["dim"] = dim;
    report["trials"] = trials;
    report["threshold"] = r.threshold;
    report["sim_threshold"] = r.sim_threshold;
    report["exceed_rate"] = r.exceed_rate;
    table = Matrix(1, 3);
    table << r.threshold, r.sim_threshold, r.exceed_rate;
    header = {"threshold", "sim_threshold", "exceed_rate"};
  } else if (experiment == "arl") {
    const double target = cfg.value("target_arl", 1000.0);
    const int b0 = cfg.value("b0", 50);
    const int n_blocks = cfg.value("n_blocks", 5);
    const int trials = cfg.value("trials", 200);
    const long cap = cfg.value("cap", 6000L);
    std::vector<std::string> dists =
        cfg.value("dists", std::vector<std::string>{"gauss", "expo", "er", "laplace"});
    auto rows = run_arl_experiment(dists, target, b0, n_blocks, trials, cap, seed);
    report["target_arl"] = target;
    report["b0"] = b0;
    report["trials"] = trials;
    report["cap"] = cap;
    report["rows"] = arl_rows_to_json(rows);
    table = Matrix(static_cast<long>(rows.size()), 2);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      table(static_cast<long>(i), 0) = rows[i].threshold;
      table(static_cast<long>(i), 1) = rows[i].mean_run_length;
    }
    header = {"threshold", "mean_run_length"};
  } else if (experiment == "power") {
    const double alpha = cfg.value("alpha", 0.05);
    const long n = cfg.value("n", 200L);
    const long tau = cfg.value("tau", 100L);
    const int n_blocks = cfg.value("n_blocks", 5);
    const int trials = cfg.value("trials", 100);
    const int calib = cfg.value("calib_trials", 300);
    PowerResult r = run_power_experiment(alpha, n, tau, n_blocks, trials, calib, seed);
    report["alpha"] = alpha;
    report["n"] = n;
    report["tau"] = tau;
    report["trials"] = trials;
    report["m_threshold"] = r.m_threshold;
    json rows = json::array();
    table = Matrix(static_cast<long>(r.m_power.size()), 4);
    long i = 0;
    for (const auto& [case_id, mp] : r.m_power) {
      rows.push_back({{"case", case_id},
                      {"m", mp},
                      {"t2", r.t2_power.at(case_id)},
                      {"glr", r.glr_power.at(case_id)}});
      table(i, 0) = case_id;
      table(i, 1) = mp;
      table(i, 2) = r.t2_power.at(case_id);
      table(i, 3) = r.glr_power.at(case_id);
      ++i;
    }
    report["rows"] = rows;
    header = {"case", "m", "t2", "glr"};
  } else if (experiment == "edd") {
    const double target = cfg.value("target_arl", 5000.0);
    const int b0 = cfg.value("b0", 20);
    const int n_blocks = cfg.value("n_blocks", 5);
    const int trials = cfg.value("trials", 100);
    const long cap = cfg.value("cap", 500L);
    std::vector<int> cases = cfg.value("cases", std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8});
    EddResult r = run_edd_experiment(cases, target, b0, n_blocks, trials, cap, seed);
    report["target_arl"] = target;
    report["b0"] = b0;
    report["trials"] = trials;
    report["threshold"] = r.threshold;
    json rows = json::array();
    table = Matrix(static_cast<long>(cases.size()), 3);
    long i = 0;
    for (int c : cases) {
      rows.push_back({{"case", c}, {"edd", r.edd.at(c)}, {"se", r.se.at(c)}});
      table(i, 0) = c;
      table(i, 1) = r.edd.at(c);
      table(i, 2) = r.se.at(c);
      ++i;
    }
    report["rows"] = rows;
    header = {"case", "edd", "se"};
  } else if (experiment == "sweep") {
    const double target = cfg.value("target_arl", 5000.0);
    std::vector<int> grid = cfg.value("grid", std::vector<int>{16, 19, 22, 25, 28, 31, 34, 37, 40});
    std::vector<double> shifts = cfg.value("shifts", std::vector<double>{0.2});
    const int dim = cfg.value("dim", 20);
    const int n_blocks = cfg.value("n_blocks", 5);
    const int trials = cfg.value("trials", 50);
    const long cap = cfg.value("cap", 500L);
    SweepResult r = optimal_block_sweep(grid, shifts, target, dim, n_blocks, trials, cap, seed);
    report["target_arl"] = target;
    report["grid"] = grid;
    json rows = json::array();
    table = Matrix(static_cast<long>(r.rows.size() * grid.size()), 3);
    long i = 0;
    for (const SweepRow& row : r.rows) {
      rows.push_back({{"shift", row.shift}, {"edd", row.edd}, {"best_b0", row.best_b0}});
      for (std::size_t g = 0; g < grid.size(); ++g) {
        table(i, 0) = row.shift;
        table(i, 1) = grid[g];
        table(i, 2) = row.edd[g];
        ++i;
      }
    }
    report["rows"] = rows;
    header = {"shift", "b0", "edd"};
  } else if (experiment == "generate") {
    const std::string name = cfg.at("name").get<std::string>();
    std::vector<double> params = cfg.value("params", std::vector<double>{});
    const long count = cfg.at("count").get<long>();
    SampleGen gen = make_generator(name, params);
    Rng rng = make_rng(seed, 1);
    table = draw_matrix(gen, rng, count);
    report["name"] = name;
    report["rows"] = table.rows();
    report["cols"] = table.cols();
    if (opt.out_path.empty()) throw std::runtime_error("generate requires --out");
  } else {
    throw std::runtime_error("unknown experiment " + experiment);
  }

  std::cout << report.dump(2) << "\n";
  if (!opt.out_path.empty()) {
    if (opt.format == "csv" || experiment == "generate") {
      save_csv(opt.out_path, table, header);
    } else {
      write_text(opt.out_path, report.dump(2));
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel M-statistic change-point detection"};
  app.require_subcommand(1);

  CommonOpts threshold_opt, moments_opt, off_opt, on_opt, sim_opt;
  CLI::App* threshold_cmd = app.add_subcommand("threshold", "analytic detection thresholds");
  add_common(threshold_cmd, threshold_opt);
  CLI::App* moments_cmd = app.add_subcommand("moments", "estimate null h-moment tables");
  add_common(moments_cmd, moments_opt);
  CLI::App* off_cmd = app.add_subcommand("detect-offline", "fixed-sample scan over a test block");
  add_common(off_cmd, off_opt);
  CLI::App* on_cmd = app.add_subcommand("detect-online", "sequential monitoring of a stream");
  add_common(on_cmd, on_opt);
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo experiment drivers");
  add_common(sim_cmd, sim_opt);

  CLI11_PARSE(app, argc, argv);

  try {
    if (threshold_cmd->parsed()) return cmd_threshold(threshold_opt);
    if (moments_cmd->parsed()) return cmd_moments(moments_opt);
    if (off_cmd->parsed()) return cmd_detect_offline(off_opt);
    if (on_cmd->parsed()) return cmd_detect_online(on_opt);
    if (sim_cmd->parsed()) return cmd_simulate(sim_opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
