#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mstat/generators.hpp"
#include "mstat/io.hpp"
#include "mstat/rng.hpp"
#include "mstat/thresholds.hpp"

using namespace mstat;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out = fs::temp_directory_path() / ("mstat_cli_out_" + std::to_string(counter));
  const fs::path err = fs::temp_directory_path() / ("mstat_cli_err_" + std::to_string(counter));
  ++counter;
  const std::string cmd = std::string(MSTAT_CLI_PATH) + " " + args + " > " + out.string() +
                          " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  CliResult res;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  res.out = slurp(out);
  res.err = slurp(err);
  fs::remove(out);
  fs::remove(err);
  return res;
}

fs::path write_json(const std::string& name, const json& j) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p);
  out << j.dump();
  return p;
}

fs::path write_csv(const std::string& name, const Matrix& m) {
  const fs::path p = fs::temp_directory_path() / name;
  save_csv(p.string(), m);
  return p;
}

Matrix gauss(int rows, int cols, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return draw_matrix(gaussian_gen(cols), rng, rows);
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("threshold solves the offline and online levels") {
  const fs::path cfg =
      write_json("mstat_cli_th.json", json{{"mode", "offline"}, {"alpha", 0.05}, {"b_max", 20}});
  CliResult res = run_cli("threshold --config " + cfg.string());
  REQUIRE(res.exit_code == 0);
  json report = json::parse(res.out);
  CHECK(report.at("mode") == "offline");
  CHECK(report.at("b").get<double>() ==
        doctest::Approx(solve_offline_threshold(0.05, 20)).epsilon(1e-12));
  fs::remove(cfg);

  const fs::path cfg2 =
      write_json("mstat_cli_th2.json", json{{"mode", "online"}, {"arl", 5000}, {"b0", 20}});
  CliResult res2 = run_cli("threshold --config " + cfg2.string());
  REQUIRE(res2.exit_code == 0);
  json report2 = json::parse(res2.out);
  CHECK(report2.at("b").get<double>() ==
        doctest::Approx(solve_online_threshold(5000.0, 20)).epsilon(1e-12));
  fs::remove(cfg2);
}

TEST_CASE("bad invocations exit with one and explain themselves") {
  CliResult none = run_cli("");
  CHECK(none.exit_code != 0);

  const fs::path cfg = write_json("mstat_cli_badmode.json", json{{"mode", "sideways"}});
  CliResult bad = run_cli("threshold --config " + cfg.string());
  CHECK(bad.exit_code == 1);
  CHECK(bad.err.find("error") != std::string::npos);
  fs::remove(cfg);
}

TEST_CASE("randomized commands demand a seed") {
  const fs::path ref = write_csv("mstat_cli_pool.csv", gauss(120, 3, 901));
  CliResult res = run_cli("moments --ref " + ref.string());
  CHECK(res.exit_code == 1);
  CHECK(res.err.find("seed") != std::string::npos);

  CliResult ok = run_cli("moments --ref " + ref.string() + " --seed 11");
  REQUIRE(ok.exit_code == 0);
  json wrapper = json::parse(ok.out);
  CHECK(wrapper.at("bandwidth").get<double>() > 0.0);
  CHECK(wrapper.at("moments").at("h").at("e_h2").get<double>() > 0.0);
  fs::remove(ref);
}

TEST_CASE("offline detection signals through the exit code") {
  Matrix ref = gauss(400, 3, 903);
  Matrix changed = gauss(30, 3, 905);
  changed.bottomRows(12).array() += 3.0;
  const fs::path ref_p = write_csv("mstat_cli_ref.csv", ref);
  const fs::path hit_p = write_csv("mstat_cli_hit.csv", changed);
  const fs::path cfg = write_json("mstat_cli_off.json",
                                  json{{"alpha", 0.01}, {"n_blocks", 4}, {"n_draws", 8000}});
  const fs::path series = fs::temp_directory_path() / "mstat_cli_series.csv";

  CliResult res = run_cli("detect-offline --ref " + ref_p.string() + " --data " + hit_p.string() +
                          " --config " + cfg.string() + " --seed 7 --out " + series.string() +
                          " --format csv");
  CHECK(res.exit_code == 2);
  json report = json::parse(res.out);
  CHECK(report.at("alarm").get<bool>());
  CHECK(report.at("m").get<double>() > report.at("threshold").get<double>());
  CHECK(report.at("b_max").get<int>() == 30);

  Matrix table = load_csv(series.string());
  CHECK(table.rows() == 29);  // windows 2..b_max
  CHECK(table.cols() == 3);   // b, z, z_prime
  CHECK(table(0, 0) == 2.0);

  Matrix quiet = gauss(30, 3, 907);
  const fs::path quiet_p = write_csv("mstat_cli_quiet.csv", quiet);
  CliResult res2 = run_cli("detect-offline --ref " + ref_p.string() + " --data " +
                           quiet_p.string() + " --config " + cfg.string() + " --seed 7");
  CHECK(res2.exit_code == 0);
  json report2 = json::parse(res2.out);
  CHECK_FALSE(report2.at("alarm").get<bool>());

  for (const fs::path& p : {ref_p, hit_p, cfg, series, quiet_p}) fs::remove(p);
}

TEST_CASE("online detection streams one json line per emission") {
  Matrix pool = gauss(300, 3, 909);
  Matrix stream(60, 3);
  stream.topRows(25) = gauss(25, 3, 911);
  stream.bottomRows(35) = gauss(35, 3, 913);
  stream.bottomRows(35).array() += 2.5;

  const fs::path pool_p = write_csv("mstat_cli_onpool.csv", pool);
  const fs::path stream_p = write_csv("mstat_cli_stream.csv", stream);
  const fs::path cfg = write_json(
      "mstat_cli_on.json",
      json{{"b0", 10}, {"n_blocks", 4}, {"arl", 500}, {"n_draws", 8000}});

  CliResult res = run_cli("detect-online --ref " + pool_p.string() + " --data " +
                          stream_p.string() + " --config " + cfg.string() + " --seed 3");
  REQUIRE(res.exit_code == 2);

  const std::vector<std::string> lines = lines_of(res.out);
  REQUIRE(lines.size() >= 2);
  long prev_t = 0;
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
    json emission = json::parse(lines[i]);
    const long t = emission.at("t").get<long>();
    CHECK(t >= 10);
    CHECK(t > prev_t);
    prev_t = t;
    CHECK(emission.contains("m"));
    CHECK(emission.contains("alarm"));
  }
  json report = json::parse(lines.back());
  CHECK(report.at("mode") == "online");
  CHECK(report.at("alarm").get<bool>());
  CHECK(report.at("stop_time").get<long>() == prev_t);
  CHECK(report.at("stop_time").get<long>() > 25);  // fires after the change hits
  CHECK(report.at("threshold").get<double>() > 0.0);

  for (const fs::path& p : {pool_p, stream_p, cfg}) fs::remove(p);
}

TEST_CASE("online detection without an alarm exits zero and censors") {
  Matrix pool = gauss(300, 2, 915);
  Matrix stream = gauss(40, 2, 917);
  const fs::path pool_p = write_csv("mstat_cli_nullpool.csv", pool);
  const fs::path stream_p = write_csv("mstat_cli_nullstream.csv", stream);
  const fs::path cfg = write_json(
      "mstat_cli_on0.json",
      json{{"b0", 10}, {"n_blocks", 4}, {"threshold", 1e9}, {"n_draws", 8000}});

  CliResult res = run_cli("detect-online --ref " + pool_p.string() + " --data " +
                          stream_p.string() + " --config " + cfg.string() + " --seed 5");
  CHECK(res.exit_code == 0);
  const std::vector<std::string> lines = lines_of(res.out);
  json report = json::parse(lines.back());
  CHECK_FALSE(report.at("alarm").get<bool>());
  CHECK(report.at("stop_time").is_null());
  CHECK(report.at("steps").get<int>() == 40);

  for (const fs::path& p : {pool_p, stream_p, cfg}) fs::remove(p);
}

}  // TEST_SUITE
