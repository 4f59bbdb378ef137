#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "mstat/generators.hpp"
#include "mstat/io.hpp"
#include "mstat/moments.hpp"
#include "mstat/rng.hpp"

using namespace mstat;
namespace fs = std::filesystem;

namespace {

fs::path tmp_file(const std::string& name) { return fs::temp_directory_path() / name; }

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Matrix m = draw_matrix(gaussian_gen(cols), rng, rows);
  return m;
}

NullMoments sample_tables() {
  HMoments h;
  h.e_h2 = 0.123456789012345;
  h.cov_hh = 3.9e-5;
  h.t1 = -0.25;
  h.t2 = 0.5;
  h.t3 = 1.0 / 3.0;
  h.t4 = 2.0;
  h.t5 = -1e-7;
  h.t6 = 0.0;
  h.n_draws = 150000;
  h.seed = 42;
  return NullMoments::build(h, 5, 12);
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("csv round-trip is bit exact") {
  const fs::path p = tmp_file("mstat_io_roundtrip.csv");
  Matrix m = random_matrix(50, 7, 801);
  m(0, 0) = 1e-300;
  m(1, 1) = -9.87654321098765432e18;
  m(2, 2) = 0.1;  // not exactly representable; nails the 17-digit requirement
  m(3, 3) = 0.0;
  save_csv(p.string(), m);
  Matrix back = load_csv(p.string());
  REQUIRE(back.rows() == m.rows());
  REQUIRE(back.cols() == m.cols());
  CHECK((back.array() == m.array()).all());
  fs::remove(p);
}

TEST_CASE("large csv survives the trip") {
  const fs::path p = tmp_file("mstat_io_large.csv");
  Matrix m = random_matrix(3000, 20, 803);
  save_csv(p.string(), m);
  Matrix back = load_csv(p.string());
  CHECK((back.array() == m.array()).all());
  fs::remove(p);
}

TEST_CASE("headers are written and skipped") {
  const fs::path p = tmp_file("mstat_io_header.csv");
  Matrix m = random_matrix(6, 3, 805);
  save_csv(p.string(), m, {"alpha", "beta", "gamma"});
  std::ifstream in(p);
  std::string first;
  std::getline(in, first);
  CHECK(first == "alpha,beta,gamma");
  Matrix back = load_csv(p.string());
  CHECK((back.array() == m.array()).all());
  fs::remove(p);

  CHECK_THROWS_AS(save_csv(p.string(), m, {"only", "two"}), std::invalid_argument);
}

TEST_CASE("headerless numeric data is not mistaken for a header") {
  const fs::path p = tmp_file("mstat_io_noheader.csv");
  write_text(p, "1.5,2\n3,4\n");
  Matrix m = load_csv(p.string());
  REQUIRE(m.rows() == 2);
  CHECK(m(0, 0) == 1.5);
  CHECK(m(1, 1) == 4.0);
  fs::remove(p);
}

TEST_CASE("blank lines are ignored") {
  const fs::path p = tmp_file("mstat_io_blank.csv");
  write_text(p, "a,b\n1,2\n\n3,4\n\n");
  Matrix m = load_csv(p.string());
  REQUIRE(m.rows() == 2);
  CHECK(m(1, 0) == 3.0);
  fs::remove(p);
}

TEST_CASE("ragged rows raise with the line number") {
  const fs::path p = tmp_file("mstat_io_ragged.csv");
  write_text(p, "1,2\n3,4\n5,6,7\n");
  try {
    load_csv(p.string());
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  fs::remove(p);
}

TEST_CASE("non-numeric cells raise with the location") {
  const fs::path p = tmp_file("mstat_io_badcell.csv");
  write_text(p, "1,2\n3,oops\n");
  try {
    load_csv(p.string());
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    CHECK(what.find("line 2") != std::string::npos);
  }
  fs::remove(p);
}

TEST_CASE("missing and empty files raise") {
  CHECK_THROWS_AS(load_csv("/nonexistent/certainly_missing.csv"), std::runtime_error);
  const fs::path p = tmp_file("mstat_io_empty.csv");
  write_text(p, "");
  CHECK_THROWS_AS(load_csv(p.string()), std::runtime_error);
  fs::remove(p);
}

TEST_CASE("moment tables survive a json round-trip") {
  NullMoments tables = sample_tables();
  const std::string text = moments_to_json(tables);
  NullMoments back = moments_from_json(text);
  CHECK(back.h.e_h2 == tables.h.e_h2);
  CHECK(back.h.cov_hh == tables.h.cov_hh);
  CHECK(back.h.t1 == tables.h.t1);
  CHECK(back.h.t5 == tables.h.t5);
  CHECK(back.h.n_draws == tables.h.n_draws);
  CHECK(back.h.seed == tables.h.seed);
  CHECK(back.n_blocks == tables.n_blocks);
  REQUIRE(back.var_by_b.size() == tables.var_by_b.size());
  for (const auto& [b, v] : tables.var_by_b) {
    CHECK(back.var_by_b.at(b) == v);
    CHECK(back.skew_by_b.at(b) == tables.skew_by_b.at(b));
  }
  CHECK_THROWS_AS(moments_from_json("not json at all"), std::runtime_error);
}

TEST_CASE("the moments cache stores and recalls by key") {
  const fs::path p = tmp_file("mstat_io_cache.json");
  fs::remove(p);
  NullMoments tables = sample_tables();
  Matrix pool = random_matrix(30, 2, 807);
  const std::string key = pool_cache_key(pool, 1.5, 10000, 3);

  CHECK_FALSE(cache_lookup(p.string(), key).has_value());
  cache_store(p.string(), key, tables);
  auto hit = cache_lookup(p.string(), key);
  REQUIRE(hit.has_value());
  CHECK(hit->h.e_h2 == tables.h.e_h2);
  CHECK(hit->var_by_b.at(5) == tables.var_by_b.at(5));

  // a second entry coexists with the first
  const std::string key2 = pool_cache_key(pool, 1.5, 20000, 3);
  NullMoments other = sample_tables();
  other.h.e_h2 = 0.5;
  cache_store(p.string(), key2, other);
  CHECK(cache_lookup(p.string(), key)->h.e_h2 == tables.h.e_h2);
  CHECK(cache_lookup(p.string(), key2)->h.e_h2 == 0.5);

  // corrupt cache files miss instead of raising
  write_text(p, "{{{{");
  CHECK_FALSE(cache_lookup(p.string(), key).has_value());
  fs::remove(p);
}

TEST_CASE("cache keys track every estimation input") {
  Matrix pool = random_matrix(30, 2, 809);
  const std::string base = pool_cache_key(pool, 1.5, 10000, 3);
  CHECK(pool_cache_key(pool, 1.6, 10000, 3) != base);
  CHECK(pool_cache_key(pool, 1.5, 20000, 3) != base);
  CHECK(pool_cache_key(pool, 1.5, 10000, 4) != base);
  Matrix nudged = pool;
  nudged(7, 1) += 1e-12;
  CHECK(pool_cache_key(nudged, 1.5, 10000, 3) != base);
  CHECK(pool_cache_key(pool, 1.5, 10000, 3) == base);
}

}  // TEST_SUITE
