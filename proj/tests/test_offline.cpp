#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mstat/experiments.hpp"
#include "mstat/generators.hpp"
#include "mstat/offline.hpp"
#include "mstat/rng.hpp"

using namespace mstat;

namespace {

Matrix gauss(int rows, int cols, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return draw_matrix(gaussian_gen(cols), rng, rows);
}

NullMoments unit_tables(int n_blocks, int b_max) {
  NullMoments m;
  m.n_blocks = n_blocks;
  for (int b = 2; b <= b_max; ++b) {
    m.var_by_b[b] = 1.0;
    m.skew_by_b[b] = 0.0;
  }
  return m;
}

std::vector<Matrix> random_blocks(int n_blocks, int b_max, int dim, std::uint64_t seed) {
  std::vector<Matrix> blocks;
  for (int i = 0; i < n_blocks; ++i)
    blocks.push_back(gauss(b_max, dim, seed + static_cast<std::uint64_t>(i)));
  return blocks;
}

bool same(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

}  // namespace

TEST_SUITE("offline") {

TEST_CASE("scan agrees with the direct statistic at every window size") {
  const int n_blocks = 3, b_max = 12, dim = 4;
  KernelSpec spec{1.2};
  auto blocks = random_blocks(n_blocks, b_max, dim, 301);
  Matrix test = gauss(b_max, dim, 399);
  OfflineScan scan = scan_offline(blocks, test, unit_tables(n_blocks, b_max), spec, 3.0);

  REQUIRE(scan.z_by_b.size() == b_max - 1);
  for (int w = 2; w <= b_max; ++w) {
    double direct = 0.0;
    for (const Matrix& blk : blocks)
      direct += mmd_u_squared(blk.bottomRows(w), test.bottomRows(w), spec);
    direct /= n_blocks;
    CHECK(scan.z_by_b[w - 2] == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("block permutation leaves the scan unchanged exactly") {
  const int n_blocks = 5, b_max = 9, dim = 3;
  KernelSpec spec{0.9};
  auto blocks = random_blocks(n_blocks, b_max, dim, 311);
  Matrix test = gauss(b_max, dim, 377);
  NullMoments tables = unit_tables(n_blocks, b_max);

  OfflineScan base = scan_offline(blocks, test, tables, spec, 2.5);
  std::vector<Matrix> shuffled = {blocks[3], blocks[0], blocks[4], blocks[2], blocks[1]};
  OfflineScan perm = scan_offline(shuffled, test, tables, spec, 2.5);

  for (int w = 2; w <= b_max; ++w) CHECK(base.z_by_b[w - 2] == perm.z_by_b[w - 2]);
  CHECK(base.m == perm.m);
  CHECK(base.argmax_b == perm.argmax_b);
}

TEST_CASE("identical data scores zero everywhere and ties resolve to the smallest window") {
  const int n_blocks = 3, b_max = 7;
  Matrix flat = Matrix::Constant(b_max, 2, 1.0);
  std::vector<Matrix> blocks(n_blocks, flat);
  OfflineScan scan = scan_offline(blocks, flat, unit_tables(n_blocks, b_max), KernelSpec{1.0}, 2.0);
  for (int w = 2; w <= b_max; ++w) CHECK(scan.z_by_b[w - 2] == 0.0);
  CHECK(scan.m == 0.0);
  CHECK(scan.argmax_b == 2);
  CHECK_FALSE(scan.alarm);
}

TEST_CASE("single window size degenerates to the plain standardized statistic") {
  const int b_max = 2, dim = 3;
  KernelSpec spec{1.0};
  auto blocks = random_blocks(4, b_max, dim, 321);
  Matrix test = gauss(b_max, dim, 391);
  NullMoments tables = unit_tables(4, 2);
  tables.var_by_b[2] = 0.25;
  OfflineScan scan = scan_offline(blocks, test, tables, spec, 10.0);
  REQUIRE(scan.z_by_b.size() == 1);
  CHECK(scan.argmax_b == 2);
  CHECK(scan.m == doctest::Approx(scan.z_by_b[0] / 0.5).epsilon(1e-15));
}

TEST_CASE("a localized change pins the window and the change index") {
  const int n_blocks = 4, b_max = 10, dim = 2, post = 4;
  auto blocks = random_blocks(n_blocks, b_max, dim, 331);
  Matrix test = gauss(b_max, dim, 397);
  test.bottomRows(post).array() += 4.0;  // change at row b_max - post

  Matrix pool = gauss(600, dim, 333);
  KernelSpec spec{median_bandwidth(pool)};
  HMoments hm = estimate_h_moments(pool, spec, 20000, 5);
  NullMoments tables = NullMoments::build(hm, n_blocks, b_max);

  OfflineScan scan = scan_offline(blocks, test, tables, spec, 3.0);
  CHECK(scan.argmax_b == post);
  CHECK(scan.change_index == b_max - post);
  CHECK(scan.alarm);
  CHECK(scan.m > 3.0);
}

TEST_CASE("raising the threshold only removes alarms") {
  auto blocks = random_blocks(3, 8, 2, 341);
  Matrix test = gauss(8, 2, 387);
  test.array() += 1.5;
  NullMoments tables = unit_tables(3, 8);
  OfflineScan loose = scan_offline(blocks, test, tables, KernelSpec{1.0}, 0.01);
  OfflineScan tight = scan_offline(blocks, test, tables, KernelSpec{1.0}, 1e9);
  CHECK(loose.m == tight.m);
  if (tight.alarm) CHECK(loose.alarm);
  CHECK_FALSE(tight.alarm);
}

TEST_CASE("scan validates its moment tables") {
  auto blocks = random_blocks(3, 6, 2, 351);
  Matrix test = gauss(6, 2, 385);
  NullMoments partial = unit_tables(3, 5);  // missing B = 6
  CHECK_THROWS_AS(scan_offline(blocks, test, partial, KernelSpec{1.0}, 2.0),
                  std::invalid_argument);
}

TEST_CASE("block construction covers the pool exactly when sizes match") {
  const int n_blocks = 4, b_max = 6;
  Matrix ref = gauss(n_blocks * b_max, 1, 361);
  Matrix test = gauss(b_max, 1, 383);
  OfflineBlocks blocks = build_offline_blocks(ref, test, n_blocks, b_max, 9);
  REQUIRE(blocks.ref_blocks.size() == n_blocks);

  std::vector<double> drawn;
  for (const Matrix& blk : blocks.ref_blocks) {
    REQUIRE(blk.rows() == b_max);
    for (int r = 0; r < b_max; ++r) drawn.push_back(blk(r, 0));
  }
  std::vector<double> pool(ref.data(), ref.data() + ref.size());
  std::sort(drawn.begin(), drawn.end());
  std::sort(pool.begin(), pool.end());
  CHECK(drawn == pool);
}

TEST_CASE("block construction is seeded and validates sizes") {
  Matrix ref = gauss(50, 2, 371);
  Matrix test = gauss(10, 2, 381);
  OfflineBlocks a = build_offline_blocks(ref, test, 4, 10, 77);
  OfflineBlocks b = build_offline_blocks(ref, test, 4, 10, 77);
  for (int i = 0; i < 4; ++i) CHECK(same(a.ref_blocks[i], b.ref_blocks[i]));

  OfflineBlocks c = build_offline_blocks(ref, test, 4, 10, 78);
  bool all_same = true;
  for (int i = 0; i < 4; ++i) all_same = all_same && same(a.ref_blocks[i], c.ref_blocks[i]);
  CHECK_FALSE(all_same);

  Matrix tiny = gauss(39, 2, 379);
  CHECK_THROWS_AS(build_offline_blocks(tiny, test, 4, 10, 77), std::invalid_argument);
}

TEST_CASE("contiguous blocks slice the reference in order") {
  Matrix ref = gauss(30, 2, 391);
  Matrix test = gauss(10, 2, 393);
  OfflineBlocks blocks = build_offline_blocks(ref, test, 3, 10, 5, /*contiguous=*/true);
  for (int i = 0; i < 3; ++i) CHECK(same(blocks.ref_blocks[i], ref.middleRows(10 * i, 10)));
}

TEST_CASE("appending rows the blocks never sample does not move the statistic") {
  const int n_blocks = 3, b_max = 8, dim = 2;
  Matrix ref = gauss(n_blocks * b_max, dim, 401);
  Matrix extra = gauss(7, dim, 403);
  Matrix ref_plus(ref.rows() + extra.rows(), dim);
  ref_plus << ref, extra;
  Matrix test = gauss(b_max, dim, 405);

  KernelSpec spec{1.1};
  NullMoments tables = unit_tables(n_blocks, b_max);
  OfflineBlocks base = build_offline_blocks(ref, test, n_blocks, b_max, 3, true);
  OfflineBlocks padded = build_offline_blocks(ref_plus, test, n_blocks, b_max, 3, true);
  OfflineScan a = scan_offline(base.ref_blocks, test, tables, spec, 2.0);
  OfflineScan b = scan_offline(padded.ref_blocks, test, tables, spec, 2.0);
  CHECK(a.m == b.m);
  for (int w = 2; w <= b_max; ++w) CHECK(a.z_by_b[w - 2] == b.z_by_b[w - 2]);
}

TEST_CASE("standardized null scores have unit scale") {
  const int dim = 3, n_blocks = 5, b = 2;
  Matrix pool = gauss(800, dim, 411);
  KernelSpec spec{median_bandwidth(pool)};
  HMoments hm = estimate_h_moments(pool, spec, 60000, 11);
  const double sd = std::sqrt(var_zb(hm, b, n_blocks));

  Vector z = simulate_z_null(b, n_blocks, dim, spec, 6000, 413);
  const double mean = z.mean() / sd;
  const double var = (z.array() - z.mean()).square().sum() / (z.size() - 1) / (sd * sd);
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(var - 1.0) < 0.1);
}

TEST_CASE("end-to-end detection on a shifted sequence") {
  const int dim = 3, n_blocks = 4, b_max = 20;
  Matrix ref = gauss(400, dim, 421);
  Matrix test = gauss(b_max, dim, 423);
  test.bottomRows(10).array() += 3.0;

  OfflineOptions opt;
  opt.seed = 17;
  opt.n_draws = 8000;
  OfflineDetection hit = detect_offline(ref, test, n_blocks, b_max, 0.01, opt);
  CHECK(hit.scan.alarm);
  CHECK(hit.scan.m > hit.scan.b);
  CHECK(hit.kernel.bandwidth > 0.0);
  CHECK(hit.alpha == 0.01);

  Matrix quiet = gauss(b_max, dim, 425);
  OfflineDetection miss = detect_offline(ref, quiet, n_blocks, b_max, 0.01, opt);
  CHECK_FALSE(miss.scan.alarm);
  CHECK(miss.scan.alarm == (miss.scan.m > miss.scan.b));
}

}  // TEST_SUITE
