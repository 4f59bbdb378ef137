#pragma once

#include <cstdint>
#include <vector>

#include "mstat/common.hpp"
#include "mstat/kernel.hpp"
#include "mstat/moments.hpp"

namespace mstat {

struct OfflineBlocks {
  std::vector<Matrix> ref_blocks;  // N blocks of b_max rows each
  Matrix test_block;               // b_max rows
};

// Reference blocks drawn without replacement from the pool (or sliced
// contiguously when contiguous = true); the test block is passed through.
OfflineBlocks build_offline_blocks(const Eigen::Ref<const Matrix>& reference,
                                   const Eigen::Ref<const Matrix>& test, int n_blocks, int b_max,
                                   std::uint64_t seed, bool contiguous = false);

struct OfflineScan {
  Vector z_by_b;        // Z_B for B = 2..b_max (index B-2)
  Vector z_prime_by_b;  // standardized series
  double m = 0.0;       // max of z_prime_by_b
  int argmax_b = 2;     // smallest window size attaining the max
  double b = 0.0;       // threshold
  bool alarm = false;
  int n_blocks = 0;
  int b_max = 0;
  int change_index = 0;  // b_max - argmax_b: first post-change row of the test block
};

// Scans window sizes B = 2..b_max over the right-most B points of every block.
// Each extension reuses the previous window's pair sums, so the whole series
// costs O(N b_max^2) kernel evaluations.
OfflineScan scan_offline(const std::vector<Matrix>& ref_blocks, const Matrix& test_block,
                         const NullMoments& moments, const KernelSpec& spec, double b);

struct OfflineOptions {
  double bandwidth = 0.0;  // 0 resolves the median heuristic on the reference pool
  std::uint64_t n_draws = 20000;
  std::uint64_t seed = 0;
  bool corrected = false;
  bool contiguous_blocks = false;
  bool wide_nu_argument = false;
};

struct OfflineDetection {
  OfflineScan scan;
  NullMoments moments;
  KernelSpec kernel;
  double alpha = 0.0;
  int threshold_fallbacks = 0;  // corrected-threshold windows that lost their tilt
};

// moments -> threshold -> blocks -> scan
OfflineDetection detect_offline(const Eigen::Ref<const Matrix>& reference,
                                const Eigen::Ref<const Matrix>& test, int n_blocks, int b_max,
                                double alpha, const OfflineOptions& opt = {});

}  // namespace mstat
