#include "mstat/offline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mstat/rng.hpp"
#include "mstat/thresholds.hpp"

namespace mstat {

OfflineBlocks build_offline_blocks(const Eigen::Ref<const Matrix>& reference,
                                   const Eigen::Ref<const Matrix>& test, int n_blocks, int b_max,
                                   std::uint64_t seed, bool contiguous) {
  if (n_blocks < 1) throw std::invalid_argument("build_offline_blocks: need at least one block");
  if (b_max < 2) throw std::invalid_argument("build_offline_blocks: b_max must be at least 2");
  if (reference.cols() != test.cols())
    throw std::invalid_argument("build_offline_blocks: dimension mismatch");
  if (test.rows() != b_max)
    throw std::invalid_argument("build_offline_blocks: test block must have b_max rows");
  const long need = static_cast<long>(n_blocks) * b_max;
  if (reference.rows() < need)
    throw std::invalid_argument("build_offline_blocks: insufficient reference data");

  OfflineBlocks out;
  out.test_block = test;
  out.ref_blocks.reserve(static_cast<std::size_t>(n_blocks));
  if (contiguous) {
    for (int i = 0; i < n_blocks; ++i)
      out.ref_blocks.push_back(reference.middleRows(static_cast<long>(i) * b_max, b_max));
    return out;
  }
  Rng rng = make_rng(seed);
  std::vector<int> idx =
      sample_without_replacement(static_cast<int>(reference.rows()), static_cast<int>(need), rng);
  std::size_t at = 0;
  for (int i = 0; i < n_blocks; ++i) {
    Matrix block(b_max, reference.cols());
    for (int r = 0; r < b_max; ++r) block.row(r) = reference.row(idx[at++]);
    out.ref_blocks.push_back(std::move(block));
  }
  return out;
}

OfflineScan scan_offline(const std::vector<Matrix>& ref_blocks, const Matrix& test_block,
                         const NullMoments& moments, const KernelSpec& spec, double b) {
  const int n_blocks = static_cast<int>(ref_blocks.size());
  if (n_blocks < 1) throw std::invalid_argument("scan_offline: need at least one reference block");
  const int b_max = static_cast<int>(test_block.rows());
  if (b_max < 2) throw std::invalid_argument("scan_offline: test block needs at least 2 rows");
  for (const Matrix& blk : ref_blocks)
    if (blk.rows() != b_max || blk.cols() != test_block.cols())
      throw std::invalid_argument("scan_offline: block shape mismatch");
  for (int w = 2; w <= b_max; ++w)
    if (!moments.var_by_b.count(w))
      throw std::invalid_argument("scan_offline: missing variance entry for B=" +
                                  std::to_string(w));

  // Work on time-reversed copies: the right-most w points of every block become
  // the first w rows, so growing the window appends pairs instead of shifting.
  Matrix test_rev(b_max, test_block.cols());
  for (int r = 0; r < b_max; ++r) test_rev.row(r) = test_block.row(b_max - 1 - r);

  // Per-block cumulative sums of h over unordered pairs within the leading
  // window of the reversed blocks.  Kept separate per block and merged in
  // sorted order below so that Z_B is exactly invariant to block permutation.
  const Matrix kyy = gram(test_rev, test_rev, spec);
  Matrix block_pair_sums(b_max - 1, n_blocks);
  for (int i = 0; i < n_blocks; ++i) {
    const Matrix& blk = ref_blocks[i];
    Matrix blk_rev(b_max, blk.cols());
    for (int r = 0; r < b_max; ++r) blk_rev.row(r) = blk.row(b_max - 1 - r);
    const Matrix kxx = gram(blk_rev, blk_rev, spec);
    const Matrix kxy = gram(blk_rev, test_rev, spec);
    Accum pair_sum;
    for (int w = 2; w <= b_max; ++w) {
      Accum row;
      for (int l = 0; l < w - 1; ++l)
        row.add(kxx(w - 1, l) + kyy(w - 1, l) - kxy(w - 1, l) - kxy(l, w - 1));
      pair_sum.add(row.total());
      block_pair_sums(w - 2, i) = pair_sum.total();
    }
  }

  OfflineScan scan;
  scan.n_blocks = n_blocks;
  scan.b_max = b_max;
  scan.b = b;
  scan.z_by_b.resize(b_max - 1);
  scan.z_prime_by_b.resize(b_max - 1);
  scan.m = -std::numeric_limits<double>::infinity();

  std::vector<double> merged(n_blocks);
  for (int w = 2; w <= b_max; ++w) {
    for (int i = 0; i < n_blocks; ++i) merged[i] = block_pair_sums(w - 2, i);
    std::sort(merged.begin(), merged.end());
    Accum pair_sum;
    for (double v : merged) pair_sum.add(v);
    const double z = 2.0 * pair_sum.total() /
                     (static_cast<double>(n_blocks) * static_cast<double>(w) * (w - 1.0));
    const double zp = z / std::sqrt(moments.var_by_b.at(w));
    scan.z_by_b[w - 2] = z;
    scan.z_prime_by_b[w - 2] = zp;
    if (zp > scan.m) {
      scan.m = zp;
      scan.argmax_b = w;
    }
  }
  scan.alarm = scan.m > b;
  scan.change_index = b_max - scan.argmax_b;
  return scan;
}

OfflineDetection detect_offline(const Eigen::Ref<const Matrix>& reference,
                                const Eigen::Ref<const Matrix>& test, int n_blocks, int b_max,
                                double alpha, const OfflineOptions& opt) {
  KernelSpec spec;
  spec.bandwidth = opt.bandwidth > 0.0
                       ? opt.bandwidth
                       : median_bandwidth(reference, 1000, derive_seed(opt.seed, 101));
  const HMoments h = estimate_h_moments(reference, spec, opt.n_draws, opt.seed);
  NullMoments moments = NullMoments::build(h, n_blocks, b_max);

  OfflineDetection det;
  det.kernel = spec;
  det.alpha = alpha;
  double b;
  if (opt.corrected) {
    b = solve_offline_threshold_corrected(alpha, b_max, moments.skew_by_b,
                                          opt.wide_nu_argument, &det.threshold_fallbacks);
  } else {
    b = solve_offline_threshold(alpha, b_max, opt.wide_nu_argument);
  }
  OfflineBlocks blocks = build_offline_blocks(reference, test, n_blocks, b_max,
                                              derive_seed(opt.seed, 102), opt.contiguous_blocks);
  det.scan = scan_offline(blocks.ref_blocks, blocks.test_block, moments, spec, b);
  det.moments = std::move(moments);
  return det;
}

}  // namespace mstat
