#include "mstat/moments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mstat/rng.hpp"

namespace mstat {

namespace {

constexpr int kChunks = 64;

double comb2(int n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1); }

}  // namespace

HMoments estimate_h_moments(const Eigen::Ref<const Matrix>& pool, const KernelSpec& spec,
                            std::uint64_t n_draws, std::uint64_t seed) {
  const int n = static_cast<int>(pool.rows());
  if (n < 9)
    throw std::invalid_argument("estimate_h_moments: pool needs at least 9 samples");
  if (n_draws < 1000)
    throw std::invalid_argument("estimate_h_moments: n_draws must be at least 1000");
  if (!pool.allFinite())
    throw std::invalid_argument("estimate_h_moments: pool contains non-finite entries");

  // Ten running sums: means of h1 and hb for the covariance, h1^2, h1*hb, and
  // the six triple products. Draws are split into fixed chunks with derived
  // sub-seeds so the result is independent of any future parallel scheduling.
  Accum s_h1, s_hb, s_h1h1, s_h1hb, s_t1, s_t2, s_t3, s_t4, s_t5, s_t6;

  for (int c = 0; c < kChunks; ++c) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(c));
    std::uint64_t cnt = n_draws / kChunks + (static_cast<std::uint64_t>(c) < n_draws % kChunks);
    Accum c_h1, c_hb, c_h1h1, c_h1hb, c_t1, c_t2, c_t3, c_t4, c_t5, c_t6;
    for (std::uint64_t it = 0; it < cnt; ++it) {
      // Each draw takes nine distinct pool points. The index pattern realizes
      // the sharing structure of the moment expectations: hb/hc reuse the
      // y-pair of h1 (covariance and t5/t6 terms), while the *_y variants
      // share a single y' across otherwise-disjoint argument tuples (t1-t3).
      std::vector<int> p = sample_without_replacement(n, 9, rng);
      auto row = [&](int j) { return pool.row(p[static_cast<std::size_t>(j)]); };
      const double h1 = h_eval(row(0), row(1), row(3), row(4), spec);
      const double ha = h_eval(row(1), row(2), row(4), row(5), spec);
      const double hb = h_eval(row(2), row(6), row(3), row(4), spec);
      const double hc = h_eval(row(7), row(8), row(3), row(4), spec);
      const double h1_y = h_eval(row(2), row(0), row(5), row(3), spec);
      const double h2_y = h_eval(row(6), row(7), row(5), row(3), spec);
      const double h3_x = h_eval(row(2), row(6), row(4), row(5), spec);
      const double h3_y = h_eval(row(7), row(8), row(5), row(3), spec);
      c_h1.add(h1);
      c_hb.add(hb);
      c_h1h1.add(h1 * h1);
      c_h1hb.add(h1 * hb);
      c_t1.add(h1 * ha * h1_y);
      c_t2.add(h1 * ha * h2_y);
      c_t3.add(h1 * h3_x * h3_y);
      c_t4.add(h1 * h1 * h1);
      c_t5.add(h1 * h1 * hb);
      c_t6.add(h1 * hb * hc);
    }
    s_h1.add(c_h1.total());
    s_hb.add(c_hb.total());
    s_h1h1.add(c_h1h1.total());
    s_h1hb.add(c_h1hb.total());
    s_t1.add(c_t1.total());
    s_t2.add(c_t2.total());
    s_t3.add(c_t3.total());
    s_t4.add(c_t4.total());
    s_t5.add(c_t5.total());
    s_t6.add(c_t6.total());
  }

  const double inv = 1.0 / static_cast<double>(n_draws);
  HMoments m;
  m.e_h2 = s_h1h1.total() * inv;
  m.cov_hh = s_h1hb.total() * inv - (s_h1.total() * inv) * (s_hb.total() * inv);
  m.t1 = s_t1.total() * inv;
  m.t2 = s_t2.total() * inv;
  m.t3 = s_t3.total() * inv;
  m.t4 = s_t4.total() * inv;
  m.t5 = s_t5.total() * inv;
  m.t6 = s_t6.total() * inv;
  m.n_draws = n_draws;
  m.seed = seed;
  if (!std::isfinite(m.e_h2) || !std::isfinite(m.cov_hh))
    throw std::runtime_error("estimate_h_moments: non-finite moment estimate");
  return m;
}

double var_zb(const HMoments& h, int b, int n_blocks) {
  if (b < 2) throw std::invalid_argument("var_zb: block size must be at least 2");
  if (n_blocks < 1) throw std::invalid_argument("var_zb: need at least one block");
  const double nn = static_cast<double>(n_blocks);
  const double v = (h.e_h2 / nn + (nn - 1.0) / nn * h.cov_hh) / comb2(b);
  if (!(v > 0.0))
    throw std::runtime_error("var_zb: non-positive variance estimate; increase n_draws");
  return v;
}

double third_moment_zb(const HMoments& h, int b, int n_blocks) {
  if (b < 2) throw std::invalid_argument("third_moment_zb: block size must be at least 2");
  if (n_blocks < 1) throw std::invalid_argument("third_moment_zb: need at least one block");
  const double bb = static_cast<double>(b);
  const double nn = static_cast<double>(n_blocks);
  const double denom = bb * bb * (bb - 1.0) * (bb - 1.0);
  const double a1 = 8.0 * (bb - 2.0) / denom;
  const double a2 = 4.0 / denom;
  const double n2 = nn * nn;
  const double s1 = h.t1 / n2 + 3.0 * (nn - 1.0) / n2 * h.t2 + (nn - 1.0) * (nn - 2.0) / n2 * h.t3;
  const double s2 = h.t4 / n2 + 3.0 * (nn - 1.0) / n2 * h.t5 + (nn - 1.0) * (nn - 2.0) / n2 * h.t6;
  return a1 * s1 + a2 * s2;
}

double skewness_zb(const HMoments& h, int b, int n_blocks) {
  const double v = var_zb(h, b, n_blocks);
  return third_moment_zb(h, b, n_blocks) / (v * std::sqrt(v));
}

double offline_correlation(int u, int v) {
  if (u < 2 || v < 2)
    throw std::invalid_argument("offline_correlation: window sizes must be at least 2");
  return std::sqrt(comb2(u) * comb2(v)) / comb2(std::max(u, v));
}

double online_correlation(int b0, int s) {
  if (b0 < 2) throw std::invalid_argument("online_correlation: B0 must be at least 2");
  if (s < 0) throw std::invalid_argument("online_correlation: lag must be non-negative");
  if (s >= b0 - 1) return 0.0;
  const double ss = static_cast<double>(s);
  return (1.0 - ss / b0) * (1.0 - ss / (b0 - 1.0));
}

NullMoments NullMoments::build(const HMoments& h, int n_blocks, int b_max) {
  if (b_max < 2) throw std::invalid_argument("NullMoments: b_max must be at least 2");
  NullMoments out;
  out.h = h;
  out.n_blocks = n_blocks;
  for (int b = 2; b <= b_max; ++b) {
    out.var_by_b[b] = var_zb(h, b, n_blocks);
    out.skew_by_b[b] = skewness_zb(h, b, n_blocks);
  }
  return out;
}

}  // namespace mstat
