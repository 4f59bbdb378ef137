#pragma once

#include <cstdint>
#include <map>

#include "mstat/common.hpp"
#include "mstat/kernel.hpp"

namespace mstat {

// Monte-Carlo estimates of the h-kernel moments under the null, from the
// reference pool. e_h2 and cov_hh drive the variance of Z_B; t1..t6 are the
// third-moment expectations feeding the skewness correction.
struct HMoments {
  double e_h2 = 0.0;
  double cov_hh = 0.0;
  double t1 = 0.0, t2 = 0.0, t3 = 0.0, t4 = 0.0, t5 = 0.0, t6 = 0.0;
  std::uint64_t n_draws = 0;
  std::uint64_t seed = 0;
};

HMoments estimate_h_moments(const Eigen::Ref<const Matrix>& pool, const KernelSpec& spec,
                            std::uint64_t n_draws = 10000, std::uint64_t seed = 0);

// Var[Z_B] = C(B,2)^{-1} [ e_h2/N + (N-1)/N cov_hh ]; throws if the estimate
// comes out non-positive (caller should increase n_draws)
double var_zb(const HMoments& h, int b, int n_blocks);

double third_moment_zb(const HMoments& h, int b, int n_blocks);

// skewness of the standardized statistic: E[Z_B^3] / Var[Z_B]^{3/2}
double skewness_zb(const HMoments& h, int b, int n_blocks);

// correlation of Z'_u and Z'_v across window sizes
double offline_correlation(int u, int v);

// lag-s correlation of the online statistic; windows s >= B0-1 apart share no
// pairs, so the value is clamped to zero there
double online_correlation(int b0, int s);

// per-B tables the detectors consume
struct NullMoments {
  HMoments h;
  int n_blocks = 1;
  std::map<int, double> var_by_b;
  std::map<int, double> skew_by_b;

  static NullMoments build(const HMoments& h, int n_blocks, int b_max);
};

}  // namespace mstat
