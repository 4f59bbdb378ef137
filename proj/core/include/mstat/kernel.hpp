#pragma once

#include <cstdint>

#include "mstat/common.hpp"

namespace mstat {

// Gaussian RBF kernel k(x,y) = exp(-|x-y|^2 / (2 sigma^2))
struct KernelSpec {
  double bandwidth = 1.0;
};

double kernel_eval(const Eigen::Ref<const RowVec>& x, const Eigen::Ref<const RowVec>& y,
                   const KernelSpec& spec);

// median pairwise Euclidean distance over at most cap subsampled pool points;
// throws if every pairwise distance is zero
double median_bandwidth(const Eigen::Ref<const Matrix>& pool, int cap = 1000,
                        std::uint64_t seed = 0);

// h(x,x',y,y') = k(x,x') + k(y,y') - k(x,y') - k(x',y)
double h_eval(const Eigen::Ref<const RowVec>& x, const Eigen::Ref<const RowVec>& xp,
              const Eigen::Ref<const RowVec>& y, const Eigen::Ref<const RowVec>& yp,
              const KernelSpec& spec);

// unbiased estimator: average of h over all ordered index pairs of paired blocks
double mmd_u_squared(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y,
                     const KernelSpec& spec);

Matrix gram(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
            const KernelSpec& spec);

}  // namespace mstat
