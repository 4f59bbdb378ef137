#include "mstat/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mstat/rng.hpp"

namespace mstat {

namespace {

void check_spec(const KernelSpec& spec) {
  if (!(spec.bandwidth > 0.0))
    throw std::invalid_argument("kernel: bandwidth must be positive");
}

}  // namespace

double kernel_eval(const Eigen::Ref<const RowVec>& x, const Eigen::Ref<const RowVec>& y,
                   const KernelSpec& spec) {
  check_spec(spec);
  if (x.size() != y.size())
    throw std::invalid_argument("kernel_eval: dimension mismatch");
  const double s2 = spec.bandwidth * spec.bandwidth;
  return std::exp(-(x - y).squaredNorm() / (2.0 * s2));
}

double median_bandwidth(const Eigen::Ref<const Matrix>& pool, int cap, std::uint64_t seed) {
  const int n = static_cast<int>(pool.rows());
  if (n < 2)
    throw std::invalid_argument("median_bandwidth: need at least two pool samples");
  if (cap < 2)
    throw std::invalid_argument("median_bandwidth: cap must be at least 2");

  std::vector<int> idx;
  if (n <= cap) {
    idx.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  } else {
    Rng rng = make_rng(seed);
    idx = sample_without_replacement(n, cap, rng);
  }

  const int m = static_cast<int>(idx.size());
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      dist.push_back((pool.row(idx[static_cast<std::size_t>(i)]) -
                      pool.row(idx[static_cast<std::size_t>(j)]))
                         .norm());

  if (std::all_of(dist.begin(), dist.end(), [](double v) { return v == 0.0; }))
    throw std::invalid_argument("median_bandwidth: all pairwise distances are zero");

  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  double med = dist[mid];
  if (dist.size() % 2 == 0) {
    double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (lower + med);
  }
  return med;
}

double h_eval(const Eigen::Ref<const RowVec>& x, const Eigen::Ref<const RowVec>& xp,
              const Eigen::Ref<const RowVec>& y, const Eigen::Ref<const RowVec>& yp,
              const KernelSpec& spec) {
  if (x.size() != xp.size() || x.size() != y.size() || x.size() != yp.size())
    throw std::invalid_argument("h_eval: dimension mismatch");
  // Group the cross terms so the pair swap (x,y)<->(xp,yp) is exact.
  return kernel_eval(x, xp, spec) + kernel_eval(y, yp, spec) -
         (kernel_eval(x, yp, spec) + kernel_eval(xp, y, spec));
}

double mmd_u_squared(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y,
                     const KernelSpec& spec) {
  const auto b = x.rows();
  if (b != y.rows())
    throw std::invalid_argument("mmd_u_squared: block size mismatch");
  if (b < 2)
    throw std::invalid_argument("mmd_u_squared: block size must be at least 2");
  if (x.cols() != y.cols())
    throw std::invalid_argument("mmd_u_squared: dimension mismatch");
  Accum acc;
  for (Eigen::Index j = 0; j < b; ++j)
    for (Eigen::Index l = j + 1; l < b; ++l)
      acc.add(h_eval(x.row(j), x.row(l), y.row(j), y.row(l), spec));
  // h is symmetric under (j,l) swap, so the ordered-pair average doubles the upper triangle
  return 2.0 * acc.total() / (static_cast<double>(b) * static_cast<double>(b - 1));
}

Matrix gram(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
            const KernelSpec& spec) {
  check_spec(spec);
  if (a.cols() != b.cols())
    throw std::invalid_argument("gram: dimension mismatch");
  const double s2 = spec.bandwidth * spec.bandwidth;
  Matrix k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      k(i, j) = std::exp(-(a.row(i) - b.row(j)).squaredNorm() / (2.0 * s2));
  return k;
}

}  // namespace mstat
