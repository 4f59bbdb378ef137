#include "mstat/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mstat/rng.hpp"

namespace mstat {

namespace {

constexpr double kConditionGuard = 1e12;

// factor a symmetric PSD matrix; returns false when it is numerically singular
bool try_ldlt(const Eigen::MatrixXd& a, Eigen::LDLT<Eigen::MatrixXd>& out) {
  out.compute(a);
  if (out.info() != Eigen::Success) return false;
  const Eigen::VectorXd d = out.vectorD();
  const double dmax = d.maxCoeff();
  const double dmin = d.minCoeff();
  if (!(dmin > 0.0)) return false;
  if (dmax > dmin * kConditionGuard) return false;
  return true;
}

double log_det_from_ldlt(const Eigen::LDLT<Eigen::MatrixXd>& ldlt) {
  return ldlt.vectorD().array().log().sum();
}

struct SplitAccum {
  Eigen::MatrixXd xx_pre;
  Eigen::VectorXd sum_pre;
  Eigen::MatrixXd xx_total;
  Eigen::VectorXd sum_total;
  long n = 0;

  explicit SplitAccum(const Eigen::Ref<const Matrix>& data)
      : xx_pre(Eigen::MatrixXd::Zero(data.cols(), data.cols())),
        sum_pre(Eigen::VectorXd::Zero(data.cols())),
        n(data.rows()) {
    xx_total = data.transpose() * data;
    sum_total = data.colwise().sum().transpose();
  }

  void absorb_row(const Eigen::Ref<const Matrix>& data, long i) {
    const Eigen::VectorXd x = data.row(i).transpose();
    xx_pre.noalias() += x * x.transpose();
    sum_pre += x;
  }

  // centered scatter matrices of the two segments at the current split k
  void scatters(long k, Eigen::MatrixXd& pre, Eigen::MatrixXd& post, Eigen::VectorXd& mu_pre,
                Eigen::VectorXd& mu_post) const {
    mu_pre = sum_pre / static_cast<double>(k);
    mu_post = (sum_total - sum_pre) / static_cast<double>(n - k);
    pre = xx_pre - static_cast<double>(k) * mu_pre * mu_pre.transpose();
    post = (xx_total - xx_pre) - static_cast<double>(n - k) * mu_post * mu_post.transpose();
  }
};

double hotelling_from_scatters(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post,
                               const Eigen::VectorXd& mu_pre, const Eigen::VectorXd& mu_post,
                               long k, long n, bool* ok) {
  Eigen::MatrixXd pooled = (pre + post) / static_cast<double>(n - 2);
  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  if (!try_ldlt(pooled, ldlt)) {
    if (ok != nullptr) *ok = false;
    return 0.0;
  }
  if (ok != nullptr) *ok = true;
  const Eigen::VectorXd diff = mu_pre - mu_post;
  const double quad = diff.dot(ldlt.solve(diff));
  return static_cast<double>(k) * static_cast<double>(n - k) / static_cast<double>(n) * quad;
}

}  // namespace

double hotelling_offline(const Eigen::Ref<const Matrix>& data, int k) {
  const long n = data.rows();
  if (n < 4) throw std::invalid_argument("hotelling_offline: need at least 4 rows");
  if (k < 2 || k > n - 2) throw std::invalid_argument("hotelling_offline: split out of range");
  SplitAccum acc(data);
  for (long i = 0; i < k; ++i) acc.absorb_row(data, i);
  Eigen::MatrixXd pre, post;
  Eigen::VectorXd mu_pre, mu_post;
  acc.scatters(k, pre, post, mu_pre, mu_post);
  bool ok = false;
  const double t2 = hotelling_from_scatters(pre, post, mu_pre, mu_post, k, n, &ok);
  if (!ok) throw std::runtime_error("hotelling_offline: pooled covariance is singular");
  return t2;
}

BaselineScan hotelling_offline_scan(const Eigen::Ref<const Matrix>& data, double threshold) {
  const long n = data.rows();
  if (n < 4) throw std::invalid_argument("hotelling_offline_scan: need at least 4 rows");
  BaselineScan scan;
  scan.k_min = 2;
  scan.threshold = threshold;
  const long k_max = n - 2;
  scan.series = Vector::Zero(k_max - scan.k_min + 1);
  scan.max_value = -std::numeric_limits<double>::infinity();

  SplitAccum acc(data);
  acc.absorb_row(data, 0);
  Eigen::MatrixXd pre, post;
  Eigen::VectorXd mu_pre, mu_post;
  for (long k = 2; k <= k_max; ++k) {
    acc.absorb_row(data, k - 1);
    acc.scatters(k, pre, post, mu_pre, mu_post);
    bool ok = false;
    const double t2 = hotelling_from_scatters(pre, post, mu_pre, mu_post, k, n, &ok);
    if (!ok) {
      scan.skipped.push_back(static_cast<int>(k));
      scan.series[k - scan.k_min] = 0.0;
      continue;
    }
    scan.series[k - scan.k_min] = t2;
    if (t2 > scan.max_value) {
      scan.max_value = t2;
      scan.argmax_k = static_cast<int>(k);
    }
  }
  if (scan.argmax_k < 0) throw std::runtime_error("hotelling_offline_scan: every split degenerate");
  scan.alarm = scan.max_value > threshold;
  return scan;
}

double glr_offline(const Eigen::Ref<const Matrix>& data, int k) {
  const long n = data.rows();
  const long d = data.cols();
  if (k < d + 2 || k > n - d - 2) throw std::invalid_argument("glr_offline: split out of range");

  SplitAccum acc(data);
  for (long i = 0; i < k; ++i) acc.absorb_row(data, i);
  Eigen::MatrixXd pre, post;
  Eigen::VectorXd mu_pre, mu_post;
  acc.scatters(k, pre, post, mu_pre, mu_post);

  const Eigen::VectorXd mu = acc.sum_total / static_cast<double>(n);
  Eigen::MatrixXd full = acc.xx_total - static_cast<double>(n) * mu * mu.transpose();

  Eigen::LDLT<Eigen::MatrixXd> l_full, l_pre, l_post;
  if (!try_ldlt(full / static_cast<double>(n), l_full) ||
      !try_ldlt(pre / static_cast<double>(k), l_pre) ||
      !try_ldlt(post / static_cast<double>(n - k), l_post)) {
    throw std::runtime_error("glr_offline: segment covariance is singular");
  }
  return static_cast<double>(n) * log_det_from_ldlt(l_full) -
         static_cast<double>(k) * log_det_from_ldlt(l_pre) -
         static_cast<double>(n - k) * log_det_from_ldlt(l_post);
}

BaselineScan glr_offline_scan(const Eigen::Ref<const Matrix>& data, double threshold) {
  const long n = data.rows();
  const long d = data.cols();
  BaselineScan scan;
  scan.k_min = static_cast<int>(d + 2);
  scan.threshold = threshold;
  const long k_max = n - d - 2;
  if (k_max < scan.k_min) {
    throw std::invalid_argument("glr_offline_scan: series too short for the dimension");
  }
  scan.series = Vector::Zero(k_max - scan.k_min + 1);
  scan.max_value = -std::numeric_limits<double>::infinity();

  SplitAccum acc(data);
  for (long i = 0; i < scan.k_min - 1; ++i) acc.absorb_row(data, i);

  const Eigen::VectorXd mu = acc.sum_total / static_cast<double>(n);
  Eigen::MatrixXd full = acc.xx_total - static_cast<double>(n) * mu * mu.transpose();
  Eigen::LDLT<Eigen::MatrixXd> l_full;
  if (!try_ldlt(full / static_cast<double>(n), l_full)) {
    throw std::runtime_error("glr_offline_scan: full-sample covariance is singular");
  }
  const double full_term = static_cast<double>(n) * log_det_from_ldlt(l_full);

  Eigen::MatrixXd pre, post;
  Eigen::VectorXd mu_pre, mu_post;
  Eigen::LDLT<Eigen::MatrixXd> l_pre, l_post;
  for (long k = scan.k_min; k <= k_max; ++k) {
    acc.absorb_row(data, k - 1);
    acc.scatters(k, pre, post, mu_pre, mu_post);
    if (!try_ldlt(pre / static_cast<double>(k), l_pre) ||
        !try_ldlt(post / static_cast<double>(n - k), l_post)) {
      scan.skipped.push_back(static_cast<int>(k));
      scan.series[k - scan.k_min] = 0.0;
      continue;
    }
    const double stat = full_term - static_cast<double>(k) * log_det_from_ldlt(l_pre) -
                        static_cast<double>(n - k) * log_det_from_ldlt(l_post);
    scan.series[k - scan.k_min] = stat;
    if (stat > scan.max_value) {
      scan.max_value = stat;
      scan.argmax_k = static_cast<int>(k);
    }
  }
  if (scan.argmax_k < 0) throw std::runtime_error("glr_offline_scan: every split degenerate");
  scan.alarm = scan.max_value > threshold;
  return scan;
}

OnlineHotelling::OnlineHotelling(const Eigen::Ref<const Matrix>& pool, int b0, double threshold)
    : b0_(b0), d_(static_cast<int>(pool.cols())), threshold_(threshold) {
  if (b0 < 1) throw std::invalid_argument("OnlineHotelling: window size must be positive");
  if (pool.rows() < d_ + 2) throw std::invalid_argument("OnlineHotelling: reference pool too small");
  mu_ = pool.colwise().mean();
  Matrix centered = pool.rowwise() - mu_;
  Eigen::MatrixXd sigma =
      (centered.transpose() * centered) / static_cast<double>(pool.rows() - 1);
  if (!try_ldlt(sigma, sigma_)) {
    throw std::runtime_error("OnlineHotelling: reference covariance is singular");
  }
  win_ = Matrix::Zero(b0_, d_);
  win_sum_ = RowVec::Zero(d_);
}

std::optional<StepOutput> OnlineHotelling::step(const Eigen::Ref<const RowVec>& x) {
  if (x.size() != d_) throw std::invalid_argument("OnlineHotelling: dimension mismatch");
  if (filled_ == b0_) win_sum_ -= win_.row(cursor_);
  win_.row(cursor_) = x;
  win_sum_ += x;
  cursor_ = (cursor_ + 1) % b0_;
  if (filled_ < b0_) ++filled_;
  ++t_;
  if (filled_ < b0_) return std::nullopt;
  const Eigen::VectorXd diff = (win_sum_ / static_cast<double>(b0_) - mu_).transpose();
  const double t2 = static_cast<double>(b0_) * diff.dot(sigma_.solve(diff));
  StepOutput out;
  out.t = t_;
  out.m = t2;
  out.alarm = t2 > threshold_;
  return out;
}

double calibrate_offline_threshold(const std::function<double(Rng&)>& null_max_stat, double alpha,
                                   int trials, std::uint64_t seed) {
  if (trials < 2) throw std::invalid_argument("calibrate_offline_threshold: need at least 2 trials");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("calibrate_offline_threshold: alpha must lie in (0,1)");
  }
  std::vector<double> stats(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(t));
    stats[static_cast<std::size_t>(t)] = null_max_stat(rng);
  }
  std::sort(stats.begin(), stats.end());
  const double pos = (1.0 - alpha) * static_cast<double>(trials - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - std::floor(pos);
  if (lo + 1 >= stats.size()) return stats.back();
  return stats[lo] * (1.0 - frac) + stats[lo + 1] * frac;
}

double calibrate_online_threshold(const std::function<RunEnvelope(Rng&)>& null_run,
                                  double target_arl, int trials, long horizon,
                                  std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("calibrate_online_threshold: need trials");
  if (target_arl >= static_cast<double>(horizon)) {
    throw std::invalid_argument("calibrate_online_threshold: horizon must exceed the target");
  }
  std::vector<RunEnvelope> runs;
  runs.reserve(static_cast<std::size_t>(trials));
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(t));
    RunEnvelope env = null_run(rng);
    if (env.times.size() != env.values.size()) {
      throw std::runtime_error("calibrate_online_threshold: malformed envelope");
    }
    if (!env.values.empty()) {
      lo = std::min(lo, env.values.front());
      hi = std::max(hi, env.values.back());
    }
    runs.push_back(std::move(env));
  }
  if (!(lo <= hi)) throw std::runtime_error("calibrate_online_threshold: all runs were empty");

  // mean run length is a nondecreasing step function of the threshold; bisect
  auto mean_rl = [&](double b) {
    double total = 0.0;
    for (const RunEnvelope& env : runs) {
      long rl = horizon;
      auto it = std::upper_bound(env.values.begin(), env.values.end(), b);
      if (it != env.values.end()) {
        rl = env.times[static_cast<std::size_t>(it - env.values.begin())];
      }
      total += static_cast<double>(rl);
    }
    return total / static_cast<double>(runs.size());
  };

  double blo = lo - 1.0;
  double bhi = hi + 1.0;
  if (mean_rl(blo) > target_arl) return blo;
  if (mean_rl(bhi) < target_arl) return bhi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (blo + bhi);
    if (mean_rl(mid) < target_arl) {
      blo = mid;
    } else {
      bhi = mid;
    }
  }
  return 0.5 * (blo + bhi);
}

}  // namespace mstat
