#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mstat/common.hpp"
#include "mstat/online.hpp"

namespace mstat {

struct BaselineScan {
  Vector series;  // statistic per candidate split, indexed by k - k_min
  int k_min = 0;
  double max_value = 0.0;
  int argmax_k = -1;
  double threshold = 0.0;
  bool alarm = false;
  std::vector<int> skipped;  // candidates rejected for degenerate covariance
};

// two-sample mean statistic at split k with pooled segment covariance
double hotelling_offline(const Eigen::Ref<const Matrix>& data, int k);

BaselineScan hotelling_offline_scan(const Eigen::Ref<const Matrix>& data, double threshold);

// log generalized likelihood ratio for a mean/covariance change at split k
double glr_offline(const Eigen::Ref<const Matrix>& data, int k);

// k restricted to [d+2, n-d-2] so every segment covariance stays full rank
BaselineScan glr_offline_scan(const Eigen::Ref<const Matrix>& data, double threshold);

// windowed mean chart: T2(t) = B0 (xbar_t - mu)' Sigma^{-1} (xbar_t - mu) with
// mu, Sigma estimated from the reference pool
class OnlineHotelling {
 public:
  OnlineHotelling(const Eigen::Ref<const Matrix>& pool, int b0, double threshold);

  std::optional<StepOutput> step(const Eigen::Ref<const RowVec>& x);

  long t() const { return t_; }
  bool window_full() const { return filled_ == b0_; }

 private:
  int b0_ = 0;
  int d_ = 0;
  double threshold_ = 0.0;
  RowVec mu_;
  Eigen::LDLT<Eigen::MatrixXd> sigma_;
  Matrix win_;
  RowVec win_sum_;
  int filled_ = 0;
  int cursor_ = 0;
  long t_ = 0;
};

// empirical (1-alpha) quantile of a null max statistic
double calibrate_offline_threshold(const std::function<double(Rng&)>& null_max_stat, double alpha,
                                   int trials, std::uint64_t seed);

// record highs of one null run: strictly increasing statistic values and the
// times they were first reached
struct RunEnvelope {
  std::vector<long> times;
  std::vector<double> values;
};

// threshold whose censored mean run length over the recorded envelopes matches
// the target
double calibrate_online_threshold(const std::function<RunEnvelope(Rng&)>& null_run,
                                  double target_arl, int trials, long horizon,
                                  std::uint64_t seed);

}  // namespace mstat
