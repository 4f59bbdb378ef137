#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mstat/common.hpp"
#include "mstat/kernel.hpp"
#include "mstat/rng.hpp"

namespace mstat {

struct OnlineConfig {
  int b0 = 20;
  int n_blocks = 5;
  KernelSpec kernel;
  double var_z = 0.0;      // Var[Z_B0] used for standardization (time-invariant)
  double threshold = 0.0;  // b
  std::uint64_t seed = 0;
};

struct StepOutput {
  long t = 0;
  double m = 0.0;
  bool alarm = false;
};

// Sliding-window detector. The test window holds the latest B0 stream points;
// N reference windows refresh one point per step from a reservoir of pool
// samples (retired window points re-enter the reservoir before the fresh
// draws). Gram caches are updated one row/column at a time, so each step costs
// O(N B0) kernel evaluations.
class OnlineDetector {
 public:
  OnlineDetector(const Eigen::Ref<const Matrix>& pool, const OnlineConfig& cfg);

  // returns the statistic once the test window is full, nothing during fill
  std::optional<StepOutput> step(const Eigen::Ref<const RowVec>& x);

  long t() const { return t_; }
  int dim() const { return d_; }
  bool window_full() const { return filled_ == cfg_.b0; }
  const OnlineConfig& config() const { return cfg_; }
  const std::vector<double>& history() const { return history_; }
  std::uint64_t kernel_evals() const { return kernel_evals_; }
  std::uint64_t last_step_kernel_evals() const { return last_step_evals_; }
  int pool_size() const { return static_cast<int>(pool_.size()); }

  // from-scratch recomputation of the current statistic (oracle for the caches)
  double batch_statistic() const;

  // cache introspection
  const Matrix& gram_ref_ref(int i) const { return kxx_[static_cast<std::size_t>(i)]; }
  const Matrix& gram_ref_test(int i) const { return kxy_[static_cast<std::size_t>(i)]; }
  const Matrix& gram_test_test() const { return kyy_; }
  RowVec test_window_row(int slot) const { return test_win_.row(slot); }
  RowVec ref_window_row(int i, int slot) const {
    return ref_win_[static_cast<std::size_t>(i)].row(slot);
  }

 private:
  double kval(const Eigen::Ref<const RowVec>& a, const Eigen::Ref<const RowVec>& b);
  RowVec draw_from_pool();
  void refresh_slot(int slot, const Eigen::Ref<const RowVec>& x);
  double statistic() const;

  OnlineConfig cfg_;
  int d_ = 0;
  double sd_ = 0.0;
  Rng rng_;
  std::vector<RowVec> pool_;
  Matrix test_win_;
  std::vector<Matrix> ref_win_;
  Matrix kyy_;
  std::vector<Matrix> kxx_, kxy_;  // kxy_ rows index the reference window
  int filled_ = 0;
  int cursor_ = 0;  // oldest slot, shared by the test and reference rings
  long t_ = 0;
  std::vector<double> history_;
  std::uint64_t kernel_evals_ = 0;
  std::uint64_t last_step_evals_ = 0;
};

struct StoppingResult {
  bool stopped = false;
  long stop_time = -1;
  std::vector<double> m_series;
  double threshold = 0.0;
};

// first-crossing run over a generated stream; the callback receives t = 1, 2, ...
StoppingResult run_until_stop(OnlineDetector& det, const std::function<RowVec(long)>& stream,
                              long max_steps);

StoppingResult run_until_stop(OnlineDetector& det, const Eigen::Ref<const Matrix>& stream);

}  // namespace mstat
