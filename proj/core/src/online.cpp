#include "mstat/online.hpp"

#include <cmath>
#include <stdexcept>

namespace mstat {

OnlineDetector::OnlineDetector(const Eigen::Ref<const Matrix>& pool, const OnlineConfig& cfg)
    : cfg_(cfg), d_(static_cast<int>(pool.cols())), rng_(make_rng(cfg.seed)) {
  if (cfg_.b0 < 2) throw std::invalid_argument("OnlineDetector: B0 must be at least 2");
  if (cfg_.n_blocks < 1) throw std::invalid_argument("OnlineDetector: need at least one block");
  if (!(cfg_.var_z > 0.0)) throw std::invalid_argument("OnlineDetector: var_z must be positive");
  if (!(cfg_.kernel.bandwidth > 0.0))
    throw std::invalid_argument("OnlineDetector: bandwidth must be positive");
  const long need = static_cast<long>(cfg_.n_blocks) * cfg_.b0;
  if (pool.rows() < need)
    throw std::invalid_argument("OnlineDetector: pool smaller than N*B0");
  sd_ = std::sqrt(cfg_.var_z);

  pool_.reserve(static_cast<std::size_t>(pool.rows()) + 64);
  for (long r = 0; r < pool.rows(); ++r) pool_.push_back(pool.row(r));

  test_win_.setZero(cfg_.b0, d_);
  kyy_.setZero(cfg_.b0, cfg_.b0);
  for (int i = 0; i < cfg_.n_blocks; ++i) {
    Matrix win(cfg_.b0, d_);
    for (int r = 0; r < cfg_.b0; ++r) win.row(r) = draw_from_pool();
    ref_win_.push_back(std::move(win));
    kxy_.emplace_back(Matrix::Zero(cfg_.b0, cfg_.b0));
  }
  for (int i = 0; i < cfg_.n_blocks; ++i) {
    const Matrix& win = ref_win_[static_cast<std::size_t>(i)];
    Matrix k(cfg_.b0, cfg_.b0);
    for (int r = 0; r < cfg_.b0; ++r) {
      k(r, r) = 1.0;
      for (int c = r + 1; c < cfg_.b0; ++c) k(r, c) = k(c, r) = kval(win.row(r), win.row(c));
    }
    kxx_.push_back(std::move(k));
  }
}

double OnlineDetector::kval(const Eigen::Ref<const RowVec>& a, const Eigen::Ref<const RowVec>& b) {
  ++kernel_evals_;
  return kernel_eval(a, b, cfg_.kernel);
}

RowVec OnlineDetector::draw_from_pool() {
  if (pool_.empty()) throw std::runtime_error("OnlineDetector: reference reservoir exhausted");
  std::uniform_int_distribution<std::size_t> pick(0, pool_.size() - 1);
  const std::size_t j = pick(rng_);
  RowVec out = pool_[j];
  pool_[j] = pool_.back();
  pool_.pop_back();
  return out;
}

void OnlineDetector::refresh_slot(int slot, const Eigen::Ref<const RowVec>& x) {
  // retire the outgoing window points into the reservoir, then draw the
  // replacements; a just-retired point may be drawn right back
  pool_.push_back(test_win_.row(slot));
  for (int i = 0; i < cfg_.n_blocks; ++i)
    pool_.push_back(ref_win_[static_cast<std::size_t>(i)].row(slot));
  for (int i = 0; i < cfg_.n_blocks; ++i)
    ref_win_[static_cast<std::size_t>(i)].row(slot) = draw_from_pool();
  test_win_.row(slot) = x;

  for (int j = 0; j < cfg_.b0; ++j)
    kyy_(slot, j) = kyy_(j, slot) = (j == slot) ? 1.0 : kval(x, test_win_.row(j));
  for (int i = 0; i < cfg_.n_blocks; ++i) {
    const Matrix& win = ref_win_[static_cast<std::size_t>(i)];
    Matrix& kxx = kxx_[static_cast<std::size_t>(i)];
    Matrix& kxy = kxy_[static_cast<std::size_t>(i)];
    for (int j = 0; j < cfg_.b0; ++j)
      kxx(slot, j) = kxx(j, slot) = (j == slot) ? 1.0 : kval(win.row(slot), win.row(j));
    for (int j = 0; j < cfg_.b0; ++j) kxy(slot, j) = kval(win.row(slot), test_win_.row(j));
    for (int r = 0; r < cfg_.b0; ++r)
      if (r != slot) kxy(r, slot) = kval(win.row(r), x);
  }
}

double OnlineDetector::statistic() const {
  const double b0 = static_cast<double>(cfg_.b0);
  Accum z;
  for (int i = 0; i < cfg_.n_blocks; ++i) {
    const Matrix& kxx = kxx_[static_cast<std::size_t>(i)];
    const Matrix& kxy = kxy_[static_cast<std::size_t>(i)];
    Accum s;
    for (int j = 0; j < cfg_.b0; ++j)
      for (int l = 0; l < cfg_.b0; ++l) {
        if (j == l) continue;
        s.add(kxx(j, l) + kyy_(j, l) - kxy(j, l) - kxy(l, j));
      }
    z.add(s.total() / (b0 * (b0 - 1.0)));
  }
  return z.total() / static_cast<double>(cfg_.n_blocks);
}

std::optional<StepOutput> OnlineDetector::step(const Eigen::Ref<const RowVec>& x) {
  if (x.size() != d_) throw std::invalid_argument("OnlineDetector: sample dimension mismatch");
  const std::uint64_t before = kernel_evals_;
  if (filled_ == cfg_.b0) {
    refresh_slot(cursor_, x);
    cursor_ = (cursor_ + 1) % cfg_.b0;
  } else {
    const int slot = filled_;
    test_win_.row(slot) = x;
    ++filled_;
    for (int j = 0; j < filled_; ++j)
      kyy_(slot, j) = kyy_(j, slot) = (j == slot) ? 1.0 : kval(x, test_win_.row(j));
    for (int i = 0; i < cfg_.n_blocks; ++i) {
      const Matrix& win = ref_win_[static_cast<std::size_t>(i)];
      Matrix& kxy = kxy_[static_cast<std::size_t>(i)];
      for (int r = 0; r < cfg_.b0; ++r) kxy(r, slot) = kval(win.row(r), x);
    }
  }
  ++t_;
  last_step_evals_ = kernel_evals_ - before;
  if (filled_ < cfg_.b0) return std::nullopt;

  StepOutput out;
  out.t = t_;
  out.m = statistic() / sd_;
  out.alarm = out.m > cfg_.threshold;
  history_.push_back(out.m);
  return out;
}

double OnlineDetector::batch_statistic() const {
  if (filled_ < cfg_.b0)
    throw std::logic_error("OnlineDetector: batch statistic needs a full test window");
  const double b0 = static_cast<double>(cfg_.b0);
  Accum z;
  for (int i = 0; i < cfg_.n_blocks; ++i) {
    const Matrix& win = ref_win_[static_cast<std::size_t>(i)];
    Accum s;
    for (int j = 0; j < cfg_.b0; ++j)
      for (int l = 0; l < cfg_.b0; ++l) {
        if (j == l) continue;
        s.add(h_eval(win.row(j), win.row(l), test_win_.row(j), test_win_.row(l), cfg_.kernel));
      }
    z.add(s.total() / (b0 * (b0 - 1.0)));
  }
  return z.total() / static_cast<double>(cfg_.n_blocks) / sd_;
}

StoppingResult run_until_stop(OnlineDetector& det, const std::function<RowVec(long)>& stream,
                              long max_steps) {
  StoppingResult res;
  res.threshold = det.config().threshold;
  for (long t = 1; t <= max_steps; ++t) {
    const auto out = det.step(stream(t));
    if (!out) continue;
    res.m_series.push_back(out->m);
    if (out->alarm) {
      res.stopped = true;
      res.stop_time = out->t;
      return res;
    }
  }
  return res;
}

StoppingResult run_until_stop(OnlineDetector& det, const Eigen::Ref<const Matrix>& stream) {
  return run_until_stop(
      det, [&stream](long t) -> RowVec { return stream.row(t - 1); }, stream.rows());
}

}  // namespace mstat
