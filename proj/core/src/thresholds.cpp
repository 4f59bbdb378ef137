#include "mstat/thresholds.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace mstat {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kSqrt2Pi = 2.5066282746310002;

double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

// the per-window scan term common to the plain and corrected sums
double window_coef(int b_size, double b, bool wide_arg) {
  const double bb = static_cast<double>(b_size);
  double arg = (2.0 * bb - 1.0) / (bb * (bb - 1.0));
  if (wide_arg) arg *= 2.0;
  return (2.0 * bb - 1.0) / (2.0 * kSqrt2Pi * bb * (bb - 1.0)) * nu(b * std::sqrt(arg));
}

// The tail approximations carry a b^2 e^{-b^2/2} prefactor, so the exceedance
// rate rises to a peak near b = 1.3 before the exponential decay takes over.
// Only the decaying branch is meaningful for threshold selection; locate the
// peak first and bisect to its right.
double peak_argmax(const std::function<double(double)>& f, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (f(m1) < f(m2))
      lo = m1;
    else
      hi = m2;
  }
  return 0.5 * (lo + hi);
}

double bisect(const std::function<double(double)>& f, double target, bool decreasing,
              const char* what) {
  // rate = f for a significance level, 1/f for an average run length
  auto rate = [&](double b) { return decreasing ? f(b) : 1.0 / f(b); };
  double lo = peak_argmax(rate, 0.5, 10.0);
  double hi = 10.0;
  const double rate_target = decreasing ? target : 1.0 / target;
  if (rate(lo) < rate_target || rate(hi) > rate_target)
    throw std::runtime_error(std::string(what) +
                             ": target outside the attainable range on [0.5, 10]");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (rate(mid) > rate_target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double nu(double u) {
  if (!(u > 0.0)) throw std::invalid_argument("nu: argument must be positive");
  // numerator written via erf to avoid cancellation of Phi(u/2) - 1/2 near zero
  const double num = std::erf(u / (2.0 * kSqrt2)) / u;
  const double den = (u / 2.0) * norm_cdf(u / 2.0) + norm_pdf(u / 2.0);
  return num / den;
}

double offline_sl(double b, int b_max, bool wide_nu_argument) {
  if (!(b > 0.0)) throw std::invalid_argument("offline_sl: threshold must be positive");
  if (b_max < 2) throw std::invalid_argument("offline_sl: b_max must be at least 2");
  double s = 0.0;
  for (int w = 2; w <= b_max; ++w) s += window_coef(w, b, wide_nu_argument);
  return b * b * std::exp(-0.5 * b * b) * s;
}

double solve_offline_threshold(double alpha, int b_max, bool wide_nu_argument) {
  if (!(alpha > 0.001 && alpha < 0.5))
    throw std::invalid_argument("solve_offline_threshold: alpha must be in (0.001, 0.5)");
  return bisect([&](double b) { return offline_sl(b, b_max, wide_nu_argument); }, alpha,
                /*decreasing=*/true, "solve_offline_threshold");
}

double online_arl(double b, int b0) {
  if (!(b > 0.0)) throw std::invalid_argument("online_arl: threshold must be positive");
  if (b0 < 2) throw std::invalid_argument("online_arl: B0 must be at least 2");
  const double bb = static_cast<double>(b0);
  const double arg = 2.0 * (2.0 * bb - 1.0) / (bb * (bb - 1.0));
  const double lambda = std::exp(-0.5 * b * b) * b * b * (2.0 * bb - 1.0) /
                        (kSqrt2Pi * bb * (bb - 1.0)) * nu(b * std::sqrt(arg));
  return 1.0 / lambda;
}

double solve_online_threshold(double arl_target, int b0) {
  if (!(arl_target >= 100.0 && arl_target <= 1e8))
    throw std::invalid_argument("solve_online_threshold: target must be in [100, 1e8]");
  return bisect([&](double b) { return online_arl(b, b0); }, arl_target,
                /*decreasing=*/false, "solve_online_threshold");
}

double solve_theta(double b, double kappa) {
  if (!(b > 0.0)) throw std::invalid_argument("solve_theta: threshold must be positive");
  if (std::abs(kappa) < 1e-12) return b;
  const double disc = 1.0 + 2.0 * kappa * b;
  if (disc < 0.0)
    throw std::runtime_error("solve_theta: no real tilt for this skewness");
  return (std::sqrt(disc) - 1.0) / kappa;
}

double offline_sl_corrected(double b, int b_max, const std::map<int, double>& kappa_by_b,
                            bool wide_nu_argument, int* fallback_count) {
  if (!(b > 0.0)) throw std::invalid_argument("offline_sl_corrected: threshold must be positive");
  if (b_max < 2) throw std::invalid_argument("offline_sl_corrected: b_max must be at least 2");
  if (fallback_count) *fallback_count = 0;
  double s = 0.0;
  for (int w = 2; w <= b_max; ++w) {
    auto it = kappa_by_b.find(w);
    if (it == kappa_by_b.end())
      throw std::invalid_argument("offline_sl_corrected: missing skewness entry for B=" +
                                  std::to_string(w));
    const double kap = it->second;
    double tail = std::exp(-0.5 * b * b);
    if (std::abs(kap) >= 1e-12 && 1.0 + 2.0 * kap * b < 0.0) {
      if (fallback_count) ++*fallback_count;
    } else {
      const double th = solve_theta(b, kap);
      const double psi = 0.5 * th * th + kap * th * th * th / 6.0;
      tail = std::exp(psi - th * b);
    }
    s += tail * b * b * window_coef(w, b, wide_nu_argument);
  }
  return s;
}

double solve_offline_threshold_corrected(double alpha, int b_max,
                                         const std::map<int, double>& kappa_by_b,
                                         bool wide_nu_argument, int* fallback_count) {
  if (!(alpha > 0.001 && alpha < 0.5))
    throw std::invalid_argument("solve_offline_threshold_corrected: alpha must be in (0.001, 0.5)");
  const double b = bisect(
      [&](double x) { return offline_sl_corrected(x, b_max, kappa_by_b, wide_nu_argument); },
      alpha, /*decreasing=*/true, "solve_offline_threshold_corrected");
  if (fallback_count)
    offline_sl_corrected(b, b_max, kappa_by_b, wide_nu_argument, fallback_count);
  return b;
}

double online_arl_corrected(double b, int b0, double kappa) {
  if (!(b > 0.0)) throw std::invalid_argument("online_arl_corrected: threshold must be positive");
  if (b0 < 2) throw std::invalid_argument("online_arl_corrected: B0 must be at least 2");
  double tail = std::exp(-0.5 * b * b);
  if (!(std::abs(kappa) >= 1e-12 && 1.0 + 2.0 * kappa * b < 0.0)) {
    const double th = solve_theta(b, kappa);
    const double psi = 0.5 * th * th + kappa * th * th * th / 6.0;
    tail = std::exp(psi - th * b);
  }
  const double bb = static_cast<double>(b0);
  const double arg = 2.0 * (2.0 * bb - 1.0) / (bb * (bb - 1.0));
  const double lambda =
      tail * b * b * (2.0 * bb - 1.0) / (kSqrt2Pi * bb * (bb - 1.0)) * nu(b * std::sqrt(arg));
  return 1.0 / lambda;
}

double solve_online_threshold_corrected(double arl_target, int b0, double kappa) {
  if (!(arl_target >= 100.0 && arl_target <= 1e8))
    throw std::invalid_argument("solve_online_threshold_corrected: target must be in [100, 1e8]");
  return bisect([&](double b) { return online_arl_corrected(b, b0, kappa); }, arl_target,
                /*decreasing=*/false, "solve_online_threshold_corrected");
}

}  // namespace mstat
