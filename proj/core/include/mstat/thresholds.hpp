#pragma once

#include <map>

namespace mstat {

// Siegmund-type overshoot correction nu(u) ~ (2/u)(Phi(u/2)-1/2) / ((u/2)Phi(u/2)+phi(u/2))
double nu(double u);

// significance level of the offline max statistic at threshold b. Two
// conventions circulate for the scan-correction argument of nu; the wide
// variant carries an extra factor 2 inside the square root.
double offline_sl(double b, int b_max, bool wide_nu_argument = false);

double solve_offline_threshold(double alpha, int b_max, bool wide_nu_argument = false);

// expected run length of the online statistic at threshold b
double online_arl(double b, int b0);

double solve_online_threshold(double arl_target, int b0);

// tilt solving theta + kappa theta^2 / 2 = b; theta = b when kappa = 0
double solve_theta(double b, double kappa);

// skewness-corrected tail formulas: exp(-b^2/2) is replaced per window size by
// exp(psi(theta_B) - theta_B b) with psi(theta) = theta^2/2 + kappa theta^3/6.
// A window whose tilt has no real root falls back to the uncorrected term;
// fallback_count (optional) reports how many did.
double offline_sl_corrected(double b, int b_max, const std::map<int, double>& kappa_by_b,
                            bool wide_nu_argument = false, int* fallback_count = nullptr);

double solve_offline_threshold_corrected(double alpha, int b_max,
                                         const std::map<int, double>& kappa_by_b,
                                         bool wide_nu_argument = false,
                                         int* fallback_count = nullptr);

double online_arl_corrected(double b, int b0, double kappa);

double solve_online_threshold_corrected(double arl_target, int b0, double kappa);

}  // namespace mstat
