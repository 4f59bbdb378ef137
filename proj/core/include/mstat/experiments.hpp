#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mstat/common.hpp"
#include "mstat/generators.hpp"
#include "mstat/kernel.hpp"
#include "mstat/moments.hpp"
#include "mstat/rng.hpp"

namespace mstat {

// Scenario catalogs for the study drivers. Offline cases run on a 200-point
// sequence with the change at row tau; online cases describe the post-change
// sampler of an immediately-changed stream.
int offline_case_count();
int online_case_count();
int offline_case_dim(int case_id);
int online_case_dim(int case_id);

// n rows, rows [tau, n) post-change; slope supports are drawn from rng
Matrix make_offline_case_sequence(int case_id, long n, long tau, Rng& rng);

SampleGen online_case_post_gen(int case_id, Rng& rng);

// gaussian reference pool -> median bandwidth -> h-moment tables
struct NullModel {
  KernelSpec kernel;
  NullMoments moments;
};

NullModel make_null_model(int dim, int n_blocks, int b_max, std::uint64_t seed,
                          long pool_size = 2000, std::uint64_t n_draws = 150000);

// independent draws of the unstandardized statistic under the null
Vector simulate_z_null(int b, int n_blocks, int dim, const KernelSpec& spec, int trials,
                       std::uint64_t seed);

struct SlResult {
  double threshold = 0.0;      // analytic
  double sim_threshold = 0.0;  // empirical (1-alpha) quantile of the scan max
  double exceed_rate = 0.0;    // null exceedance at the analytic threshold
  int trials = 0;
};

SlResult run_sl_experiment(double alpha, int b_max, int n_blocks, int dim, int trials,
                           std::uint64_t seed);

struct ArlRow {
  std::string dist;
  int dim = 0;
  double threshold = 0.0;
  double mean_run_length = 0.0;
};

// censored mean run length of null streams at the analytic threshold for the
// target average run length; dist names: gauss, expo, er, laplace
std::vector<ArlRow> run_arl_experiment(const std::vector<std::string>& dists, double target_arl,
                                       int b0, int n_blocks, int trials, long cap,
                                       std::uint64_t seed);

struct PowerResult {
  double m_threshold = 0.0;
  std::map<int, double> m_power;
  std::map<int, double> t2_power;
  std::map<int, double> glr_power;
  std::map<int, double> t2_threshold;   // keyed by dimension
  std::map<int, double> glr_threshold;  // keyed by dimension
};

// detection rates over the offline catalog; the parametric baselines run on
// the same test sequences with thresholds calibrated to the same level
PowerResult run_power_experiment(double alpha, long n, long tau, int n_blocks, int trials,
                                 int calib_trials, std::uint64_t seed);

struct EddResult {
  double threshold = 0.0;
  std::map<int, double> edd;
  std::map<int, double> se;
  int trials = 0;
  long cap = 0;
};

// mean stopping time over the online catalog, change at time zero
EddResult run_edd_experiment(const std::vector<int>& cases, double target_arl, int b0,
                             int n_blocks, int trials, long cap, std::uint64_t seed);

struct SweepRow {
  double shift = 0.0;
  std::vector<double> edd;  // one entry per grid value
  int best_b0 = 0;
};

struct SweepResult {
  std::vector<int> b0_grid;
  std::vector<SweepRow> rows;
};

// delay-vs-window-size tradeoff across mean-shift magnitudes
SweepResult optimal_block_sweep(const std::vector<int>& grid, const std::vector<double>& shifts,
                                double target_arl, int dim, int n_blocks, int trials, long cap,
                                std::uint64_t seed);

}  // namespace mstat
