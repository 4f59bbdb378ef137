#include "mstat/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "mstat/baselines.hpp"
#include "mstat/offline.hpp"
#include "mstat/online.hpp"
#include "mstat/thresholds.hpp"

namespace mstat {

namespace {

constexpr int kOfflineCases = 6;
constexpr int kOnlineCases = 8;

void check_case(int case_id, int count, const char* what) {
  if (case_id < 1 || case_id > count) {
    throw std::invalid_argument(std::string(what) + ": unknown case id");
  }
}

}  // namespace

int offline_case_count() { return kOfflineCases; }
int online_case_count() { return kOnlineCases; }

int offline_case_dim(int case_id) {
  check_case(case_id, kOfflineCases, "offline_case_dim");
  return case_id == 6 ? 1 : 20;
}

int online_case_dim(int case_id) {
  check_case(case_id, kOnlineCases, "online_case_dim");
  return 20;
}

Matrix make_offline_case_sequence(int case_id, long n, long tau, Rng& rng) {
  check_case(case_id, kOfflineCases, "make_offline_case_sequence");
  if (tau < 1 || tau >= n) {
    throw std::invalid_argument("make_offline_case_sequence: change point out of range");
  }
  const int d = offline_case_dim(case_id);
  Matrix x = draw_matrix(gaussian_gen(d), rng, n);
  const long m = n - tau;
  switch (case_id) {
    case 1:
      x.bottomRows(m).array() += 0.1;
      break;
    case 2:
      x.bottomRows(m).array() += 0.2;
      break;
    case 3:
      x.bottomRows(m).col(0) *= 2.0;
      break;
    case 4:
      x.topRows(tau).array() += 1.0;
      x.bottomRows(m).col(0) *= 2.0;
      x.bottomRows(m).array() += 0.2;
      break;
    case 5: {
      const std::vector<int> support = sample_without_replacement(d, 2, rng);
      for (long i = tau; i < n; ++i) {
        const double drift = 0.02 * static_cast<double>(i - tau + 1);
        for (int j : support) x(i, j) += drift;
      }
      break;
    }
    case 6: {
      SampleGen lap = laplace_gen(d, 0.0, M_SQRT1_2);
      for (long i = tau; i < n; ++i) x.row(i) = lap(rng, i - tau + 1);
      break;
    }
    default:
      break;
  }
  return x;
}

SampleGen online_case_post_gen(int case_id, Rng& rng) {
  check_case(case_id, kOnlineCases, "online_case_post_gen");
  const int d = online_case_dim(case_id);
  switch (case_id) {
    case 1:
      return gaussian_gen(d, 0.2, 1.0);
    case 2:
      return gaussian_gen(d, 0.3, 1.0);
    case 3: {
      Vector stdev = Vector::Ones(d);
      stdev.head(5).array() = 2.0;
      return gaussian_gen(Vector::Zero(d), stdev);
    }
    case 4:
      return gaussian_gen(d, 0.0, 2.0);
    case 5:
      return slope_gen(d, 0.01, sample_without_replacement(d, 2, rng));
    case 6:
      return slope_gen(d, 0.02, sample_without_replacement(d, 2, rng));
    case 7:
      return mixture_gen(d, 0.3, 1.0, std::sqrt(0.1));
    default:
      return laplace_gen(d, 0.0, std::sqrt(2.0));
  }
}

NullModel make_null_model(int dim, int n_blocks, int b_max, std::uint64_t seed, long pool_size,
                          std::uint64_t n_draws) {
  Rng pool_rng = make_rng(seed, 1);
  Matrix pool = draw_matrix(gaussian_gen(dim), pool_rng, pool_size);
  KernelSpec spec{median_bandwidth(pool, 1000, derive_seed(seed, 2))};
  HMoments h = estimate_h_moments(pool, spec, n_draws, derive_seed(seed, 3));
  return NullModel{spec, NullMoments::build(h, n_blocks, b_max)};
}

Vector simulate_z_null(int b, int n_blocks, int dim, const KernelSpec& spec, int trials,
                       std::uint64_t seed) {
  if (b < 2) throw std::invalid_argument("simulate_z_null: window size must be at least 2");
  Vector out(trials);
  SampleGen gen = gaussian_gen(dim);
  for (int t = 0; t < trials; ++t) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(t));
    Matrix y = draw_matrix(gen, rng, b);
    Matrix kyy = gram(y, y, spec);
    Accum z;
    for (int block = 0; block < n_blocks; ++block) {
      Matrix x = draw_matrix(gen, rng, b);
      Matrix kxx = gram(x, x, spec);
      Matrix kxy = gram(x, y, spec);
      Accum pair_sum;
      for (int j = 0; j < b; ++j) {
        for (int l = 0; l < j; ++l) {
          pair_sum.add(kxx(j, l) + kyy(j, l) - kxy(j, l) - kxy(l, j));
        }
      }
      z.add(2.0 * pair_sum.total() / (static_cast<double>(b) * (b - 1)));
    }
    out[t] = z.total() / n_blocks;
  }
  return out;
}

SlResult run_sl_experiment(double alpha, int b_max, int n_blocks, int dim, int trials,
                           std::uint64_t seed) {
  NullModel model = make_null_model(dim, n_blocks, b_max, derive_seed(seed, 1));
  SlResult res;
  res.threshold = solve_offline_threshold(alpha, b_max);
  res.trials = trials;
  SampleGen gen = gaussian_gen(dim);
  int hits = 0;
  std::vector<double> maxima(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    Rng rng = make_rng(seed, 0x100000000ULL + static_cast<std::uint64_t>(t));
    Matrix ref = draw_matrix(gen, rng, static_cast<long>(n_blocks) * b_max);
    Matrix test = draw_matrix(gen, rng, b_max);
    OfflineBlocks blocks = build_offline_blocks(ref, test, n_blocks, b_max, 0, true);
    OfflineScan scan =
        scan_offline(blocks.ref_blocks, blocks.test_block, model.moments, model.kernel,
                     res.threshold);
    if (scan.alarm) ++hits;
    maxima[static_cast<std::size_t>(t)] = scan.m;
  }
  res.exceed_rate = static_cast<double>(hits) / trials;
  std::sort(maxima.begin(), maxima.end());
  const double pos = (1.0 - alpha) * static_cast<double>(trials - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - std::floor(pos);
  res.sim_threshold = lo + 1 < maxima.size()
                          ? maxima[lo] * (1.0 - frac) + maxima[lo + 1] * frac
                          : maxima.back();
  return res;
}

namespace {

struct DistSpec {
  std::string name;
  int dim;
  SampleGen gen;
};

DistSpec make_null_dist(const std::string& name) {
  if (name == "gauss") return {name, 20, gaussian_gen(20)};
  if (name == "expo") return {name, 1, exponential_gen(1, 1.0)};
  if (name == "er") return {name, 45, erdos_renyi_gen(10, 0.2)};
  if (name == "laplace") return {name, 1, laplace_gen(1, 0.0, M_SQRT1_2)};
  throw std::invalid_argument("run_arl_experiment: unknown distribution " + name);
}

}  // namespace

std::vector<ArlRow> run_arl_experiment(const std::vector<std::string>& dists, double target_arl,
                                       int b0, int n_blocks, int trials, long cap,
                                       std::uint64_t seed) {
  std::vector<ArlRow> rows;
  for (std::size_t k = 0; k < dists.size(); ++k) {
    const DistSpec ds = make_null_dist(dists[k]);
    const std::uint64_t dist_seed = derive_seed(seed, 0xA00 + k);
    Rng pool_rng = make_rng(dist_seed, 1);
    Matrix pool = draw_matrix(ds.gen, pool_rng, 2000);
    KernelSpec spec{median_bandwidth(pool, 1000, derive_seed(dist_seed, 2))};
    HMoments h = estimate_h_moments(pool, spec, 150000, derive_seed(dist_seed, 3));
    const double varz = var_zb(h, b0, n_blocks);

    ArlRow row;
    row.dist = ds.name;
    row.dim = ds.dim;
    row.threshold = solve_online_threshold(target_arl, b0);
    Accum total;
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t trial_seed =
          derive_seed(dist_seed, 0x100000000ULL + static_cast<std::uint64_t>(t));
      Rng rng = make_rng(trial_seed, 1);
      Matrix det_pool = draw_matrix(ds.gen, rng, 1000);
      OnlineConfig cfg;
      cfg.b0 = b0;
      cfg.n_blocks = n_blocks;
      cfg.kernel = spec;
      cfg.var_z = varz;
      cfg.threshold = row.threshold;
      cfg.seed = derive_seed(trial_seed, 2);
      OnlineDetector det(det_pool, cfg);
      StoppingResult run = run_until_stop(
          det, [&](long t_step) { return ds.gen(rng, t_step); }, cap);
      total.add(static_cast<double>(run.stopped ? run.stop_time : cap));
    }
    row.mean_run_length = total.total() / trials;
    rows.push_back(std::move(row));
  }
  return rows;
}

PowerResult run_power_experiment(double alpha, long n, long tau, int n_blocks, int trials,
                                 int calib_trials, std::uint64_t seed) {
  PowerResult res;
  const int b_max = static_cast<int>(n);
  res.m_threshold = solve_offline_threshold(alpha, b_max);

  std::map<int, NullModel> models;
  models.emplace(20, make_null_model(20, n_blocks, b_max, derive_seed(seed, 1)));
  models.emplace(1, make_null_model(1, n_blocks, b_max, derive_seed(seed, 2)));

  for (int dim : {20, 1}) {
    auto null_t2 = [dim, n](Rng& rng) {
      Matrix x = draw_matrix(gaussian_gen(dim), rng, n);
      return hotelling_offline_scan(x, std::numeric_limits<double>::infinity()).max_value;
    };
    auto null_glr = [dim, n](Rng& rng) {
      Matrix x = draw_matrix(gaussian_gen(dim), rng, n);
      return glr_offline_scan(x, std::numeric_limits<double>::infinity()).max_value;
    };
    res.t2_threshold[dim] = calibrate_offline_threshold(null_t2, alpha, calib_trials,
                                                        derive_seed(seed, 0x20 + dim));
    res.glr_threshold[dim] = calibrate_offline_threshold(null_glr, alpha, calib_trials,
                                                         derive_seed(seed, 0x40 + dim));
  }

  for (int case_id = 1; case_id <= kOfflineCases; ++case_id) {
    const int d = offline_case_dim(case_id);
    const NullModel& model = models.at(d);
    SampleGen null_gen = gaussian_gen(d);
    int m_hits = 0, t2_hits = 0, glr_hits = 0;
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t trial_seed =
          derive_seed(seed, (static_cast<std::uint64_t>(case_id) << 32) | static_cast<std::uint64_t>(t));
      Rng rng = make_rng(trial_seed, 1);
      Matrix ref = draw_matrix(null_gen, rng, static_cast<long>(n_blocks) * n);
      Matrix test = make_offline_case_sequence(case_id, n, tau, rng);
      OfflineBlocks blocks = build_offline_blocks(ref, test, n_blocks, b_max, 0, true);
      OfflineScan scan = scan_offline(blocks.ref_blocks, blocks.test_block, model.moments,
                                      model.kernel, res.m_threshold);
      if (scan.alarm) ++m_hits;
      if (hotelling_offline_scan(test, res.t2_threshold.at(d)).alarm) ++t2_hits;
      if (glr_offline_scan(test, res.glr_threshold.at(d)).alarm) ++glr_hits;
    }
    res.m_power[case_id] = static_cast<double>(m_hits) / trials;
    res.t2_power[case_id] = static_cast<double>(t2_hits) / trials;
    res.glr_power[case_id] = static_cast<double>(glr_hits) / trials;
  }
  return res;
}

EddResult run_edd_experiment(const std::vector<int>& cases, double target_arl, int b0,
                             int n_blocks, int trials, long cap, std::uint64_t seed) {
  EddResult res;
  res.threshold = solve_online_threshold(target_arl, b0);
  res.trials = trials;
  res.cap = cap;
  NullModel model = make_null_model(20, n_blocks, b0, derive_seed(seed, 1));
  const double varz = model.moments.var_by_b.at(b0);
  for (int case_id : cases) {
    check_case(case_id, kOnlineCases, "run_edd_experiment");
    Accum sum, sumsq;
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t trial_seed =
          derive_seed(seed, (static_cast<std::uint64_t>(case_id) << 32) | static_cast<std::uint64_t>(t));
      Rng rng = make_rng(trial_seed, 1);
      Matrix pool = draw_matrix(gaussian_gen(online_case_dim(case_id)), rng, 1000);
      SampleGen post = online_case_post_gen(case_id, rng);
      OnlineConfig cfg;
      cfg.b0 = b0;
      cfg.n_blocks = n_blocks;
      cfg.kernel = model.kernel;
      cfg.var_z = varz;
      cfg.threshold = res.threshold;
      cfg.seed = derive_seed(trial_seed, 2);
      OnlineDetector det(pool, cfg);
      StoppingResult run = run_until_stop(
          det, [&](long t_step) { return post(rng, t_step); }, cap);
      const double stop = static_cast<double>(run.stopped ? run.stop_time : cap);
      sum.add(stop);
      sumsq.add(stop * stop);
    }
    const double mean = sum.total() / trials;
    const double var = std::max(0.0, sumsq.total() / trials - mean * mean);
    res.edd[case_id] = mean;
    res.se[case_id] = std::sqrt(var / trials);
  }
  return res;
}

SweepResult optimal_block_sweep(const std::vector<int>& grid, const std::vector<double>& shifts,
                                double target_arl, int dim, int n_blocks, int trials, long cap,
                                std::uint64_t seed) {
  if (grid.empty() || shifts.empty()) {
    throw std::invalid_argument("optimal_block_sweep: empty grid");
  }
  int max_b0 = 0;
  for (int b0 : grid) max_b0 = std::max(max_b0, b0);
  NullModel model = make_null_model(dim, n_blocks, max_b0, derive_seed(seed, 1));

  SweepResult res;
  res.b0_grid = grid;
  for (std::size_t s = 0; s < shifts.size(); ++s) {
    SampleGen post = gaussian_gen(dim, shifts[s], 1.0);
    SweepRow row;
    row.shift = shifts[s];
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const int b0 = grid[g];
      const double threshold = solve_online_threshold(target_arl, b0);
      const double varz = model.moments.var_by_b.at(b0);
      Accum sum;
      for (int t = 0; t < trials; ++t) {
        const std::uint64_t trial_seed = derive_seed(
            seed, ((static_cast<std::uint64_t>(s + 1) * 64 + g + 1) << 32) |
                      static_cast<std::uint64_t>(t));
        Rng rng = make_rng(trial_seed, 1);
        Matrix pool = draw_matrix(gaussian_gen(dim), rng, std::max(1000L, 20L * b0));
        OnlineConfig cfg;
        cfg.b0 = b0;
        cfg.n_blocks = n_blocks;
        cfg.kernel = model.kernel;
        cfg.var_z = varz;
        cfg.threshold = threshold;
        cfg.seed = derive_seed(trial_seed, 2);
        OnlineDetector det(pool, cfg);
        StoppingResult run = run_until_stop(
            det, [&](long t_step) { return post(rng, t_step); }, cap);
        sum.add(static_cast<double>(run.stopped ? run.stop_time : cap));
      }
      const double edd = sum.total() / trials;
      row.edd.push_back(edd);
      if (edd < best) {
        best = edd;
        row.best_b0 = b0;
      }
    }
    res.rows.push_back(std::move(row));
  }
  return res;
}

}  // namespace mstat
