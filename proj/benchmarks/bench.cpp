#include <benchmark/benchmark.h>

#include "mstat/generators.hpp"
#include "mstat/kernel.hpp"
#include "mstat/moments.hpp"
#include "mstat/offline.hpp"
#include "mstat/online.hpp"
#include "mstat/rng.hpp"

using namespace mstat;

namespace {

Matrix gauss(int rows, int cols, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return draw_matrix(gaussian_gen(cols), rng, rows);
}

void bm_kernel_eval(benchmark::State& state) {
  KernelSpec spec{1.5};
  Matrix pts = gauss(2, 20, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernel_eval(pts.row(0), pts.row(1), spec));
}
BENCHMARK(bm_kernel_eval);

void bm_mmd(benchmark::State& state) {
  const int b = static_cast<int>(state.range(0));
  KernelSpec spec{1.5};
  Matrix x = gauss(b, 20, 2);
  Matrix y = gauss(b, 20, 3);
  for (auto _ : state) benchmark::DoNotOptimize(mmd_u_squared(x, y, spec));
  state.SetComplexityN(b);
}
BENCHMARK(bm_mmd)->Arg(50)->Arg(100)->Arg(200)->Complexity(benchmark::oNSquared);

void bm_offline_scan(benchmark::State& state) {
  const int b_max = static_cast<int>(state.range(0));
  const int n_blocks = 5;
  KernelSpec spec{2.0};
  std::vector<Matrix> blocks;
  for (int i = 0; i < n_blocks; ++i)
    blocks.push_back(gauss(b_max, 20, 10 + static_cast<std::uint64_t>(i)));
  Matrix test = gauss(b_max, 20, 20);
  NullMoments tables;
  tables.n_blocks = n_blocks;
  for (int b = 2; b <= b_max; ++b) tables.var_by_b[b] = 1.0;
  for (auto _ : state)
    benchmark::DoNotOptimize(scan_offline(blocks, test, tables, spec, 3.0));
  state.SetComplexityN(b_max);
}
BENCHMARK(bm_offline_scan)->Arg(50)->Arg(100)->Arg(200)->Complexity(benchmark::oNSquared);

// steady-state per-step cost; expected linear in B0 for the kernel work
void bm_online_step(benchmark::State& state) {
  const int b0 = static_cast<int>(state.range(0));
  OnlineConfig cfg;
  cfg.b0 = b0;
  cfg.n_blocks = 5;
  cfg.kernel = KernelSpec{2.0};
  cfg.var_z = 1.0;
  cfg.threshold = 1e18;
  cfg.seed = 30;
  OnlineDetector det(gauss(5 * b0 + 200, 20, 31), cfg);
  Rng rng = make_rng(32);
  SampleGen gen = gaussian_gen(20);
  long t = 0;
  for (int i = 0; i < b0; ++i) det.step(gen(rng, ++t));
  for (auto _ : state) benchmark::DoNotOptimize(det.step(gen(rng, ++t)));
  state.SetComplexityN(b0);
}
BENCHMARK(bm_online_step)->Arg(20)->Arg(50)->Arg(100)->Complexity();

void bm_moments(benchmark::State& state) {
  const auto draws = static_cast<std::uint64_t>(state.range(0));
  Matrix pool = gauss(2000, 20, 40);
  KernelSpec spec{2.0};
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_h_moments(pool, spec, draws, 41));
}
BENCHMARK(bm_moments)->Arg(10000)->Arg(50000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
