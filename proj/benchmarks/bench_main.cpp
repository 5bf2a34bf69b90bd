#include <benchmark/benchmark.h>

#include "flock/coeffs.hpp"
#include "flock/fields.hpp"
#include "flock/oracle.hpp"

using namespace flock;

static void BM_SolveGci(benchmark::State& state) {
  const auto kernel = parse_kernel_spec("evenpoly:1,0.5", 0.5);
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_gci(kernel, n));
}
BENCHMARK(BM_SolveGci)->Arg(32)->Arg(64)->Arg(128);

static void BM_ComputeCoefficients(benchmark::State& state) {
  const auto kernel = parse_kernel_spec("evenpoly:1,0.5", 0.5);
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(compute_coefficients(kernel, 0.1, n));
}
BENCHMARK(BM_ComputeCoefficients)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_DecomposeGradients(benchmark::State& state) {
  const Grid grid = Grid::periodic_cube(static_cast<int>(state.range(0)));
  const FieldState s = sample(random_field(7), grid);
  for (auto _ : state) benchmark::DoNotOptimize(decompose_gradients(s, 2));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(grid.size()));
}
BENCHMARK(BM_DecomposeGradients)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_FdSolve(benchmark::State& state) {
  const auto kernel = CollisionKernel::constant(1.0, 0.5);
  const int m = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(oracle::fd_solve(kernel, 2, [](double) { return 0.0; }, [](double mu) { return mu; }, m));
}
BENCHMARK(BM_FdSolve)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
