// Serial reference vs OpenMP path for each parallel kernel. Both paths give
// bit-identical results; only the wall time differs.

#include <benchmark/benchmark.h>

#include <random>

#include "wgl/chaos.hpp"
#include "wgl/distance.hpp"
#include "wgl/experiments.hpp"
#include "wgl/jacobi.hpp"
#include "wgl/linalg.hpp"
#include "wgl/stein.hpp"

using namespace wgl;

namespace {

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

std::vector<double> random_symmetric(std::size_t n) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd;
  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) a[i * n + j] = a[j * n + i] = nd(gen);
  }
  return a;
}

void BM_sample(benchmark::State& state) {
  const SpectralForm f({1.1, 0.9, -0.4, 0.3, 0.2});
  for (auto _ : state) benchmark::DoNotOptimize(sample(f, 1 << 20, 7, mode(state)));
}

void BM_jacobi(benchmark::State& state) {
  const std::size_t n = 200;
  const auto a = random_symmetric(n);
  for (auto _ : state) benchmark::DoNotOptimize(jacobi_eigenvalues(a, n, mode(state)));
}

void BM_lu(benchmark::State& state) {
  const std::size_t n = 800;
  const auto a = random_symmetric(n);
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m(i, j) = a[i * n + j] + (i == j ? 40.0 : 0.0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(LuFactorization(m, mode(state)));
}

void BM_stein_matrix(benchmark::State& state) {
  const SteinOperator op(GridSpec::centered_gamma_default(2.0, 1024), GammaTarget(2.0));
  for (auto _ : state) benchmark::DoNotOptimize(op.assemble_matrix(mode(state)));
}

void BM_density(benchmark::State& state) {
  const SpectralForm f({1.0, -0.7, 0.5, 0.3});
  const GridSpec grid(-20.0, 30.0, 4097);
  for (auto _ : state) benchmark::DoNotOptimize(density_cf_inversion(f, grid, mode(state)));
}

void BM_d2(benchmark::State& state) {
  const auto fam = build_test_family(GridSpec::centered_gamma_default(2.0), 32);
  const auto f = gen_naive(20);
  const GammaTarget g(2.0);
  for (auto _ : state) benchmark::DoNotOptimize(d2_lower_estimate(f, g, fam, 200000, 3, DistanceMethod::mc, mode(state)));
}

}  // namespace

// Argument 0 = serial reference, 1 = parallel.
BENCHMARK(BM_sample)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_jacobi)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_lu)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_stein_matrix)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_density)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_d2)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
