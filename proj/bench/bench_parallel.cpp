// OpenMP kernels against the serial reference on the two heaviest batch
// workloads: matrix paths and drift-field samples.

#include <cmath>
#include <numbers>

#include <benchmark/benchmark.h>

#include "sl2flow/field.hpp"
#include "sl2flow/parallel.hpp"
#include "sl2flow/rng.hpp"
#include "sl2flow/sl2.hpp"

namespace {

using namespace sl2flow;

double path_R(std::size_t i) {
  return frobenius_R(two_point_F(0.0, 1.0, 1e-3, CovarianceSpec::canonical(), derive_seed(1, i)));
}

double field_B(std::size_t i) {
  const auto f = sample_field(0.5, std::exp(1.0), 64 * std::numbers::pi, 128, derive_seed(2, i));
  return band_gradient(f, std::exp(-1.0), 1.0).a1;
}

void BM_MatrixPathsSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(map_serial(256, path_R));
}

void BM_MatrixPathsParallel(benchmark::State& state) {
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(map_parallel(256, workers, path_R));
}

void BM_FieldSamplesSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(map_serial(32, field_B));
}

void BM_FieldSamplesParallel(benchmark::State& state) {
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(map_parallel(32, workers, field_B));
}

}  // namespace

BENCHMARK(BM_MatrixPathsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MatrixPathsParallel)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FieldSamplesSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FieldSamplesParallel)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
