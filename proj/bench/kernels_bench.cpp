// Serial reference vs OpenMP kernels on shapes the trainer actually uses.
// Run with OMP_NUM_THREADS to compare thread counts.

#include <benchmark/benchmark.h>

#include <random>

#include "ddcd/kernels.hpp"
#include "ddcd/mlp.hpp"

namespace {

ddcd::Matrix filled(std::size_t r, std::size_t c, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ddcd::Matrix m(r, c);
  for (double& v : m.values()) v = u(rng);
  return m;
}

// Batch times W: B x d by d x d.
void BM_MatmulParallel(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto X = filled(256, d, 1);
  const auto W = filled(d, d, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ddcd::kernels::matmul(X, W));
}

void BM_MatmulSerial(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto X = filled(256, d, 1);
  const auto W = filled(d, d, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ddcd::kernels::serial::matmul(X, W));
}

// Square products as in the k-hop power chain.
void BM_SquareParallel(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto A = filled(d, d, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ddcd::kernels::matmul(A, A));
}

void BM_SquareSerial(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto A = filled(d, d, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ddcd::kernels::serial::matmul(A, A));
}

template <bool Parallel>
void BM_MlpBackward(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  ddcd::ScalarMLP mlp({1, 16, 16, 1},
                      {ddcd::Activation::kTanh, ddcd::Activation::kTanh, ddcd::Activation::kIdentity}, 4);
  const auto U = filled(256, d, 5);
  const auto up = filled(256, d, 6);
  ddcd::MLPCache cache;
  ddcd::mlp_forward(mlp, U, &cache);
  for (auto _ : state) {
    if constexpr (Parallel)
      benchmark::DoNotOptimize(ddcd::mlp_backward(mlp, up, cache));
    else
      benchmark::DoNotOptimize(ddcd::serial::mlp_backward(mlp, up, cache));
  }
}

}  // namespace

BENCHMARK(BM_MatmulParallel)->Arg(20)->Arg(100)->Arg(200);
BENCHMARK(BM_MatmulSerial)->Arg(20)->Arg(100)->Arg(200);
BENCHMARK(BM_SquareParallel)->Arg(100)->Arg(200)->Arg(400);
BENCHMARK(BM_SquareSerial)->Arg(100)->Arg(200)->Arg(400);
BENCHMARK_TEMPLATE(BM_MlpBackward, true)->Arg(10)->Arg(50);
BENCHMARK_TEMPLATE(BM_MlpBackward, false)->Arg(10)->Arg(50);

BENCHMARK_MAIN();
