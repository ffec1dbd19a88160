#include <benchmark/benchmark.h>

#include <random>

#include "sparsegn/network.hpp"
#include "sparsegn/rng.hpp"
#include "sparsegn/threshold_forest.hpp"

namespace {

using namespace sparsegn;

constexpr std::size_t kInputs = 8;
constexpr std::size_t kDim = 8;

Vector unit_inputs(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Vector x(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t c = 0; c < d; ++c) s += (x[i * d + c] = normal(rng)) * x[i * d + c];
    for (std::size_t c = 0; c < d; ++c) x[i * d + c] /= std::sqrt(s);
  }
  return x;
}

void BM_ForestInit(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const WeightMatrix w = init_weights({m, kDim, kInputs, 0.0, 1});
  const Vector x = unit_inputs(kInputs, kDim, 2);
  for (auto _ : state) {
    ThresholdForest forest(w.flat(), x, kDim);
    benchmark::DoNotOptimize(forest.root(0));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ForestInit)->RangeMultiplier(4)->Range(1 << 10, 1 << 18)->Complexity(benchmark::oN);

void BM_ForestQueryAtShift(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const double b = NetworkConfig::auto_shift(m);
  const WeightMatrix w = init_weights({m, kDim, kInputs, b, 1});
  const ThresholdForest forest(w.flat(), unit_inputs(kInputs, kDim, 2), kDim);
  std::vector<std::size_t> out;
  std::size_t i = 0, reported = 0;
  for (auto _ : state) {
    out.clear();
    reported += forest.query(i, b, out).reported;
    i = (i + 1) % kInputs;
  }
  state.counters["fire_per_query"] =
      benchmark::Counter(static_cast<double>(reported), benchmark::Counter::kAvgIterations);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ForestQueryAtShift)->RangeMultiplier(4)->Range(1 << 10, 1 << 18)->Complexity();

void BM_ForestUpdate(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  WeightMatrix w = init_weights({m, kDim, kInputs, 0.0, 1});
  ThresholdForest forest(w.flat(), unit_inputs(kInputs, kDim, 2), kDim);
  Rng rng(3);
  std::uniform_int_distribution<std::size_t> pick(0, m - 1);
  Vector z(kDim, 0.25);
  for (auto _ : state) {
    z[0] = -z[0];
    forest.update(pick(rng), z);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ForestUpdate)->RangeMultiplier(4)->Range(1 << 10, 1 << 18)->Complexity(benchmark::oLogN);

}  // namespace
