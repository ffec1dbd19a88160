#include <benchmark/benchmark.h>

#include "sparsegn/data_gen.hpp"
#include "sparsegn/trainer.hpp"

namespace {

using namespace sparsegn;

Dataset bench_data() {
  DataSpec spec;
  spec.n = 8;
  spec.d = 8;
  spec.seed = 5;
  return generate(spec);
}

void run_steps(benchmark::State& state, TrainMode mode) {
  const auto m = static_cast<std::size_t>(state.range(0));
  TrainerConfig cfg = TrainerConfig::defaults(m, 8, 8, 11);
  cfg.mode = mode;
  cfg.record_phase_times = false;
  Trainer trainer(cfg, bench_data());
  (void)trainer.step();  // warm-up
  for (auto _ : state) {
    const StepRecord rec = trainer.step();
    benchmark::DoNotOptimize(rec.loss_after);
  }
  state.SetComplexityN(state.range(0));
}

void BM_SublinearStep(benchmark::State& state) { run_steps(state, TrainMode::sublinear); }
void BM_DenseGaussNewtonStep(benchmark::State& state) { run_steps(state, TrainMode::dense_gn); }

BENCHMARK(BM_SublinearStep)->RangeMultiplier(4)->Range(1 << 12, 1 << 18)->Unit(benchmark::kMillisecond)->Complexity();
BENCHMARK(BM_DenseGaussNewtonStep)->RangeMultiplier(4)->Range(1 << 12, 1 << 18)->Unit(benchmark::kMillisecond)->Complexity(benchmark::oN);

}  // namespace
BENCHMARK_MAIN();
