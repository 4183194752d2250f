#include <benchmark/benchmark.h>

#include "slipsim/model.hpp"
#include "slipsim/stats.hpp"

using namespace slipsim;

static void BM_RunSimulation(benchmark::State& state) {
  ModelConfig cfg;
  cfg.n_trades = state.range(0);
  cfg.warmup_trades = 0;
  cfg.seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_simulation(cfg));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RunSimulation)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_ResampleStep(benchmark::State& state) {
  ModelConfig cfg;
  cfg.n_agents = state.range(0);
  RngStream rng(1);
  Population pop = init_population(cfg, rng);
  for (auto _ : state) {
    resample_step(pop, cfg, rng);
    benchmark::DoNotOptimize(pop.book);
  }
}
BENCHMARK(BM_ResampleStep)->Arg(10)->Arg(100);

static void BM_MomentAccumulator(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> dist(0.0, 1.0);
  MomentAccumulator acc;
  for (auto _ : state) {
    acc.add(dist(rng));
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_MomentAccumulator);

BENCHMARK_MAIN();
