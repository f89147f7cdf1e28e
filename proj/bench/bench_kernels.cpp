// Serial reference loops against the OpenMP kernels. The second benchmark
// argument selects the mode: 0 serial, 1 parallel.

#include <benchmark/benchmark.h>

#include "semsheaf/analysis.hpp"
#include "semsheaf/dictionary_learning.hpp"
#include "semsheaf/sheaf_learning.hpp"
#include "semsheaf/synthetic_data.hpp"

using namespace semsheaf;

namespace {

Execution mode(const benchmark::State& state) { return state.range(1) ? Execution::Parallel : Execution::Serial; }

SyntheticNetwork network(int agents, Index dim, Index samples) {
  SyntheticSpec spec;
  spec.num_agents = agents;
  spec.families = contiguous_families(agents, 2);
  spec.dim = dim;
  spec.samples = samples;
  spec.support_size = static_cast<int>(dim / 4);
  spec.seed = 1;
  return generate(spec);
}

void BM_ScaAdmmStep(benchmark::State& state) {
  const auto net = network(static_cast<int>(state.range(0)), 64, 512);
  const auto X = net.stacked();
  LearnConfig config;
  config.budgets = {16};
  config.execution = mode(state);
  const SolverState start = initialize_state(X, config);
  for (auto _ : state) benchmark::DoNotOptimize(sca_admm_step(start, X, config));
}

void BM_LearnSheaf(benchmark::State& state) {
  const auto reps = network(static_cast<int>(state.range(0)), 64, 512).matrices();
  LearnConfig config;
  config.execution = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(learn_sheaf(reps, config));
}

void BM_AverageAccuracy(benchmark::State& state) {
  const auto net = network(static_cast<int>(state.range(0)), 64, 2048);
  const auto reps = net.matrices();
  LearnConfig config;
  config.edge_rule = TopK{static_cast<int>(state.range(0))};
  const auto sheaf = learn_sheaf(reps, config);
  const auto split = split_columns(static_cast<Index>(net.labels.size()), 1);
  for (auto _ : state) benchmark::DoNotOptimize(average_accuracy(sheaf, reps, net.labels, split, mode(state)));
}

}  // namespace

BENCHMARK(BM_ScaAdmmStep)->ArgsProduct({{4, 10}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LearnSheaf)->ArgsProduct({{6, 10}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AverageAccuracy)->ArgsProduct({{6, 10}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
