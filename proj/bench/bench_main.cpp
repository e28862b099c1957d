#include <random>

#include <benchmark/benchmark.h>

#include "mhmp/engine.hpp"
#include "mhmp/solver.hpp"

using namespace mhmp;

namespace {

Scenario bench_scenario() {
  Scenario sc = default_scenario();
  sc.blocks = 20;
  sc.replicas = 8;
  return sc;
}

ProblemInstance first_block(int hops, Objective objective) {
  Scenario sc = default_scenario();
  sc.relay_layers = hops;
  const auto topo = std::make_shared<const Topology>(sc.topology());
  return block_instance(sc, topo, realize_block(sc, *topo, 0, 0), objective);
}

void replicas(benchmark::State& state, Execution exec) {
  const Scenario sc = bench_scenario();
  const SchedulerKind kinds[] = {SchedulerKind::kMhmpLl, SchedulerKind::kMhmpLp};
  for (auto _ : state) benchmark::DoNotOptimize(run_schemes(sc, kinds, exec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sc.replicas * sc.blocks * 2));
}

void BM_ReplicasSerial(benchmark::State& state) { replicas(state, Execution::kSerial); }
void BM_ReplicasParallel(benchmark::State& state) { replicas(state, Execution::kParallel); }

void BM_MinLatency(benchmark::State& state) {
  const auto inst = first_block(static_cast<int>(state.range(0)), Objective::kMinLatency);
  for (auto _ : state) benchmark::DoNotOptimize(solve_min_latency(inst));
}

void BM_MinPower(benchmark::State& state) {
  const auto inst = first_block(static_cast<int>(state.range(0)), Objective::kMinPower);
  for (auto _ : state) benchmark::DoNotOptimize(solve_min_power(inst));
}

void BM_GridOracle(benchmark::State& state) {
  const auto inst = first_block(1, Objective::kMinLatency);
  const OracleOptions opts{.resolution = 1.0 / static_cast<double>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(grid_oracle(inst, opts));
}

void BM_ConvexityProbe(benchmark::State& state) {
  const auto inst = first_block(2, Objective::kMinLatency);
  std::mt19937_64 rng(1);
  for (auto _ : state)
    benchmark::DoNotOptimize(convexity_probe(inst, {.samples = 1000, .theta = std::nullopt}, rng));
}

}  // namespace

BENCHMARK(BM_ReplicasSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ReplicasParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MinLatency)->DenseRange(1, 4)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MinPower)->DenseRange(1, 4)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_GridOracle)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvexityProbe)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
