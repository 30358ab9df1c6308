#include <benchmark/benchmark.h>

#include <memory>

#include "cvrplab/construct.hpp"
#include "cvrplab/decode.hpp"
#include "cvrplab/improve.hpp"
#include "cvrplab/instances.hpp"
#include "cvrplab/neural.hpp"
#include "cvrplab/rrc.hpp"

using namespace cvrplab;

namespace {

Instance bench_instance(int n) { return generate(GenConfig::for_size(n, 42)); }

ConstructConfig method(ConstructMethod m) {
  ConstructConfig c;
  c.method = m;
  return c;
}

std::shared_ptr<const PolicyParams> small_params() {
  NetworkShape shape;
  shape.embed_dim = 32;
  shape.heads = 4;
  shape.decoder_layers = 2;
  shape.ff_dim = 64;
  return std::make_shared<const PolicyParams>(PolicyParams::init(shape, 1));
}

}  // namespace

static void BM_Savings(benchmark::State& state) {
  const Instance inst = bench_instance(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(construct(inst, method(ConstructMethod::savings_parallel)));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Savings)->RangeMultiplier(2)->Range(20, 320)->Complexity();

static void BM_Sweep(benchmark::State& state) {
  const Instance inst = bench_instance(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(construct(inst, method(ConstructMethod::sweep)));
}
BENCHMARK(BM_Sweep)->Arg(100)->Arg(500);

static void BM_LocalSearch(benchmark::State& state) {
  const Instance inst = bench_instance(static_cast<int>(state.range(0)));
  const Solution start = construct(inst, method(ConstructMethod::sweep));
  for (auto _ : state) benchmark::DoNotOptimize(local_search(inst, start));
}
BENCHMARK(BM_LocalSearch)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_Encode(benchmark::State& state) {
  const auto params = small_params();
  const Instance inst = bench_instance(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(encode(*params, inst));
}
BENCHMARK(BM_Encode)->Arg(20)->Arg(100)->Unit(benchmark::kMicrosecond);

static void BM_NeuralPomo(benchmark::State& state) {
  const NeuralPolicy policy(small_params());
  const Instance inst = bench_instance(static_cast<int>(state.range(0)));
  DecodeConfig cfg;
  cfg.pomo_size = inst.size();
  for (auto _ : state) benchmark::DoNotOptimize(decode(policy, inst, cfg));
}
BENCHMARK(BM_NeuralPomo)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

static void BM_Beam(benchmark::State& state) {
  const DistanceHeuristicPolicy policy;
  const Instance inst = bench_instance(50);
  const int width = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(beam_search(policy, inst, 8, width));
}
BENCHMARK(BM_Beam)->Arg(1)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_Rrc(benchmark::State& state) {
  const DistanceHeuristicPolicy policy;
  const Instance inst = bench_instance(100);
  const Solution start = construct(inst, method(ConstructMethod::nearest_sequential));
  RrcConfig cfg;
  cfg.iterations = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rrc_run(policy, inst, start, cfg));
}
BENCHMARK(BM_Rrc)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
