#include <benchmark/benchmark.h>

#include "baoc/allocator.hpp"
#include "baoc/diagnostics.hpp"
#include "baoc/optim_kernels.hpp"
#include "baoc/rng.hpp"
#include "baoc/simulator.hpp"

namespace {

using baoc::Exec;

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::parallel : Exec::serial; }

void BM_OptimizerStep(benchmark::State& state) {
  const baoc::BlockShape shape({1024, 1024});
  baoc::BlockOptimizer opt(baoc::make_config(baoc::Family::adamw, 8), shape);
  std::vector<float> params(static_cast<std::size_t>(shape.param_count()), 0.5f), grads(params.size());
  baoc::CounterRng rng(7);
  for (auto& g : grads) g = static_cast<float>(rng.normal());
  for (auto _ : state) {
    opt.step(params, grads, exec_of(state));
    benchmark::DoNotOptimize(params.data());
  }
}
BENCHMARK(BM_OptimizerStep)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_DiagnosticsIngest(benchmark::State& state) {
  baoc::TraceHeader header;
  header.sampling_ratio = 0.05;
  std::vector<baoc::StreamProfile> profiles;
  for (int i = 0; i < 16; ++i) {
    header.blocks.push_back(baoc::make_block_spec(i, "b" + std::to_string(i), {512, 512}, 0.05, 3));
    profiles.push_back({0.5, 0.9, 1.0, 0.5, 3});
  }
  const auto trace = baoc::generate_stream(header, profiles, 8, Exec::serial);
  baoc::DiagnosticsBank bank(header.blocks);
  std::size_t k = 0;
  for (auto _ : state) {
    bank.ingest(trace.records[k++ % trace.records.size()], exec_of(state));
  }
}
BENCHMARK(BM_DiagnosticsIngest)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMicrosecond);

void BM_Bruteforce(benchmark::State& state) {
  baoc::AllocationProblem p;
  baoc::CounterRng rng(11);
  std::uint64_t total = 0;
  for (int i = 0; i < 7; ++i) {
    baoc::ProblemBlock b;
    b.id = i;
    for (int c = 0; c < 8; ++c) {
      auto m = rng.below(101);
      b.candidates.push_back({baoc::make_config(baoc::Family::adamw, 16), 3.0 * rng.uniform(), m,
                              0.3 + 1.2 * rng.uniform()});
      total += m;
    }
    p.blocks.push_back(b);
  }
  p.mem_budget = total / 16;
  p.time_budget = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(baoc::solve_bruteforce(p, exec_of(state)).objective);
}
BENCHMARK(BM_Bruteforce)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_SolveExact(benchmark::State& state) {
  baoc::AllocationProblem p;
  baoc::CounterRng rng(13);
  std::uint64_t total = 0;
  for (int i = 0; i < 24; ++i) {
    baoc::ProblemBlock b;
    b.id = i;
    for (int c = 0; c < 12; ++c) {
      auto m = rng.below(101);
      b.candidates.push_back({baoc::make_config(baoc::Family::adamw, 16), 3.0 * rng.uniform(), m,
                              0.3 + 1.2 * rng.uniform()});
      total += m;
    }
    p.blocks.push_back(b);
  }
  p.mem_budget = total / 24;
  p.time_budget = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(baoc::solve_exact(p).objective);
}
BENCHMARK(BM_SolveExact)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
