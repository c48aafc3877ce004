// Serial reference versus OpenMP evaluation of the per-index kernels, plus full sweeps.

#include <benchmark/benchmark.h>

#include <random>

#include "feasik/engine.hpp"
#include "feasik/kernels.hpp"
#include "feasik/sweep.hpp"

using namespace feasik;

namespace {

/// m mixed constraints in R^n: halfspaces, balls and squared-distance sublevel sets.
Problem mixed_pool(std::size_t m, std::size_t n) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  std::vector<Constraint<double>> cs;
  cs.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    Vector a(n);
    for (std::size_t d = 0; d < n; ++d) a[d] = g(rng);
    switch (i % 3) {
      case 0: cs.emplace_back(Halfspace<double>{a, 0.5}); break;
      case 1: cs.emplace_back(Ball<double>{a, 2.0}); break;
      default: cs.emplace_back(Sublevel<double>{ConvexFunction<double>(SquaredDistToBall<double>{a, 2.0}, n)});
    }
  }
  return Problem(n, std::move(cs));
}

Vector probe(std::size_t n) {
  Vector x(n);
  for (std::size_t d = 0; d < n; ++d) x[d] = 3.0 * ((d % 2) ? 1 : -1);
  return x;
}

void BM_EvaluateSerial(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const Problem p = mixed_pool(m, n);
  const IndexSet all = p.all_indices();
  const Vector x = probe(n);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_active_serial(p, x, std::span<const Index>(all)));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * m));
}

void BM_EvaluateParallel(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const Problem p = mixed_pool(m, n);
  const IndexSet all = p.all_indices();
  const Vector x = probe(n);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_active_parallel(p, x, std::span<const Index>(all)));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * m));
}

void BM_CountViolatedSerial(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const Problem p = mixed_pool(m, 64);
  const IndexSet all = p.all_indices();
  const Vector x = probe(64);
  for (auto _ : state) benchmark::DoNotOptimize(count_violated_serial(p, x, std::span<const Index>(all)));
}

void BM_CountViolatedParallel(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const Problem p = mixed_pool(m, 64);
  const IndexSet all = p.all_indices();
  const Vector x = probe(64);
  for (auto _ : state) benchmark::DoNotOptimize(count_violated_parallel(p, x, std::span<const Index>(all)));
}

/// One simultaneous run (all indices every step) with the evaluation threshold set by the argument.
void BM_SimultaneousRun(benchmark::State& state) {
  const bool parallel = state.range(0) != 0;
  auto p = std::make_shared<const Problem>(mixed_pool(2048, 32));
  RunConfig<double> cfg(p, Control<double>::Explicit{{p->all_indices()}}, probe(32));
  cfg.weights = WeightKind::UniformOverViolated;
  cfg.max_iter = 50;
  cfg.parallel_threshold = parallel ? 1 : std::numeric_limits<std::size_t>::max();
  for (auto _ : state) benchmark::DoNotOptimize(solve(cfg, {.subgradient_path = false, .record_trace = false}));
}

/// Many small runs: parallelism across runs rather than within a step.
void BM_Sweep(benchmark::State& state) {
  SweepSpec spec;
  spec.instances = 50;
  spec.seed = 1;
  spec.controls = {"cyclic", "remotest", "random"};
  spec.phis = {PhiKind::One, PhiKind::SubgradNorm};
  spec.schedules = {Overrelaxation<double>::harmonic()};
  spec.schedule_names = {"harmonic"};
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_sweep(spec, jobs));
}

}  // namespace

BENCHMARK(BM_EvaluateSerial)->Args({256, 16})->Args({4096, 16})->Args({4096, 256})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EvaluateParallel)->Args({256, 16})->Args({4096, 16})->Args({4096, 256})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_CountViolatedSerial)->Arg(1024)->Arg(16384)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_CountViolatedParallel)->Arg(1024)->Arg(16384)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SimultaneousRun)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sweep)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
