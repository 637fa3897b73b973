// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include "unshuffle/datagen.hpp"
#include "unshuffle/harness.hpp"
#include "unshuffle/ml_oracle.hpp"

using namespace unshuffle;

namespace {

SweepSpec bench_sweep() {
    SweepSpec s;
    s.n_list = {120};
    s.p = 300;
    s.k_list = {5};
    s.h_list = {10};
    s.ratio_grid = {4.0, 5.0};
    s.trials = 8;
    return s;
}

ProblemInstance bench_instance() {
    GenSpec g;
    g.n = 8;
    g.p = 8;
    g.k = 2;
    g.h = 3;
    g.snr = 100.0;
    g.seed = 7;
    return generate_instance(g);
}

void BM_SweepParallel(benchmark::State& state) {
    const auto s = bench_sweep();
    for (auto _ : state) benchmark::DoNotOptimize(run_sweep(s, static_cast<int>(state.range(0))));
}

void BM_SweepSerial(benchmark::State& state) {
    const auto s = bench_sweep();
    for (auto _ : state) benchmark::DoNotOptimize(run_sweep_serial(s));
}

void BM_MlParallel(benchmark::State& state) {
    const auto inst = bench_instance();
    for (auto _ : state) benchmark::DoNotOptimize(ml_estimate(inst, 2));
}

void BM_MlSerial(benchmark::State& state) {
    const auto inst = bench_instance();
    for (auto _ : state) benchmark::DoNotOptimize(ml_estimate_serial(inst, 2));
}

}  // namespace

BENCHMARK(BM_SweepParallel)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MlParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MlSerial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
