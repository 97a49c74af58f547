#include "rankinfer/rankinfer.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace rankinfer;

namespace {

void BM_JacobiEigen(benchmark::State& state) {
    const auto d = static_cast<std::size_t>(state.range(0));
    RandomStream rng(1, 0);
    std::vector<double> src(d * d);
    for (double& x : src) x = rng.normal();
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < i; ++j) src[i * d + j] = src[j * d + i];
    std::vector<double> a(d * d), ev(d);
    for (auto _ : state) {
        a = src;
        jacobi_eigen(d, a.data(), ev.data(), nullptr);
        benchmark::DoNotOptimize(ev.data());
    }
}
BENCHMARK(BM_JacobiEigen)->Arg(2)->Arg(3)->Arg(5)->Arg(10);

ObservationSet rotating_obs(std::size_t n) {
    SimulationSpec spec;
    spec.n = n;
    spec.d = 2;
    spec.seed = 3;
    spec.path = rotating_model(1.0, 0.5, 0.02, 0.5);
    return sample_observations(spec);
}

void BM_SampleObservations(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(rotating_obs(n));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_SampleObservations)->Arg(2000)->Arg(100000);

void BM_BlockEigenvalues(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto obs = rotating_obs(n);
    const auto scheme = BlockingScheme::make(n, 0.02);
    for (auto _ : state) benchmark::DoNotOptimize(block_eigenvalues(obs, scheme));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_BlockEigenvalues)->Arg(2000)->Arg(100000);

void BM_CriticalValue(benchmark::State& state) {
    HypothesisParams p;
    p.r = 1;
    p.L = 0.4;
    p.gap = 1.0;
    for (auto _ : state) benchmark::DoNotOptimize(critical_value(p, 2000, 0.02, 2));
}
BENCHMARK(BM_CriticalValue);

} // namespace

BENCHMARK_MAIN();
