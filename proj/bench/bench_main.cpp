#include "msfbm/moments.hpp"
#include "msfbm/simulate.hpp"

#include <benchmark/benchmark.h>

#include <omp.h>

#include <random>

using namespace msfbm;

namespace {

std::vector<double> noise(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::vector<double> v(n);
    for (double& x : v) x = z(rng);
    return v;
}

const std::vector<int>& lags() {
    static const std::vector<int> l = LagGrid::standard().taus;
    return l;
}

void BM_cross_cov_serial(benchmark::State& st) {
    auto x = noise(st.range(0), 1), y = noise(st.range(0), 2);
    for (auto _ : st) benchmark::DoNotOptimize(empirical_cross_cov_serial(x, y, lags()));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_cross_cov_parallel(benchmark::State& st) {
    auto x = noise(st.range(0), 1), y = noise(st.range(0), 2);
    for (auto _ : st) benchmark::DoNotOptimize(empirical_cross_cov(x, y, lags()));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_simulate(benchmark::State& st) {
    ModelParams p = ModelParams::homogeneous(2, 16384, 0.02, 0.05, 0.15, 0.5);
    const int workers = st.range(1) ? omp_get_max_threads() : 1;
    for (auto _ : st) benchmark::DoNotOptimize(simulate_field(p, st.range(0), 1.0, 7, 8, workers));
    st.counters["workers"] = workers;
}

}  // namespace

BENCHMARK(BM_cross_cov_serial)->RangeMultiplier(4)->Range(1 << 14, 1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_cross_cov_parallel)->RangeMultiplier(4)->Range(1 << 14, 1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate)->ArgsProduct({{16384, 262144}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
