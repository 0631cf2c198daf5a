#include "crem/covariance.hpp"
#include "crem/field.hpp"
#include "crem/rng.hpp"
#include "crem/search.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace crem;

namespace {

void bm_mix64(benchmark::State& state) {
    std::uint64_t x = 0x243f6a8885a308d3ULL;
    for (auto _ : state) {
        x = mix64(x);
        benchmark::DoNotOptimize(x);
    }
}
BENCHMARK(bm_mix64);

void bm_inv_normal_cdf(benchmark::State& state) {
    double u = 0.1234567;
    for (auto _ : state) {
        const double z = inv_normal_cdf(u);
        benchmark::DoNotOptimize(z);
        u += 1e-9;
    }
}
BENCHMARK(bm_inv_normal_cdf);

void bm_walk_to_leaf(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    FieldOracle oracle(brw_profile(), n, 1);
    std::uint64_t r = 0;
    for (auto _ : state) {
        FieldOracle::Walk w = oracle.walk_root();
        const std::uint64_t bits = mix64(++r);
        for (int j = 0; j < n; ++j)
            oracle.walk_down(w, (bits >> (j & 63)) & 1u);
        benchmark::DoNotOptimize(w.x);
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(bm_walk_to_leaf)->Arg(64)->Arg(1024);

void bm_tail_sum(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    FieldOracle oracle(two_slope_profile(0.25), n, 2);
    FieldOracle::Walk w = oracle.walk_root();
    for (int j = 0; j < n / 2; ++j)
        oracle.walk_down(w, j & 1u);
    for (auto _ : state) {
        const double t = oracle.tail_sum(w);
        benchmark::DoNotOptimize(t);
    }
}
BENCHMARK(bm_tail_sum)->Arg(64)->Arg(1024);

void bm_bulk_scan(benchmark::State& state) {
    const bool estimates = state.range(0) != 0;
    FieldOracle oracle(brw_profile(), 1024, 3);
    FieldOracle::Walk w = oracle.walk_root();
    for (int j = 0; j < 100; ++j)
        oracle.walk_down(w, j & 1u);
    std::vector<double> out;
    for (auto _ : state) {
        oracle.bulk_descendant_scan(w, 10, estimates, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(bm_bulk_scan)->Arg(0)->Arg(1);

void bm_block_greedy(benchmark::State& state) {
    std::uint64_t seed = 0;
    for (auto _ : state) {
        FieldOracle oracle(brw_profile(), 256, ++seed);
        const SearchResult r = block_greedy(oracle, 8);
        benchmark::DoNotOptimize(r.value);
    }
}
BENCHMARK(bm_block_greedy);

} // namespace

BENCHMARK_MAIN();
