#include <benchmark/benchmark.h>

#include "iqmeta/distributions.hpp"
#include "iqmeta/estimators.hpp"
#include "iqmeta/simulation.hpp"

namespace {

iqmeta::MetaDataset stroke_trials() {
    iqmeta::MetaDataset d;
    d.studies = {{-3.10, 8, 1.81}, {-6.30, 11, 3.16}, {-9.40, 10, 0.53}, {-14.20, 20, 3.04},
                 {-7.00, 12, 1.40}, {-9.00, 10, 1.60}, {-3.40, 6, 2.41}, {-2.20, 5, 1.15},
                 {-1.40, 5, 0.97}, {-2.00, 5, 1.06}};
    return d;
}

void BM_IqPoint(benchmark::State& state) {
    const auto d = stroke_trials();
    for (auto _ : state) {
        benchmark::DoNotOptimize(iqmeta::iq_point(d));
    }
}
BENCHMARK(BM_IqPoint);

void BM_Assess(benchmark::State& state) {
    const auto d = stroke_trials();
    for (auto _ : state) {
        benchmark::DoNotOptimize(iqmeta::assess(d));
    }
}
BENCHMARK(BM_Assess);

void BM_FQuantile(benchmark::State& state) {
    const double df2 = static_cast<double>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(iqmeta::f_quantile(0.975, 9.0, df2));
    }
}
BENCHMARK(BM_FQuantile)->Arg(10)->Arg(82)->Arg(10000);

void BM_J2(benchmark::State& state) {
    const auto d = stroke_trials();
    iqmeta::J2Options opts;
    opts.max_iter = state.range(0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(iqmeta::j2_estimate(d, opts));
    }
}
BENCHMARK(BM_J2)->Arg(100)->Arg(10000);

void BM_RunCell(benchmark::State& state) {
    iqmeta::SimulationConfig cfg;
    cfg.tau2_list = {60.0};
    cfg.k_list = {10};
    cfg.n_grid = {state.range(0)};
    cfg.replications = 1000;
    cfg.patterns = {iqmeta::SizePattern::unbalanced()};
    const auto cell = iqmeta::enumerate_cells(cfg).front();
    for (auto _ : state) {
        benchmark::DoNotOptimize(iqmeta::run_cell(cfg, cell, 0));
    }
    state.SetItemsProcessed(state.iterations() * cfg.replications);
}
BENCHMARK(BM_RunCell)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
