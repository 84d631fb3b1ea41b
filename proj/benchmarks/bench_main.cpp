#include "xbench/bias.hpp"
#include "xbench/configspace.hpp"
#include "xbench/ela.hpp"
#include "xbench/gbdt.hpp"
#include "xbench/modcma.hpp"
#include "xbench/modde.hpp"
#include "xbench/runner.hpp"
#include "xbench/suite.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace xbench;

namespace {

Objective objective_for(suite::Problem& p) {
    return {p.dim(), p.bounds(), [&p](std::span<const double> x) { return p.evaluate(x); }};
}

void BM_ModcmaRun(benchmark::State& state) {
    const auto space = modcma_space();
    const auto cfg = modcma::from_configuration(space.default_configuration(), space);
    auto prob = suite::make_problem(10, static_cast<int>(state.range(0)), 1);
    auto obj = objective_for(prob);
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(modcma::run(cfg, obj, 10'000, seed++));
    state.SetItemsProcessed(state.iterations() * 10'000);
}
BENCHMARK(BM_ModcmaRun)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_ModdeRun(benchmark::State& state) {
    const auto space = modde_space();
    const auto cfg = space.default_configuration();
    auto prob = suite::make_problem(10, static_cast<int>(state.range(0)), 1);
    auto obj = objective_for(prob);
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(runner::run_configuration(cfg, space, obj, 10'000, seed++));
    state.SetItemsProcessed(state.iterations() * 10'000);
}
BENCHMARK(BM_ModdeRun)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_SuiteEvaluate(benchmark::State& state) {
    auto prob = suite::make_problem(static_cast<int>(state.range(0)), 20, 1);
    std::vector<double> x(20, 0.3);
    for (auto _ : state) {
        x[0] += 1e-9;
        benchmark::DoNotOptimize(prob.evaluate(x));
    }
}
BENCHMARK(BM_SuiteEvaluate)->Arg(1)->Arg(10)->Arg(15)->Arg(21);

struct Dataset {
    std::vector<std::vector<double>> X;
    std::vector<double> y;
};

Dataset random_dataset(int rows, int width) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    Dataset d;
    for (int i = 0; i < rows; ++i) {
        std::vector<double> x(static_cast<std::size_t>(width));
        for (auto& v : x) v = std::floor(u(rng) * 6);
        d.y.push_back(x[0] * x[1] + std::sin(x[2]) + 0.1 * u(rng));
        d.X.push_back(std::move(x));
    }
    return d;
}

void BM_GbdtFit(benchmark::State& state) {
    const auto d = random_dataset(static_cast<int>(state.range(0)), 12);
    gbdt::FitParams p;
    p.n_trees = 100;
    for (auto _ : state) benchmark::DoNotOptimize(gbdt::fit(d.X, d.y, p));
}
BENCHMARK(BM_GbdtFit)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_TreeShap(benchmark::State& state) {
    const auto d = random_dataset(1000, 12);
    const auto model = gbdt::fit(d.X, d.y, {});
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(gbdt::tree_shap(model, d.X[i++ % d.X.size()]));
}
BENCHMARK(BM_TreeShap)->Unit(benchmark::kMicrosecond);

void BM_ElaFeatures(benchmark::State& state) {
    auto prob = suite::make_problem(3, static_cast<int>(state.range(0)), 1);
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(ela::doe_features(prob, ela::kDefaultSamples, seed++));
}
BENCHMARK(BM_ElaFeatures)->Arg(2)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_UniformityTest(benchmark::State& state) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::vector<double>> pos(100, std::vector<double>(static_cast<std::size_t>(state.range(0))));
    for (auto& row : pos)
        for (auto& v : row) v = u(rng);
    for (auto _ : state) benchmark::DoNotOptimize(bias::uniformity_test(pos));
}
BENCHMARK(BM_UniformityTest)->Arg(5)->Arg(30);

void BM_EnumerateGrid(benchmark::State& state) {
    const auto space = modcma_space();
    for (auto _ : state) benchmark::DoNotOptimize(enumerate_grid(space));
}
BENCHMARK(BM_EnumerateGrid)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
