#include <benchmark/benchmark.h>

#include "wsnagg/estimate.hpp"
#include "wsnagg/local_fusion.hpp"

using namespace wsnagg;

static void BM_CiFuseScalar(benchmark::State& state) {
    const auto a = Estimate::scalar(25.3, 0.7), b = Estimate::scalar(26.1, 0.9);
    for (auto _ : state) benchmark::DoNotOptimize(ci_fuse_optimal(a, b));
}
BENCHMARK(BM_CiFuseScalar);

static void BM_CiFuseMatrix(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    Matrix pa = Matrix::Identity(d, d), pb = 2.0 * Matrix::Identity(d, d);
    pa(0, 0) = 5.0;
    pb(d - 1, d - 1) = 0.3;
    const Estimate a(Vector::Zero(d), pa), b(Vector::Ones(d), pb);
    for (auto _ : state) benchmark::DoNotOptimize(ci_fuse_optimal(a, b));
}
BENCHMARK(BM_CiFuseMatrix)->Arg(2)->Arg(3)->Arg(6);

static void BM_FuseLocal(benchmark::State& state) {
    FusionConfig cfg;
    cfg.rule = LocalFusionRule::mixture;
    const Gaussian1D local(24.2, 1.0), global(25.9, 1.3);
    for (auto _ : state) benchmark::DoNotOptimize(fuse_local(local, global, std::nullopt, cfg));
}
BENCHMARK(BM_FuseLocal);
