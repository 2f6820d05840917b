#include <benchmark/benchmark.h>

#include "wsnagg/simulator.hpp"

using namespace wsnagg;

static void BM_FullRun(benchmark::State& state) {
    ScenarioConfig c;
    c.attack.compromised_fraction = static_cast<double>(state.range(0)) / 100.0;
    for (auto _ : state) {
        const auto r = run(c);
        benchmark::DoNotOptimize(r.metrics.packets_sent);
    }
}
BENCHMARK(BM_FullRun)->Arg(0)->Arg(20)->Unit(benchmark::kMillisecond);
