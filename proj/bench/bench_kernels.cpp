// Serial reference kernels against their OpenMP counterparts.
//   ./segwave_bench --benchmark_filter=Argmax

#include "segwave/energy.hpp"
#include "segwave/evalue.hpp"
#include "segwave/parallel.hpp"
#include "segwave/segmenter.hpp"
#include "segwave/simlab.hpp"

#include <benchmark/benchmark.h>

#include <map>

using namespace segwave;

namespace {

const Signal& signal_of(std::size_t n) {
    static std::map<std::size_t, Signal> cache;
    auto it = cache.find(n);
    if (it == cache.end()) {
        SimSpec spec;
        spec.n = n;
        spec.expected_k = static_cast<double>(n) / 2000.0;
        spec.seed = 1;
        it = cache.emplace(n, simulate(spec).signal).first;
    }
    return it->second;
}

void BM_ArgmaxSerial(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const EnergyPrefix p(build_prefix(signal_of(n)));
    const auto grid = CandidateGrid::over(0, n, 1, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(argmax_changepoint_serial(p, grid));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.count()));
}

void BM_ArgmaxParallel(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const EnergyPrefix p(build_prefix(signal_of(n)));
    const auto grid = CandidateGrid::over(0, n, 1, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(argmax_changepoint_parallel(p, grid));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.count()));
}

void BM_Evalue(benchmark::State& state) {
    const EnergyPrefix p(build_prefix(signal_of(100'000)));
    McmcConfig mc;
    mc.chain_length = static_cast<std::size_t>(state.range(0));
    mc.burn_in = mc.chain_length / 5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(evalue(p, 50'000, PriorSpec::jeffreys(), mc));
    }
}

// Whole segmentation with the worker cap at 1 versus the OpenMP default.
void BM_Segment(benchmark::State& state) {
    const int threads = static_cast<int>(state.range(1));
    set_max_threads(threads);
    const Signal& s = signal_of(static_cast<std::size_t>(state.range(0)));
    SegConfig cfg;
    cfg.mcmc.chain_length = 20'000;
    cfg.mcmc.burn_in = 4000;
    for (auto _ : state) {
        benchmark::DoNotOptimize(segment(s, cfg));
    }
    set_max_threads(0);
    state.SetLabel(threads == 1 ? "serial" : "parallel");
}

}  // namespace

BENCHMARK(BM_ArgmaxSerial)->Arg(100'000)->Arg(1'000'000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ArgmaxParallel)->Arg(100'000)->Arg(1'000'000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Evalue)->Arg(10'000)->Arg(50'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Segment)->Args({200'000, 1})->Args({200'000, 0})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
