#include <benchmark/benchmark.h>

#include "sfr/rng.hpp"
#include "sfr/sim/generators.hpp"

using namespace sfr;

static void BM_Diffuse(benchmark::State& state) {
    const sim::Grid grid{32, 32, 2.0, 2.0};
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(sim::gen_diffuse(seed++, 300.0, grid));
}
BENCHMARK(BM_Diffuse)->Unit(benchmark::kMicrosecond);

static void BM_NearField(benchmark::State& state) {
    const sim::Grid grid{32, 32, 2.0, 2.0};
    Rng rng(1);
    const auto scene = sim::sample_nearfield_scene(rng, 300.0, grid.center());
    for (auto _ : state) benchmark::DoNotOptimize(sim::gen_nearfield(scene, 300.0, grid, 1));
}
BENCHMARK(BM_NearField)->Unit(benchmark::kMicrosecond);

static void BM_IsmRtf(benchmark::State& state) {
    Rng rng(2);
    const auto room = sim::sample_room(rng);
    const sim::Grid grid{32, 32, room.lx, room.ly};
    const int order = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(sim::gen_ism_rtf(room, 300.0, grid, order));
}
BENCHMARK(BM_IsmRtf)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

static void BM_MtRtf(benchmark::State& state) {
    Rng rng(3);
    const auto room = sim::sample_room(rng);
    const sim::Grid grid{32, 32, room.lx, room.ly};
    for (auto _ : state) benchmark::DoNotOptimize(sim::gen_mt_rtf(room, 300.0, grid, 600.0));
}
BENCHMARK(BM_MtRtf)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
