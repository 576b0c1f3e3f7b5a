#include <benchmark/benchmark.h>

#include "sfr/np/model.hpp"
#include "sfr/sim/generators.hpp"

using namespace sfr;

namespace {

np::ContextSet context(std::size_t n) {
    const sim::Grid grid{32, 32, 2.0, 2.0};
    const auto field = sim::standardize(sim::gen_diffuse(5, 150.0, grid));
    return np::make_context(sim::sample_observations(field, n, 1), grid, 150.0);
}

}  // namespace

// Full-grid prediction, the path behind `sfr reconstruct --checkpoint`.
static void BM_PredictField(benchmark::State& state) {
    const np::NeuralProcess model(state.range(0) ? np::NpConfig{} : np::desk_config(), 1);
    const auto ctx = context(10);
    const sim::Grid grid{32, 32, 2.0, 2.0};
    for (auto _ : state) benchmark::DoNotOptimize(np::predict_field(model, ctx, grid));
    state.SetLabel(state.range(0) ? "full" : "desk");
}
BENCHMARK(BM_PredictField)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_ElboBackward(benchmark::State& state) {
    const np::NeuralProcess model(np::desk_config(), 1);
    const auto ctx = context(10);
    np::TargetSet targets;
    const sim::Grid grid{32, 32, 2.0, 2.0};
    const auto field = sim::standardize(sim::gen_diffuse(5, 150.0, grid));
    targets.locations = np::normalized_grid(grid);
    targets.values = field.magnitudes;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        auto r = model.elbo_loss(ctx, targets, seed++);
        r.loss.backward();
        benchmark::DoNotOptimize(r.loss.value());
    }
}
BENCHMARK(BM_ElboBackward)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
