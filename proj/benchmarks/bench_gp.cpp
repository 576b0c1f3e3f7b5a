#include <benchmark/benchmark.h>

#include "sfr/gp/kernels.hpp"
#include "sfr/gp/regression.hpp"
#include "sfr/sim/generators.hpp"

using namespace sfr;

namespace {

const sim::Grid kGrid{32, 32, 2.0, 2.0};

gp::KernelSpec make_kernel(gp::KernelFamily f, double k) {
    switch (f) {
        case gp::KernelFamily::RbfIso: return gp::RbfIso{1.0, 0.5};
        case gp::KernelFamily::Hierarchical: {
            gp::Hierarchical h;
            h.k = k;
            h.directions = gp::circle_directions(128);
            h.sigma.assign(128, 0.1);
            return h;
        }
        default: return gp::Bessel{1.0, k};
    }
}

sim::ObservationSet observations(std::size_t n, double freq) {
    const auto field = sim::standardize(sim::gen_diffuse(7, freq, kGrid));
    return sim::sample_observations(field, n, 3);
}

}  // namespace

static void BM_KernelEval(benchmark::State& state) {
    const auto family = static_cast<gp::KernelFamily>(state.range(0));
    const auto spec = make_kernel(family, wavenumber(300.0));
    Vec2 d{0.13, -0.27};
    for (auto _ : state) {
        benchmark::DoNotOptimize(gp::kernel_at(spec, d));
        d.x += 1e-9;
    }
    state.SetLabel(std::string(gp::kernel_name(family)));
}
BENCHMARK(BM_KernelEval)
    ->Arg(static_cast<int>(gp::KernelFamily::RbfIso))
    ->Arg(static_cast<int>(gp::KernelFamily::Hierarchical))
    ->Arg(static_cast<int>(gp::KernelFamily::Bessel));

static void BM_Gram(benchmark::State& state) {
    const auto obs = observations(static_cast<std::size_t>(state.range(0)), 300.0);
    const auto locs = obs.locations();
    const gp::KernelSpec spec = gp::Bessel{1.0, wavenumber(300.0)};
    for (auto _ : state) benchmark::DoNotOptimize(gp::gram(spec, locs));
}
BENCHMARK(BM_Gram)->Arg(10)->Arg(50)->Arg(200);

static void BM_PosteriorMean(benchmark::State& state) {
    const auto obs = observations(static_cast<std::size_t>(state.range(0)), 300.0);
    gp::GpFit fit;
    fit.spec = gp::Bessel{1.0, wavenumber(300.0)};
    fit.noise_variance = 1e-2;
    const auto targets = kGrid.points();
    for (auto _ : state) benchmark::DoNotOptimize(gp::posterior_mean(obs, targets, fit));
}
BENCHMARK(BM_PosteriorMean)->Arg(10)->Arg(50)->Unit(benchmark::kMicrosecond);

static void BM_FitMap(benchmark::State& state) {
    const auto family = static_cast<gp::KernelFamily>(state.range(0));
    const auto obs = observations(10, 150.0);
    const gp::PriorConfig priors;
    for (auto _ : state) benchmark::DoNotOptimize(gp::fit_map(obs, family, wavenumber(150.0), priors, 8, 1));
    state.SetLabel(std::string(gp::kernel_name(family)));
}
BENCHMARK(BM_FitMap)
    ->Arg(static_cast<int>(gp::KernelFamily::Bessel))
    ->Arg(static_cast<int>(gp::KernelFamily::RbfIso))
    ->Arg(static_cast<int>(gp::KernelFamily::Hierarchical))
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
