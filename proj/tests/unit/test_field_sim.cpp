#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include "oracles.hpp"
#include "sfr/errors.hpp"
#include "sfr/sim/generators.hpp"

using namespace sfr;
using namespace sfr::sim;

namespace {

Grid room_grid(const RoomSpec& r) { return {32, 32, r.lx, r.ly}; }

RoomSpec test_room() {
    RoomSpec r;
    r.lx = 4.3;
    r.ly = 3.7;
    r.t60 = 0.4;
    r.source = {1.13, 2.71};
    return r;
}

double max_abs(const std::vector<Complex>& v) {
    double m = 0.0;
    for (const auto& x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

TEST(Grid, SpacingAndInterior) {
    const Grid g{32, 32, 4.0, 3.0};
    EXPECT_EQ(g.size(), 1024u);
    EXPECT_DOUBLE_EQ(g.point(1, 0).x - g.point(0, 0).x, 4.0 / 32);
    EXPECT_DOUBLE_EQ(g.point(0, 1).y - g.point(0, 0).y, 3.0 / 32);
    for (const auto& p : g.points()) {
        EXPECT_GT(p.x, 0.0);
        EXPECT_LT(p.x, 4.0);
        EXPECT_GT(p.y, 0.0);
        EXPECT_LT(p.y, 3.0);
    }
    EXPECT_EQ(g.index(3, 2), 2u * 32 + 3);
    EXPECT_THROW((Grid{0, 32, 1.0, 1.0}.validate()), InvalidInput);
}

TEST(Diffuse, SingleWaveHasUnitMagnitude) {
    const Grid g{32, 32, 2.0, 2.0};
    const Field f = gen_diffuse(5, 200.0, g, {.wave_count = 1});
    for (const auto& v : f.values) EXPECT_NEAR(std::abs(v), 1.0, 1e-12);
}

TEST(Diffuse, MeanMagnitudeIsOnePascal) {
    const Grid g{32, 32, 2.0, 2.0};
    for (std::uint64_t seed : {1u, 2u, 77u})
        for (double f : {30.0, 307.0, 500.0}) {
            const auto mags = gen_diffuse(seed, f, g).magnitudes();
            double m = 0.0;
            for (double x : mags) m += x;
            EXPECT_NEAR(m / mags.size(), 1.0, 1e-9);
        }
}

TEST(Diffuse, BitIdenticalForSameInputs) {
    const Grid g{32, 32, 2.0, 2.0};
    const Field a = gen_diffuse(9, 150.0, g), b = gen_diffuse(9, 150.0, g);
    ASSERT_EQ(a.values.size(), b.values.size());
    EXPECT_EQ(0, std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(Complex)));
    EXPECT_NE(gen_diffuse(10, 150.0, g).values[0], a.values[0]);
}

TEST(Diffuse, PowerOfUnscaledSumMatchesWaveCount) {
    // E|sum of m unit random phasors|^2 = m.
    const Grid g{2, 2, 1.0, 1.0};
    const int m = 1500;
    double acc = 0.0;
    const int seeds = 1000;
    for (int s = 0; s < seeds; ++s)
        acc += std::norm(gen_diffuse(static_cast<std::uint64_t>(s), 250.0, g, {.wave_count = m, .normalize = false}).values[0]);
    EXPECT_NEAR(acc / seeds / m, 1.0, 0.05);
}

TEST(Diffuse, RejectsBadInput) {
    EXPECT_THROW(gen_diffuse(1, 0.0, Grid{32, 32, 1, 1}), InvalidInput);
    EXPECT_THROW(gen_diffuse(1, 100.0, Grid{32, 32, -1, 1}), InvalidInput);
}

TEST(NearField, GreenMagnitudeAndInverseDistance) {
    const double k = wavenumber(200.0);
    EXPECT_NEAR(std::abs(free_field_green(k, 0.7)), 1.0 / (4.0 * kPi * 0.7), 1e-15);
    EXPECT_NEAR(std::abs(free_field_green(k, 0.5)) / std::abs(free_field_green(k, 1.0)), 2.0, 1e-12);

    const Grid g{32, 32, 2.0, 2.0};
    const double f = 300.0;
    const double lambda = kSpeedOfSound / f;
    NearFieldScene scene{{{1.0 + 1.7 * lambda, 1.0 + 0.013}}, lambda};
    const Field fld = gen_nearfield(scene, f, g, 0);
    const double ref = std::abs(fld.values[0]) * norm(g.point(std::size_t{0}) - scene.sources[0]);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double d = norm(g.point(i) - scene.sources[0]);
        EXPECT_NEAR(std::abs(fld.values[i]) * d / ref, 1.0, 1e-9);
        EXPECT_NEAR(std::abs(fld.values[i]), 1.0 / (4.0 * kPi * d), 1e-12);
    }
}

TEST(NearField, LinearityAndCoincidentSources) {
    const Grid g{32, 32, 2.0, 2.0};
    const double f = 250.0, lambda = kSpeedOfSound / f;
    const Vec2 a{1.0 + 1.3 * lambda, 1.0 + 0.01}, b{1.0 - 0.4 * lambda, 1.0 - 2.1 * lambda};
    const Field fa = gen_nearfield({{a}, lambda}, f, g, 0);
    const Field fb = gen_nearfield({{b}, lambda}, f, g, 0);
    const Field fab = gen_nearfield({{a, b}, lambda}, f, g, 0);
    const Field faa = gen_nearfield({{a, a}, lambda}, f, g, 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_LT(std::abs(fab.values[i] - (fa.values[i] + fb.values[i])), 1e-12);
        EXPECT_LT(std::abs(faa.values[i] - 2.0 * fa.values[i]), 1e-12);
    }
}

TEST(NearField, SingularityAndSceneValidation) {
    const Grid g{32, 32, 2.0, 2.0};
    const double lambda = 0.4, f = kSpeedOfSound / lambda;
    const std::size_t hit = g.index(31, 16);  // about 0.97 m from the center
    try {
        gen_nearfield({{g.point(hit)}, lambda}, f, g, 0);
        FAIL() << "coincident source accepted";
    } catch (const InvalidInput& e) {
        EXPECT_NE(std::string(e.what()).find("grid point " + std::to_string(hit)), std::string::npos) << e.what();
    }
    // Too close to the center, wrong wavelength, no sources, too many sources.
    EXPECT_THROW(gen_nearfield({{g.center() + Vec2{0.1, 0.0}}, lambda}, f, g, 0), InvalidInput);
    EXPECT_THROW(gen_nearfield({{g.center() + Vec2{0.61, 0.0}}, lambda}, 2.0 * f, g, 0), InvalidInput);
    EXPECT_THROW(gen_nearfield({{}, lambda}, f, g, 0), InvalidInput);
    EXPECT_THROW(gen_nearfield({std::vector<Vec2>(7, g.center() + Vec2{0.61, 0.0}), lambda}, f, g, 0), InvalidInput);
}

TEST(NearField, SampledScenesSatisfyInvariants) {
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        const double f = rng.uniform(30.0, 500.0);
        const NearFieldScene s = sample_nearfield_scene(rng, f, {1.0, 1.0});
        ASSERT_GE(s.sources.size(), 1u);
        ASSERT_LE(s.sources.size(), 6u);
        EXPECT_NEAR(s.wavelength, kSpeedOfSound / f, 1e-12);
        for (const auto& src : s.sources) {
            const double d = norm(src - Vec2{1.0, 1.0});
            EXPECT_GE(d, s.wavelength);
            EXPECT_LE(d, 3.0 * s.wavelength);
        }
    }
}

TEST(Ism, ReflectionCoefficient) {
    const RoomSpec r = test_room();
    const double alpha = 0.1611 * r.lx * r.ly / (2.0 * (r.lx + r.ly) * r.t60);
    EXPECT_NEAR(wall_reflection_coefficient(r), std::sqrt(1.0 - alpha), 1e-15);
    for (int t = 0; t < 100; ++t) {
        Rng rng(static_cast<std::uint64_t>(t));
        const double beta = wall_reflection_coefficient(sample_room(rng));
        EXPECT_GT(beta, 0.0);
        EXPECT_LT(beta, 1.0);
    }
}

TEST(Ism, OrderZeroIsFreeField) {
    const RoomSpec r = test_room();
    const Grid g = room_grid(r);
    const double f = 180.0;
    const Field ism = gen_ism_rtf(r, f, g, 0);
    const double k = wavenumber(f);
    for (std::size_t i = 0; i < g.size(); ++i)
        EXPECT_LT(std::abs(ism.values[i] - free_field_green(k, norm(g.point(i) - r.source))), 1e-12);
}

TEST(Ism, ZeroBetaRemovesImages) {
    const RoomSpec r = test_room();
    const Grid g = room_grid(r);
    const Field a = gen_ism_rtf(r, 240.0, g, 3, {.beta = 0.0});
    const Field b = gen_ism_rtf(r, 240.0, g, 0);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(a.values[i], b.values[i]);
}

TEST(Ism, MatchesBruteForceImages) {
    const RoomSpec r = test_room();
    const Grid g = room_grid(r);
    const double f = 310.0, k = wavenumber(f);
    const double beta = wall_reflection_coefficient(r);
    for (int order = 0; order <= 3; ++order) {
        const auto images = oracle::brute_force_images(r.lx, r.ly, r.source, order);
        EXPECT_EQ(images.size(), image_sources(r, order).size());
        const Field ism = gen_ism_rtf(r, f, g, order);
        for (std::size_t i = 0; i < g.size(); ++i) {
            Complex expect = 0.0;
            for (const auto& im : images)
                expect += std::pow(beta, im.order) * oracle::green(k, std::hypot(g.point(i).x - im.x, g.point(i).y - im.y));
            EXPECT_LT(std::abs(ism.values[i] - expect), 1e-12) << "order " << order << " point " << i;
        }
    }
}

TEST(Ism, AppendingOrdersAddsExactlyTheNewTerms) {
    const RoomSpec r = test_room();
    const Grid g = room_grid(r);
    const double f = 140.0, k = wavenumber(f);
    const double beta = wall_reflection_coefficient(r);
    const Field f2 = gen_ism_rtf(r, f, g, 2), f3 = gen_ism_rtf(r, f, g, 3);
    const auto images = oracle::brute_force_images(r.lx, r.ly, r.source, 3);
    for (std::size_t i = 0; i < g.size(); i += 37) {
        Complex added = 0.0;
        for (const auto& im : images)
            if (im.order == 3)
                added += std::pow(beta, 3) * oracle::green(k, std::hypot(g.point(i).x - im.x, g.point(i).y - im.y));
        EXPECT_LT(std::abs((f3.values[i] - f2.values[i]) - added), 1e-12);
    }
}

TEST(Ism, SourceOutsideRoomRejected) {
    RoomSpec r = test_room();
    r.source = {5.0, 1.0};
    EXPECT_THROW(gen_ism_rtf(r, 100.0, room_grid(r), 1), InvalidInput);
    EXPECT_THROW(gen_ism_rtf(test_room(), 100.0, room_grid(test_room()), -1), InvalidInput);
}

TEST(Modal, ModesAndShapes) {
    const auto modes = room_modes(4.0, 3.0, 100.0);
    ASSERT_FALSE(modes.empty());
    EXPECT_EQ(modes.front().nx, 0);
    EXPECT_EQ(modes.front().ny, 0);
    for (const auto& m : modes) {
        EXPECT_LE(m.freq_hz, 100.0);
        EXPECT_NEAR(m.freq_hz, 0.5 * kSpeedOfSound * std::hypot(m.nx / 4.0, m.ny / 3.0), 1e-12);
    }
    EXPECT_DOUBLE_EQ(mode_shape({1, 1, 0.0}, 4.0, 3.0, {0.0, 0.0}), 2.0);
    EXPECT_DOUBLE_EQ(mode_shape({0, 0, 0.0}, 4.0, 3.0, {1.3, 0.2}), 1.0);
    EXPECT_NEAR(modal_time_constant(0.4), 0.4 / (3.0 * std::log(10.0)), 1e-15);
}

TEST(Modal, Reciprocity) {
    const RoomSpec r = test_room();
    const auto modes = room_modes(r.lx, r.ly, 600.0);
    Rng rng(4);
    for (int t = 0; t < 50; ++t) {
        const Vec2 a{rng.uniform(0.1, r.lx - 0.1), rng.uniform(0.1, r.ly - 0.1)};
        const Vec2 b{rng.uniform(0.1, r.lx - 0.1), rng.uniform(0.1, r.ly - 0.1)};
        const double f = rng.uniform(30.0, 500.0);
        const Complex ab = mt_transfer(r, f, a, b, modes), ba = mt_transfer(r, f, b, a, modes);
        EXPECT_LE(std::abs(ab - ba), 1e-12 * std::max(1.0, std::abs(ab)));
    }
}

TEST(Modal, SingleModeAtResonance) {
    const RoomSpec r = test_room();
    const RoomMode mode{2, 1, 0.5 * kSpeedOfSound * std::hypot(2 / r.lx, 1 / r.ly)};
    const Vec2 rec{0.7, 1.9};
    const double w = 2.0 * kPi * mode.freq_hz;
    const double tau = modal_time_constant(r.t60);
    const double c = kSpeedOfSound;
    const Complex v = mt_transfer(r, mode.freq_hz, rec, r.source, {mode});
    const double psi = mode_shape(mode, r.lx, r.ly, rec) * mode_shape(mode, r.lx, r.ly, r.source);
    EXPECT_NEAR(std::abs(v), std::abs(psi) * tau / (r.lx * r.ly * w / (c * c)), 1e-12 * std::abs(v));
}

TEST(Modal, MatchesNaiveDoubleLoop) {
    const RoomSpec r = test_room();
    const Grid g = room_grid(r);
    for (double f : {47.0, 150.0, 433.0}) {
        const Field mt = gen_mt_rtf(r, f, g, 600.0);
        double scale = max_abs(mt.values);
        for (std::size_t i = 0; i < g.size(); i += 7) {
            const Complex expect = oracle::modal_sum(r.lx, r.ly, r.t60, f, g.point(i), r.source, 600.0);
            EXPECT_LE(std::abs(mt.values[i] - expect), 1e-12 * scale) << "f " << f << " point " << i;
        }
    }
}

TEST(Modal, Errors) {
    const RoomSpec r = test_room();
    EXPECT_THROW(gen_mt_rtf(r, 300.0, room_grid(r), 200.0), InvalidInput);
    EXPECT_THROW(gen_mt_rtf(r, 100.0, room_grid(r), 600.0, {.modes = std::vector<RoomMode>{}}), InvalidInput);
}

TEST(Rooms, SampledRoomsRespectRanges) {
    Rng rng(8);
    for (int t = 0; t < 500; ++t) {
        const RoomSpec r = sample_room(rng);
        EXPECT_GE(r.lx * r.ly, 12.0 - 1e-9);
        EXPECT_LE(r.lx * r.ly, 20.0 + 1e-9);
        EXPECT_GE(r.lx / r.ly, 0.6 - 1e-12);
        EXPECT_LE(r.lx / r.ly, 1.67 + 1e-12);
        EXPECT_GT(r.source.x, 0.0);
        EXPECT_LT(r.source.x, r.lx);
        EXPECT_GT(r.source.y, 0.0);
        EXPECT_LT(r.source.y, r.ly);
        EXPECT_DOUBLE_EQ(r.t60, 0.4);
    }
}

TEST(Standardize, TwoPointExample) {
    Field f;
    f.grid = {2, 1, 1.0, 1.0};
    f.values = {Complex(0.0, 0.0), Complex(0.0, 2.0)};
    const StandardizedField s = standardize(f);
    EXPECT_DOUBLE_EQ(s.magnitudes[0], -1.0);
    EXPECT_DOUBLE_EQ(s.magnitudes[1], 1.0);
    EXPECT_DOUBLE_EQ(s.mean, 1.0);
    EXPECT_DOUBLE_EQ(s.std, 1.0);
}

TEST(Standardize, ConstantFieldIsDegenerate) {
    Field f;
    f.grid = {2, 2, 1.0, 1.0};
    f.values.assign(4, Complex(0.3, 0.4));
    EXPECT_THROW(standardize(f), DegenerateField);
}

TEST(Standardize, MomentsAndRoundTrip) {
    const Grid g{32, 32, 2.0, 2.0};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Field f = gen_diffuse(seed, 90.0 + 20.0 * seed, g);
        const StandardizedField s = standardize(f);
        double m = 0.0, v = 0.0;
        for (double x : s.magnitudes) m += x;
        m /= s.magnitudes.size();
        for (double x : s.magnitudes) v += (x - m) * (x - m);
        v /= s.magnitudes.size();
        EXPECT_NEAR(m, 0.0, 1e-9);
        EXPECT_NEAR(std::sqrt(v), 1.0, 1e-9);
        const auto back = s.destandardize(s.magnitudes);
        const auto mags = f.magnitudes();
        for (std::size_t i = 0; i < mags.size(); ++i) EXPECT_NEAR(back[i], mags[i], 1e-12);
    }
}

TEST(Observations, ExhaustiveDrawAndDeterminism) {
    const Grid g{32, 32, 2.0, 2.0};
    const StandardizedField s = standardize(gen_diffuse(1, 100.0, g));
    const ObservationSet all = sample_observations(s, 1024, 5);
    std::set<std::size_t> idx;
    for (const auto& o : all.entries) idx.insert(o.index);
    EXPECT_EQ(idx.size(), 1024u);

    const ObservationSet a = sample_observations(s, 10, 42), b = sample_observations(s, 10, 42);
    ASSERT_EQ(a.size(), 10u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.entries[i].index, b.entries[i].index);
        EXPECT_EQ(a.entries[i].magnitude, s.magnitudes[a.entries[i].index]);
        EXPECT_EQ(a.entries[i].location, g.point(a.entries[i].index));
        EXPECT_EQ(a.entries[i].value, s.source.values[a.entries[i].index]);
    }
    EXPECT_THROW(sample_observations(s, 1025, 1), InvalidInput);
    EXPECT_THROW(sample_observations(s, 0, 1), InvalidInput);
}

TEST(Observations, SelectionIsUniform) {
    // 10 draws over 1e5 seeds; each cell is checked against a 4.5 sigma
    // binomial band (per-cell level chosen so 1024 cells stay below a 1%
    // family-wise false-alarm rate).
    const std::size_t n = 1024, seeds = 100000;
    std::vector<int> hits(n, 0);
    for (std::size_t s = 0; s < seeds; ++s)
        for (auto i : sample_indices(n, 10, s)) ++hits[i];
    const double p = 10.0 / n;
    const double mean = seeds * p, sd = std::sqrt(seeds * p * (1.0 - p));
    int outside_3sigma = 0;
    for (int h : hits) {
        EXPECT_LT(std::abs(h - mean), 4.5 * sd);
        if (std::abs(h - mean) > 3.0 * sd) ++outside_3sigma;
    }
    // About 2.8 cells of 1024 are expected beyond 3 sigma under uniformity.
    EXPECT_LE(outside_3sigma, 12);
}
