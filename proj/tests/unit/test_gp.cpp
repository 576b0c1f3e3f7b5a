#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "oracles.hpp"
#include "sfr/errors.hpp"
#include "sfr/gp/kernels.hpp"
#include "sfr/gp/nelder_mead.hpp"
#include "sfr/gp/priors.hpp"
#include "sfr/gp/regression.hpp"
#include "sfr/rng.hpp"

using namespace sfr;
using namespace sfr::gp;

namespace {

constexpr double kJ0FirstZero = 2.404825557695772768621631879;

std::vector<Vec2> random_points(Rng& rng, int n, double extent = 2.0) {
    std::vector<Vec2> pts;
    for (int i = 0; i < n; ++i) pts.push_back({rng.uniform(0.0, extent), rng.uniform(0.0, extent)});
    return pts;
}

std::vector<Complex> random_values(Rng& rng, int n) {
    std::vector<Complex> v;
    for (int i = 0; i < n; ++i) v.emplace_back(rng.normal(), rng.normal());
    return v;
}

std::vector<KernelSpec> all_kernels(double k) {
    const auto dirs4 = half_circle_directions(4);
    const auto dirs16 = circle_directions(16);
    std::vector<double> sig(16);
    for (std::size_t l = 0; l < sig.size(); ++l) sig[l] = 0.1 + 0.05 * static_cast<double>(l);
    return {
        RbfIso{1.3, 0.4},
        RbfAniso{0.9, {0.3, 0.5, 0.7, 0.2}, dirs4},
        RbfPeriodic{1.1, {0.6, 0.8, 0.4, 0.9}, dirs4, k},
        PlaneWaveMulti{0.2, k, dirs16},
        PlaneWaveSparse{sig, 1.0, 0.01, k, dirs16},
        Hierarchical{sig, 2.0, 1.0, 0.01, k, dirs16},
        Bessel{0.8, k},
    };
}

double min_eigenvalue(const Eigen::MatrixXcd& k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(k, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace

TEST(Kernels, TrivialValues) {
    EXPECT_DOUBLE_EQ(kernel_at(RbfIso{1.7, 0.3}, {0, 0}).real(), 1.7 * 1.7);
    const double rho = 0.37;
    EXPECT_NEAR(kernel_at(RbfIso{1.0, rho}, {rho, rho}).real(), std::exp(-1.0), 1e-15);
    const auto pw = PlaneWaveMulti{0.3, 5.0, circle_directions(128)};
    EXPECT_NEAR(kernel_at(pw, {0, 0}).real(), 0.09 * 128, 1e-12);
    EXPECT_EQ(kernel_at(pw, {0, 0}).imag(), 0.0);
}

TEST(Kernels, BesselFirstZeroAgainstSeries) {
    EXPECT_NEAR(oracle::j0_series(kJ0FirstZero), 0.0, 1e-14);
    const double k = 3.0;
    const Complex v = kernel_at(Bessel{1.0, k}, {kJ0FirstZero / k, 0.0});
    EXPECT_NEAR(v.real(), 0.0, 1e-10);
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const Vec2 d{rng.uniform(-3, 3), rng.uniform(-3, 3)};
        EXPECT_NEAR(kernel_at(Bessel{1.0, k}, d).real(), oracle::j0_series(k * norm(d)), 1e-12);
    }
}

TEST(Kernels, ClosedFormsMatchDirectSums) {
    const double k = 2.0 * kPi * 200.0 / 343.0;
    Rng rng(8);
    for (int t = 0; t < 50; ++t) {
        const Vec2 d{rng.uniform(-2, 2), rng.uniform(-2, 2)};
        std::vector<double> var(16);
        for (auto& v : var) v = rng.uniform(0.01, 1.0);
        std::vector<double> sig(16);
        for (std::size_t l = 0; l < 16; ++l) sig[l] = std::sqrt(var[l]);
        const Complex got = kernel_at(PlaneWaveSparse{sig, 1.0, 1.0, k, circle_directions(16)}, d);
        const Complex want = oracle::plane_wave_sum(k, var, 16, d);
        EXPECT_NEAR(std::abs(got - want), 0.0, 1e-12);

        // Anisotropic RBF with one direction and rho_x = rho_y reduces to the isotropic kernel.
        const Complex iso = kernel_at(RbfIso{1.2, 0.5}, d);
        const Complex aniso = kernel_at(RbfAniso{1.2, {0.5, 0.5}, {{1, 0}, {0, 1}}}, d);
        EXPECT_NEAR(iso.real(), aniso.real(), 1e-14);
        EXPECT_EQ(aniso.imag(), 0.0);
    }
    // Periodic RBF is periodic along each direction with period 2 pi / k.
    const RbfPeriodic per{1.0, {0.4}, {{1, 0}}, k};
    const double period = 2.0 * kPi / k;
    EXPECT_NEAR(kernel_at(per, {0.3, 0.0}).real(), kernel_at(per, {0.3 + period, 0.0}).real(), 1e-12);
    EXPECT_NEAR(kernel_at(per, {period, 0.0}).real(), 1.0, 1e-12);
}

TEST(Kernels, PlaneWaveLimitIsBessel) {
    const auto dirs = circle_directions(2048);
    const PlaneWaveMulti pw{1.0, 1.0, dirs};
    for (double r = 0.0; r <= 20.0; r += 0.25)
        for (double ang : {0.0, 0.3, 1.1, 2.5}) {
            const Vec2 d{r * std::cos(ang), r * std::sin(ang)};
            EXPECT_NEAR(kernel_at(pw, d).real() / 2048.0, oracle::j0_series(r), 1e-3) << r;
        }
}

TEST(Kernels, HermitianStationaryAndPsd) {
    const double k = 2.0 * kPi * 307.0 / 343.0;
    Rng rng(13);
    for (const auto& spec : all_kernels(k)) {
        validate(spec);
        for (int trial = 0; trial < 10; ++trial) {
            const auto pts = random_points(rng, 12);
            const Eigen::MatrixXcd g = gram(spec, pts);
            EXPECT_LE((g - g.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
            const double n = static_cast<double>(pts.size());
            Eigen::MatrixXcd jittered = g;
            jittered.diagonal().array() += 1e-10 * g.trace().real() / n;
            EXPECT_GE(min_eigenvalue(jittered), -1e-8) << kernel_name(family_of(spec));

            // Translation by dyadic offsets keeps the coordinate differences exact.
            const Vec2 t{0.25 * rng.uniform_int(-8, 8), 0.125 * rng.uniform_int(-8, 8)};
            for (int i = 0; i < 4; ++i) {
                const Vec2 a{0.0625 * rng.uniform_int(0, 32), 0.0625 * rng.uniform_int(0, 32)};
                const Vec2 b{0.0625 * rng.uniform_int(0, 32), 0.0625 * rng.uniform_int(0, 32)};
                EXPECT_EQ(kernel_eval(spec, a + t, b + t), kernel_eval(spec, a, b));
                EXPECT_EQ(kernel_eval(spec, a, b), std::conj(kernel_eval(spec, b, a)));
            }
        }
    }
}

TEST(Kernels, BesselGramIsPsdWithoutJitter) {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const auto pts = random_points(rng, 10);
        EXPECT_GE(min_eigenvalue(gram(Bessel{1.0, 5.0}, pts)), -1e-8);
    }
}

TEST(Kernels, GramStructure) {
    const KernelSpec spec = Bessel{1.0, 4.0};
    const std::vector<Vec2> one{{0.3, 0.4}};
    const auto g1 = gram(spec, one);
    ASSERT_EQ(g1.rows(), 1);
    EXPECT_EQ(g1(0, 0), kernel_eval(spec, one[0], one[0]));

    Rng rng(2);
    const auto pts = random_points(rng, 7);
    std::vector<std::size_t> perm{3, 0, 6, 1, 5, 2, 4};
    std::vector<Vec2> permuted;
    for (auto i : perm) permuted.push_back(pts[i]);
    const auto g = gram(PlaneWaveMulti{0.5, 4.0, circle_directions(32)}, pts);
    const auto gp = gram(PlaneWaveMulti{0.5, 4.0, circle_directions(32)}, permuted);
    for (std::size_t i = 0; i < perm.size(); ++i)
        for (std::size_t j = 0; j < perm.size(); ++j)
            EXPECT_EQ(gp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                      g(static_cast<Eigen::Index>(perm[i]), static_cast<Eigen::Index>(perm[j])));
}

TEST(Kernels, ValidationAndNames) {
    EXPECT_THROW(validate(RbfIso{0.0, 1.0}), InvalidInput);
    EXPECT_THROW(validate(RbfIso{1.0, -1.0}), InvalidInput);
    EXPECT_THROW(validate(RbfAniso{1.0, {1.0}, {{2.0, 0.0}}}), InvalidInput);
    EXPECT_THROW(validate(RbfAniso{1.0, {1.0, 1.0}, {{1.0, 0.0}}}), InvalidInput);
    EXPECT_THROW(validate(PlaneWaveMulti{1.0, 1.0, {}}), InvalidInput);
    EXPECT_THROW(validate(PlaneWaveSparse{{1.0}, 0.0, 1.0, 1.0, {{1.0, 0.0}}}), InvalidInput);
    EXPECT_THROW(validate(Bessel{1.0, 0.0}), InvalidInput);
    for (int i = 0; i <= static_cast<int>(KernelFamily::Bessel); ++i) {
        const auto f = static_cast<KernelFamily>(i);
        EXPECT_EQ(parse_kernel(kernel_name(f)), f);
    }
    EXPECT_THROW(parse_kernel("matern"), InvalidInput);
    for (const auto& u : circle_directions(7)) EXPECT_NEAR(norm(u), 1.0, 1e-15);
}

TEST(Priors, InverseGamma) {
    EXPECT_NEAR(inverse_gamma_logpdf(1.0, 1.0, 1.0), -1.0, 1e-15);
    for (auto [a, b] : {std::pair{1.0, 1.0}, {5.0, 5.0}, {2.5, 0.3}}) {
        // Substitute x = t / (1 - t) to map (0, inf) onto (0, 1).
        auto f = [&](double t) {
            if (t <= 0.0 || t >= 1.0) return 0.0;
            const double x = t / (1.0 - t);
            return std::exp(inverse_gamma_logpdf(x, a, b)) / ((1.0 - t) * (1.0 - t));
        };
        EXPECT_NEAR(oracle::simpson(f, 0.0, 1.0, 1e-10), 1.0, 1e-6) << a << " " << b;

        double best_x = 0.0, best = -1e300;
        for (double x = 1e-4; x < 5.0; x += 1e-4) {
            const double v = inverse_gamma_logpdf(x, a, b);
            if (v > best) best = v, best_x = x;
        }
        EXPECT_NEAR(best_x, b / (a + 1.0), 1e-4);
        EXPECT_DOUBLE_EQ(mode(InverseGammaPrior{a, b}), b / (a + 1.0));
    }
    EXPECT_THROW(inverse_gamma_logpdf(0.0, 1.0, 1.0), DomainError);
    EXPECT_THROW(inverse_gamma_logpdf(1.0, -1.0, 1.0), DomainError);
    EXPECT_THROW(inverse_gamma_logpdf(1.0, 1.0, 0.0), DomainError);
}

TEST(Priors, SamplesMatchDensity) {
    Rng rng(31);
    const InverseGammaPrior g{5.0, 5.0};
    double mean = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = sample(g, rng);
        ASSERT_GT(x, 0.0);
        mean += x / n;
    }
    EXPECT_NEAR(mean, 5.0 / 4.0, 0.01);  // b / (a - 1)
    const LogNormalPrior l{1e-2, 1.0};
    EXPECT_NEAR(mode(l), 1e-2 * std::exp(-1.0), 1e-17);
    EXPECT_TRUE(is_degenerate(NormalPrior{0.5, 0.0}));
    EXPECT_FALSE(is_degenerate(NormalPrior{0.5, 1.0}));
}

TEST(Regression, PosteriorMatchesDenseOracle) {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const auto obs = random_points(rng, 5);
        const auto u = random_values(rng, 5);
        const auto targets = random_points(rng, 3);
        const double noise = trial % 2 == 0 ? 1e-2 : 0.0;
        const Bessel spec{1.0, rng.uniform(1.0, 8.0)};
        GpFit fit;
        fit.spec = spec;
        fit.noise_variance = noise;
        const auto pred = posterior_mean(obs, u, targets, fit);
        const auto want = oracle::dense_posterior([&](Vec2 a, Vec2 b) { return kernel_eval(spec, a, b); }, obs,
                                                  u, targets, noise);
        for (std::size_t t = 0; t < targets.size(); ++t) {
            EXPECT_NEAR(std::abs(pred.values[t] - want[t]), 0.0, 1e-9);
            EXPECT_DOUBLE_EQ(pred.magnitudes[t], std::abs(pred.values[t]));
        }
    }
}

TEST(Regression, NoiselessInterpolationAndLinearity) {
    Rng rng(23);
    const auto obs = random_points(rng, 8);
    const auto u1 = random_values(rng, 8);
    const auto u2 = random_values(rng, 8);
    for (const auto& spec : all_kernels(6.0)) {
        GpFit fit;
        fit.spec = spec;
        if (family_of(spec) == KernelFamily::PlaneWaveMulti || family_of(spec) == KernelFamily::PlaneWaveSparse ||
            family_of(spec) == KernelFamily::Hierarchical)
            continue;  // 16 directions give a rank-16 Gram; covered by the Bessel / RBF cases
        const auto p = posterior_mean(obs, u1, obs, fit);
        for (std::size_t i = 0; i < obs.size(); ++i)
            EXPECT_NEAR(std::abs(p.values[i] - u1[i]), 0.0, 1e-9) << kernel_name(family_of(spec));

        std::vector<Complex> sum(8);
        for (std::size_t i = 0; i < 8; ++i) sum[i] = u1[i] + u2[i];
        const auto targets = random_points(rng, 6);
        fit.noise_variance = 0.05;
        const auto a = posterior_mean(obs, u1, targets, fit);
        const auto b = posterior_mean(obs, u2, targets, fit);
        const auto s = posterior_mean(obs, sum, targets, fit);
        const auto z = posterior_mean(obs, std::vector<Complex>(8), targets, fit);
        for (std::size_t t = 0; t < targets.size(); ++t) {
            EXPECT_NEAR(std::abs(s.values[t] - a.values[t] - b.values[t]), 0.0, 1e-10);
            EXPECT_EQ(z.values[t], Complex(0.0, 0.0));
        }
    }
}

TEST(Regression, JitterAndSingularity) {
    Eigen::MatrixXcd ones = Eigen::MatrixXcd::Ones(3, 3);
    const FactorizedCovariance f(ones);
    EXPECT_NEAR(f.jitter(), 1e-10, 1e-22);
    Eigen::MatrixXcd bad = Eigen::MatrixXcd::Zero(2, 2);
    bad(0, 1) = bad(1, 0) = 1.0;
    try {
        FactorizedCovariance g(bad);
        FAIL() << "expected SingularSystem";
    } catch (const SingularSystem& e) {
        EXPECT_NE(std::string(e.what()).find("condition"), std::string::npos) << e.what();
    }
}

TEST(Regression, LogMarginalLikelihoodClosedForm) {
    // Single observation: -|u|^2 / c - log c - log pi with c = kappa(0) + noise (+ jitter).
    const std::vector<Vec2> loc{{0.1, 0.2}};
    const std::vector<Complex> val{{0.6, -0.8}};
    const double c = 2.0 * 2.0 + 0.5;
    const double cj = c * (1.0 + 1e-10);
    EXPECT_NEAR(log_marginal_likelihood(RbfIso{2.0, 0.3}, 0.5, loc, val), -1.0 / cj - std::log(cj) - std::log(kPi),
                1e-12);
}

TEST(Regression, NelderMeadFindsQuadraticMaximum) {
    const auto r = nelder_mead_maximize(
        [](std::span<const double> x) { return -(x[0] - 1.0) * (x[0] - 1.0) - 3.0 * (x[1] + 2.0) * (x[1] + 2.0); },
        {0.0, 0.0});
    EXPECT_NEAR(r.point[0], 1.0, 1e-4);
    EXPECT_NEAR(r.point[1], -2.0, 1e-4);
    // Non-finite regions never win over the start.
    const auto n = nelder_mead_maximize(
        [](std::span<const double> x) { return x[0] > 0.1 ? std::nan("") : -x[0] * x[0]; }, {0.05});
    EXPECT_TRUE(std::isfinite(n.value));
    EXPECT_GE(n.value, -0.05 * 0.05);
}

TEST(Regression, RestartsAreMonotoneAndDeterministic) {
    Rng rng(41);
    const auto obs = random_points(rng, 10);
    const auto u = random_values(rng, 10);
    const double k = 2.0 * kPi * 150.0 / 343.0;
    const PriorConfig priors;
    for (auto fam : {KernelFamily::RbfIso, KernelFamily::Bessel, KernelFamily::RbfAniso, KernelFamily::Hierarchical,
                     KernelFamily::PlaneWaveSparse}) {
        const GpFit one = fit_map(obs, u, fam, k, priors, 1, 77);
        const GpFit eight = fit_map(obs, u, fam, k, priors, 8, 77);
        const GpFit again = fit_map(obs, u, fam, k, priors, 8, 77);
        EXPECT_GE(eight.log_map, one.log_map - 1e-12) << kernel_name(fam);
        EXPECT_EQ(eight.log_map, again.log_map);
        EXPECT_EQ(eight.noise_variance, again.noise_variance);
        EXPECT_GE(eight.noise_variance, 0.0);
        EXPECT_EQ(family_of(eight.spec), fam);
        validate(eight.spec);
    }
}

TEST(Regression, PinnedPriorsReturnTheMode) {
    Rng rng(43);
    const auto obs = random_points(rng, 6);
    const auto u = random_values(rng, 6);
    PriorConfig priors;
    priors.sigma_w = NormalPrior{0.7, 0.0};
    priors.noise = LogNormalPrior{0.03, 0.0};
    const GpFit fit = fit_map(obs, u, KernelFamily::Bessel, 3.0, priors, 3, 1);
    EXPECT_EQ(std::get<Bessel>(fit.spec).sigma_w, 0.7);
    EXPECT_EQ(fit.noise_variance, 0.03);

    priors.alpha = NormalPrior{1.25, 0.0};
    const GpFit iso = fit_map(obs, u, KernelFamily::RbfIso, 3.0, priors, 3, 1);
    EXPECT_EQ(std::get<RbfIso>(iso.spec).alpha, 1.25);
    EXPECT_EQ(iso.noise_variance, 0.03);
}

TEST(Regression, RecoversRbfLengthScale) {
    const double rho = 0.3;
    const RbfIso truth{1.0, rho};
    Rng rng(47);
    const auto pts = random_points(rng, 200);
    Eigen::MatrixXcd g = gram(truth, pts);
    g.diagonal().array() += 1e-6;
    const Eigen::LLT<Eigen::MatrixXcd> llt(g);
    ASSERT_EQ(llt.info(), Eigen::Success);
    Eigen::VectorXcd w(200);
    for (int i = 0; i < 200; ++i) w(i) = Complex(rng.normal(), rng.normal()) / std::sqrt(2.0);
    const Eigen::VectorXcd draw = llt.matrixL() * w;
    std::vector<Complex> u(draw.data(), draw.data() + draw.size());

    PriorConfig priors;
    priors.alpha = NormalPrior{1.0, 0.05};
    priors.noise = LogNormalPrior{1e-6, 0.0};
    priors.rho = InverseGammaPrior{1.0, 0.1};
    const GpFit fit = fit_map(pts, u, KernelFamily::RbfIso, 1.0, priors, 4, 9);
    EXPECT_NEAR(std::get<RbfIso>(fit.spec).rho, rho, 0.2 * rho);
}

TEST(Regression, InputValidation) {
    const std::vector<Vec2> one{{0, 0}};
    const std::vector<Complex> v{{1, 0}};
    EXPECT_THROW(fit_map(one, v, KernelFamily::Bessel, 1.0, PriorConfig{}, 2, 0), InvalidInput);
    const std::vector<Vec2> two{{0, 0}, {1, 0}};
    const std::vector<Complex> v2{{1, 0}, {0, 1}};
    EXPECT_THROW(fit_map(two, v2, KernelFamily::Bessel, 1.0, PriorConfig{}, 0, 0), InvalidInput);
}
