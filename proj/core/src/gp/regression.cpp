#include "sfr/gp/regression.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "sfr/errors.hpp"
#include "sfr/gp/nelder_mead.hpp"

namespace sfr::gp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> pin_or_sample(const Prior& p, Rng& rng, std::size_t n) {
    std::vector<double> out(n);
    for (auto& v : out) v = is_degenerate(p) ? mode(p) : sample(p, rng);
    return out;
}

// Log prior density of log(x): the natural-scale density plus the Jacobian log x.
double prior_term(const Prior& p, double x) { return is_degenerate(p) ? 0.0 : log_density(p, x) + std::log(x); }

// Maps the free coordinates of a log-space parameter vector onto a full
// vector where pinned entries keep their fixed value.
struct ParamLayout {
    std::vector<double> fixed;  // full-length values (log space)
    std::vector<bool> free;

    std::vector<double> expand(std::span<const double> theta) const {
        std::vector<double> full = fixed;
        std::size_t t = 0;
        for (std::size_t i = 0; i < full.size(); ++i)
            if (free[i]) full[i] = theta[t++];
        return full;
    }
    std::vector<double> compress(std::span<const double> full) const {
        std::vector<double> theta;
        for (std::size_t i = 0; i < full.size(); ++i)
            if (free[i]) theta.push_back(full[i]);
        return theta;
    }
};

// ---- low-dimensional families: Nelder-Mead in log-hyperparameter space ----

struct LowDimModel {
    KernelFamily family;
    double k;
    const PriorConfig& priors;

    std::vector<const Prior*> prior_per_slot() const {
        std::vector<const Prior*> slots;
        switch (family) {
            case KernelFamily::RbfIso:
                slots = {&priors.alpha, &priors.rho};
                break;
            case KernelFamily::RbfAniso:
            case KernelFamily::RbfPeriodic:
                slots.push_back(&priors.alpha);
                for (int l = 0; l < priors.rbf_directions; ++l) slots.push_back(&priors.rho);
                break;
            case KernelFamily::PlaneWaveMulti:
            case KernelFamily::Bessel:
                slots = {&priors.sigma_w};
                break;
            default:
                throw InvalidInput("family is not fitted by the low-dimensional search");
        }
        slots.push_back(&priors.noise);
        return slots;
    }

    // Natural-scale parameters -> kernel spec (last entry is the noise variance).
    KernelSpec spec(std::span<const double> p) const {
        switch (family) {
            case KernelFamily::RbfIso:
                return RbfIso{p[0], p[1]};
            case KernelFamily::RbfAniso:
                return RbfAniso{p[0], {p.begin() + 1, p.end() - 1}, half_circle_directions(priors.rbf_directions)};
            case KernelFamily::RbfPeriodic:
                return RbfPeriodic{p[0], {p.begin() + 1, p.end() - 1}, half_circle_directions(priors.rbf_directions), k};
            case KernelFamily::PlaneWaveMulti: {
                const int l = priors.plane_wave_directions;
                return PlaneWaveMulti{p[0] / std::sqrt(static_cast<double>(l)), k, circle_directions(l)};
            }
            case KernelFamily::Bessel:
                return Bessel{p[0], k};
            default:
                throw InvalidInput("family is not fitted by the low-dimensional search");
        }
    }
};

GpFit fit_low_dim(std::span<const Vec2> locs, std::span<const Complex> values, KernelFamily family, double k,
                  const PriorConfig& priors, int restarts, std::uint64_t seed) {
    const LowDimModel model{family, k, priors};
    const auto slots = model.prior_per_slot();

    auto objective = [&](std::span<const double> natural) {
        for (double v : natural)
            if (!(v > 0.0) || !std::isfinite(v)) return kNegInf;
        const KernelSpec spec = model.spec(natural);
        double lp = 0.0;
        for (std::size_t i = 0; i < slots.size(); ++i) lp += prior_term(*slots[i], natural[i]);
        try {
            const double v = log_marginal_likelihood(spec, natural.back(), locs, values) + lp;
            return std::isfinite(v) ? v : kNegInf;
        } catch (const SingularSystem&) {
            return kNegInf;
        }
    };

    GpFit best;
    best.log_map = kNegInf;
    for (int r = 0; r < restarts; ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        ParamLayout layout;
        std::vector<double> start;
        for (const Prior* p : slots) {
            start.push_back(pin_or_sample(*p, rng, 1)[0]);
            layout.fixed.push_back(std::log(start.back()));
            layout.free.push_back(!is_degenerate(*p));
        }
        // Pinned entries keep their natural value so they come back bit-exact.
        auto to_natural = [&](std::span<const double> theta) {
            auto full = layout.expand(theta);
            for (std::size_t i = 0; i < full.size(); ++i) full[i] = layout.free[i] ? std::exp(full[i]) : start[i];
            return full;
        };
        NelderMeadOptions opts;
        opts.max_evaluations = priors.max_evaluations;
        const auto result = nelder_mead_maximize(
            [&](std::span<const double> theta) { return objective(to_natural(theta)); },
            layout.compress(layout.fixed), opts);
        if (!std::isfinite(result.value)) continue;
        if (result.value > best.log_map) {
            const auto natural = to_natural(result.point);
            best.spec = model.spec(natural);
            best.noise_variance = natural.back();
            best.log_map = result.value;
        }
    }
    if (!std::isfinite(best.log_map))
        throw OptimizationFailure("fit_map: every restart produced a non-finite objective");
    return best;
}

// ---- per-direction families: MAP expectation-maximization ----

struct PlaneWaveEm {
    Eigen::MatrixXcd phi;  // N x L, phi(i, l) = exp(-j k u_l . r_i)
    Eigen::VectorXcd u;
    bool hierarchical;
    double a;
    const PriorConfig& priors;

    double log_map(const Eigen::VectorXd& sigma, double b, double noise) const {
        const auto n = phi.rows();
        Eigen::MatrixXcd c = phi * sigma.array().square().matrix().cast<Complex>().asDiagonal() * phi.adjoint();
        c.diagonal().array() += noise;
        double ll;
        try {
            const FactorizedCovariance f(c);
            ll = -(u.adjoint() * f.solve(u))(0).real() - f.log_det() - static_cast<double>(n) * std::log(kPi);
        } catch (const SingularSystem&) {
            return kNegInf;
        }
        double lp = prior_term(priors.noise, noise);
        for (double s : sigma) lp += inverse_gamma_logpdf(s, a, b) + std::log(s);
        if (hierarchical) {
            const double z = (-std::log10(b) - priors.hier_mu_b) / priors.hier_sigma_b;
            lp += -0.5 * z * z - std::log(priors.hier_sigma_b) - 0.5 * std::log(2.0 * kPi);
        }
        const double v = ll + lp;
        return std::isfinite(v) ? v : kNegInf;
    }

    // Expected |w_l|^2 under the posterior of the plane-wave weights.
    Eigen::VectorXd second_moments(const Eigen::VectorXd& sigma, double noise) const {
        const Eigen::VectorXd gamma = sigma.array().square();
        Eigen::MatrixXcd c = phi * gamma.cast<Complex>().asDiagonal() * phi.adjoint();
        c.diagonal().array() += noise;
        const FactorizedCovariance f(c);
        const Eigen::VectorXcd alpha = f.solve(u);
        const Eigen::MatrixXcd cinv_phi = f.solve_matrix(phi);
        Eigen::VectorXd e(sigma.size());
        for (Eigen::Index l = 0; l < sigma.size(); ++l) {
            const Complex mu = gamma(l) * phi.col(l).dot(alpha);
            const double var = gamma(l) - gamma(l) * gamma(l) * phi.col(l).dot(cinv_phi.col(l)).real();
            e(l) = std::norm(mu) + std::max(var, 0.0);
        }
        return e;
    }

    // Maximizes sum_l log IG(sigma_l; 1, 10^-t) + log N(t; mu_b, sigma_b) over t.
    double update_b(const Eigen::VectorXd& sigma, double b) const {
        const double ln10 = std::log(10.0);
        const double l = static_cast<double>(sigma.size());
        const double s = sigma.cwiseInverse().sum();
        const double var = priors.hier_sigma_b * priors.hier_sigma_b;
        double t = -std::log10(b);
        for (int it = 0; it < 50; ++it) {
            const double g = -l * ln10 + ln10 * std::pow(10.0, -t) * s - (t - priors.hier_mu_b) / var;
            const double h = -ln10 * ln10 * std::pow(10.0, -t) * s - 1.0 / var;
            const double step = g / h;
            t -= step;
            if (std::abs(step) < 1e-13) break;
        }
        return std::pow(10.0, -t);
    }
};

// Golden-section maximization of a unimodal-ish 1-D function on [lo, hi].
double golden_max(const std::function<double(double)>& f, double lo, double hi, int iters) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters; ++i) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    return f1 > f2 ? x1 : x2;
}

GpFit fit_plane_wave_em(std::span<const Vec2> locs, std::span<const Complex> values, KernelFamily family, double k,
                        const PriorConfig& priors, int restarts, std::uint64_t seed) {
    const bool hier = family == KernelFamily::Hierarchical;
    const int l_count = priors.plane_wave_directions;
    const auto dirs = circle_directions(l_count);
    const auto n = static_cast<Eigen::Index>(locs.size());

    PlaneWaveEm em{Eigen::MatrixXcd(n, l_count), Eigen::VectorXcd(n), hier, hier ? 1.0 : priors.sparse_a, priors};
    for (Eigen::Index i = 0; i < n; ++i) {
        em.u(i) = values[static_cast<std::size_t>(i)];
        for (int l = 0; l < l_count; ++l)
            em.phi(i, l) = std::polar(1.0, -k * dot(dirs[static_cast<std::size_t>(l)], locs[static_cast<std::size_t>(i)]));
    }
    const double data_power = std::max(em.u.squaredNorm() / static_cast<double>(n), 1e-12);

    GpFit best;
    best.log_map = kNegInf;
    for (int r = 0; r < restarts; ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        double noise = pin_or_sample(priors.noise, rng, 1)[0];
        double b = hier ? std::pow(10.0, -(priors.hier_mu_b + priors.hier_sigma_b * rng.normal())) : priors.sparse_b;
        Eigen::VectorXd sigma(l_count);
        for (int l = 0; l < l_count; ++l) sigma(l) = std::sqrt(data_power / l_count * rng.uniform(0.5, 1.5));

        double current = em.log_map(sigma, b, noise);
        for (int it = 0; it < priors.em_iterations && std::isfinite(current); ++it) {
            Eigen::VectorXd next_sigma = sigma;
            double next_b = b;
            double next_noise = noise;
            try {
                const Eigen::VectorXd e = em.second_moments(sigma, noise);
                // argmax of -2 log s - e / s^2 - a log s - b / s
                const double a2 = em.a + 2.0;
                for (int l = 0; l < l_count; ++l)
                    next_sigma(l) = (b + std::sqrt(b * b + 8.0 * a2 * e(l))) / (2.0 * a2);
                if (hier) next_b = em.update_b(next_sigma, b);
            } catch (const SingularSystem&) {
                break;
            }
            if (!is_degenerate(priors.noise)) {
                const double log_n = golden_max(
                    [&](double x) { return em.log_map(next_sigma, next_b, std::exp(x)); }, std::log(noise) - 4.0,
                    std::log(noise) + 4.0, 40);
                if (em.log_map(next_sigma, next_b, std::exp(log_n)) > em.log_map(next_sigma, next_b, noise))
                    next_noise = std::exp(log_n);
            }
            const double candidate = em.log_map(next_sigma, next_b, next_noise);
            if (!(candidate >= current)) break;  // accept only non-decreasing steps
            const double gain = candidate - current;
            sigma = next_sigma;
            b = next_b;
            noise = next_noise;
            current = candidate;
            if (gain < 1e-10 * (1.0 + std::abs(current))) break;
        }
        if (std::isfinite(current) && current > best.log_map) {
            std::vector<double> s(sigma.data(), sigma.data() + sigma.size());
            if (hier)
                best.spec = Hierarchical{s, priors.hier_mu_b, priors.hier_sigma_b, b, k, dirs};
            else
                best.spec = PlaneWaveSparse{s, priors.sparse_a, priors.sparse_b, k, dirs};
            best.noise_variance = noise;
            best.log_map = current;
        }
    }
    if (!std::isfinite(best.log_map))
        throw OptimizationFailure("fit_map: every restart produced a non-finite objective");
    return best;
}

}  // namespace

FactorizedCovariance::FactorizedCovariance(Eigen::MatrixXcd cov) {
    const auto n = cov.rows();
    if (n == 0 || cov.cols() != n) throw InvalidInput("covariance must be square and non-empty");
    double base = 1e-10 * cov.diagonal().real().sum() / static_cast<double>(n);
    if (!(base > 0.0) || !std::isfinite(base)) base = 1e-300;
    double jitter = base;
    for (int attempt = 0; attempt <= 6; ++attempt, jitter *= 2.0) {
        Eigen::MatrixXcd m = cov;
        m.diagonal().array() += jitter;
        llt_.compute(m);
        if (llt_.info() == Eigen::Success && llt_.matrixLLT().diagonal().real().minCoeff() > 0.0) {
            jitter_ = jitter;
            return;
        }
    }
    double cond = std::numeric_limits<double>::infinity();
    if (cov.allFinite()) {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(cov, Eigen::EigenvaluesOnly);
        const auto ev = es.eigenvalues().cwiseAbs();
        if (ev.minCoeff() > 0.0) cond = ev.maxCoeff() / ev.minCoeff();
    }
    throw SingularSystem("covariance factorization failed after jitter escalation (condition estimate " +
                             std::to_string(cond) + ")",
                         cond);
}

double FactorizedCovariance::log_det() const {
    return 2.0 * llt_.matrixLLT().diagonal().real().array().log().sum();
}

double log_marginal_likelihood(const KernelSpec& spec, double noise_variance, std::span<const Vec2> locs,
                               std::span<const Complex> values) {
    if (locs.size() != values.size() || locs.empty()) throw InvalidInput("observation locations/values mismatch");
    Eigen::MatrixXcd c = gram(spec, locs);
    c.diagonal().array() += noise_variance;
    const FactorizedCovariance f(c);
    const Eigen::VectorXcd u = Eigen::Map<const Eigen::VectorXcd>(values.data(), static_cast<Eigen::Index>(values.size()));
    return -(u.adjoint() * f.solve(u))(0).real() - f.log_det() - static_cast<double>(u.size()) * std::log(kPi);
}

Prediction posterior_mean(std::span<const Vec2> obs_locs, std::span<const Complex> obs_values,
                          std::span<const Vec2> targets, const GpFit& fit) {
    if (obs_locs.empty()) throw InvalidInput("posterior_mean: no observations");
    if (obs_locs.size() != obs_values.size()) throw InvalidInput("posterior_mean: locations/values mismatch");
    if (!(fit.noise_variance >= 0.0)) throw InvalidInput("posterior_mean: noise variance must be >= 0");
    validate(fit.spec);
    Eigen::MatrixXcd c = gram(fit.spec, obs_locs);
    c.diagonal().array() += fit.noise_variance;
    const FactorizedCovariance f(c);
    const Eigen::VectorXcd u =
        Eigen::Map<const Eigen::VectorXcd>(obs_values.data(), static_cast<Eigen::Index>(obs_values.size()));
    const Eigen::VectorXcd weights = f.solve(u);
    const Eigen::VectorXcd mean = cross_covariance(fit.spec, targets, obs_locs) * weights;
    Prediction out;
    out.values.assign(mean.data(), mean.data() + mean.size());
    out.magnitudes.resize(out.values.size());
    for (std::size_t i = 0; i < out.values.size(); ++i) out.magnitudes[i] = std::abs(out.values[i]);
    return out;
}

Prediction posterior_mean(const sim::ObservationSet& obs, std::span<const Vec2> targets, const GpFit& fit) {
    const auto locs = obs.locations();
    const auto vals = obs.values();
    return posterior_mean(locs, vals, targets, fit);
}

GpFit fit_map(std::span<const Vec2> locs, std::span<const Complex> values, KernelFamily family, double k,
              const PriorConfig& priors, int restarts, std::uint64_t seed) {
    if (locs.size() < 2) throw InvalidInput("fit_map: at least 2 observations are required");
    if (locs.size() != values.size()) throw InvalidInput("fit_map: locations/values mismatch");
    if (restarts < 1) throw InvalidInput("fit_map: restarts must be >= 1");
    if (!(k > 0.0)) throw InvalidInput("fit_map: wavenumber must be positive");
    if (family == KernelFamily::PlaneWaveSparse || family == KernelFamily::Hierarchical)
        return fit_plane_wave_em(locs, values, family, k, priors, restarts, seed);
    return fit_low_dim(locs, values, family, k, priors, restarts, seed);
}

GpFit fit_map(const sim::ObservationSet& obs, KernelFamily family, double k, const PriorConfig& priors, int restarts,
              std::uint64_t seed) {
    const auto locs = obs.locations();
    const auto vals = obs.values();
    return fit_map(locs, vals, family, k, priors, restarts, seed);
}

}  // namespace sfr::gp
