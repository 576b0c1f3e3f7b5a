#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sfr/gp/kernels.hpp"
#include "sfr/gp/priors.hpp"
#include "sfr/sim/field.hpp"

namespace sfr::gp {

struct GpFit {
    KernelSpec spec = Bessel{};
    double noise_variance = 0.0;
    double log_map = 0.0;  // log marginal likelihood + log prior at the fit
};

struct Prediction {
    std::vector<Complex> values;
    std::vector<double> magnitudes;
};

/// Jitter 1e-10 * trace(K) / N on the diagonal, doubled up to 6 times on
/// factorization failure; SingularSystem reports the condition estimate.
class FactorizedCovariance {
public:
    explicit FactorizedCovariance(Eigen::MatrixXcd cov);
    Eigen::VectorXcd solve(const Eigen::VectorXcd& rhs) const { return llt_.solve(rhs); }
    Eigen::MatrixXcd solve_matrix(const Eigen::MatrixXcd& rhs) const { return llt_.solve(rhs); }
    /// log det of the (jittered) matrix.
    double log_det() const;
    double jitter() const { return jitter_; }

private:
    Eigen::LLT<Eigen::MatrixXcd> llt_;
    double jitter_ = 0.0;
};

/// Posterior mean kappa^H (K + Sigma)^{-1} u at each target; Sigma = noise I.
Prediction posterior_mean(std::span<const Vec2> obs_locs, std::span<const Complex> obs_values,
                          std::span<const Vec2> targets, const GpFit& fit);

Prediction posterior_mean(const sim::ObservationSet& obs, std::span<const Vec2> targets, const GpFit& fit);

/// Complex circular Gaussian log marginal likelihood
/// -u^H C^{-1} u - log det C - N log pi with C = K + noise I.
double log_marginal_likelihood(const KernelSpec& spec, double noise_variance, std::span<const Vec2> locs,
                               std::span<const Complex> values);

struct PriorConfig {
    Prior alpha = NormalPrior{0.0, 1.0};              // RBF scale
    Prior rho = InverseGammaPrior{5.0, 5.0};          // RBF length scales
    Prior sigma_w = NormalPrior{0.0, 1.0};            // Bessel / plane-wave total deviation
    Prior noise = LogNormalPrior{1e-2, 1.0};          // noise variance
    double sparse_a = 1.0;
    double sparse_b = 1e-2;
    double hier_mu_b = 2.0;
    double hier_sigma_b = 1.0;
    int plane_wave_directions = 128;
    int rbf_directions = 4;
    int max_evaluations = 4000;  // per restart, Nelder-Mead
    int em_iterations = 200;     // per restart, per-direction families
};

/// MAP hyperparameters for `family` at wavenumber k, best of `restarts`
/// starts drawn from the priors. Restart i depends only on (seed, i).
GpFit fit_map(std::span<const Vec2> locs, std::span<const Complex> values, KernelFamily family, double k,
              const PriorConfig& priors, int restarts, std::uint64_t seed);

GpFit fit_map(const sim::ObservationSet& obs, KernelFamily family, double k, const PriorConfig& priors,
              int restarts, std::uint64_t seed);

}  // namespace sfr::gp
