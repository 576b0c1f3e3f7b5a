#pragma once

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "sfr/geometry.hpp"

namespace sfr::gp {

using Complex = std::complex<double>;

struct RbfIso {
    double alpha = 1.0;
    double rho = 1.0;
};

struct RbfAniso {
    double alpha = 1.0;
    std::vector<double> rho;
    std::vector<Vec2> directions;
};

struct RbfPeriodic {
    double alpha = 1.0;
    std::vector<double> rho;
    std::vector<Vec2> directions;
    double k = 1.0;
};

/// sigma_w^2 sum_l exp(-j k u_l . delta): all directions share one weight variance.
struct PlaneWaveMulti {
    double sigma_w = 1.0;
    double k = 1.0;
    std::vector<Vec2> directions;
};

/// Per-direction weight deviations sigma_l with an inverse-gamma(a, b) prior.
struct PlaneWaveSparse {
    std::vector<double> sigma;
    double a = 1.0;
    double b = 1.0;
    double k = 1.0;
    std::vector<Vec2> directions;
};

/// Plane-wave kernel whose per-direction deviations follow inverse-gamma(1, b)
/// with b = 10^{-b_log}, b_log ~ N(mu_b, sigma_b).
struct Hierarchical {
    std::vector<double> sigma;
    double mu_b = 2.0;
    double sigma_b = 1.0;
    double b = 1e-2;
    double k = 1.0;
    std::vector<Vec2> directions;
};

struct Bessel {
    double sigma_w = 1.0;
    double k = 1.0;
};

using KernelSpec = std::variant<RbfIso, RbfAniso, RbfPeriodic, PlaneWaveMulti, PlaneWaveSparse, Hierarchical, Bessel>;

enum class KernelFamily { RbfIso, RbfAniso, RbfPeriodic, PlaneWaveMulti, PlaneWaveSparse, Hierarchical, Bessel };

KernelFamily family_of(const KernelSpec& spec);
std::string_view kernel_name(KernelFamily f);
KernelFamily parse_kernel(std::string_view name);

/// L unit vectors at angles 2 pi l / L (full circle, plane-wave kernels).
std::vector<Vec2> circle_directions(int count);
/// L unit vectors at angles pi l / L (half circle, RBF projections).
std::vector<Vec2> half_circle_directions(int count);

/// Throws InvalidInput when positivity, unit-norm or size invariants fail.
void validate(const KernelSpec& spec);

/// Kernel value at lag delta = r - r'.
Complex kernel_at(const KernelSpec& spec, Vec2 delta);

inline Complex kernel_eval(const KernelSpec& spec, Vec2 r, Vec2 rp) { return kernel_at(spec, r - rp); }

/// K[i][j] = kernel_eval(spec, locs[i], locs[j]).
Eigen::MatrixXcd gram(const KernelSpec& spec, std::span<const Vec2> locs);

/// C[t][i] = kernel_eval(spec, targets[t], locs[i]).
Eigen::MatrixXcd cross_covariance(const KernelSpec& spec, std::span<const Vec2> targets, std::span<const Vec2> locs);

}  // namespace sfr::gp
