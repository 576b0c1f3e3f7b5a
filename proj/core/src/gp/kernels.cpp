#include "sfr/gp/kernels.hpp"

#include <cmath>
#include <string>

#include "sfr/errors.hpp"

namespace sfr::gp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void require(bool ok, const char* what) {
    if (!ok) throw InvalidInput(std::string("kernel spec: ") + what);
}

void check_positive(std::span<const double> v, const char* what) {
    for (double x : v) require(x > 0.0 && std::isfinite(x), what);
}

void check_directions(std::span<const Vec2> dirs) {
    require(!dirs.empty(), "at least one direction is required");
    for (const auto& u : dirs) require(std::abs(norm(u) - 1.0) < 1e-12, "directions must be unit vectors");
}

Complex plane_wave_sum(std::span<const Vec2> dirs, double k, Vec2 delta, auto&& weight) {
    Complex acc{0.0, 0.0};
    for (std::size_t l = 0; l < dirs.size(); ++l) acc += weight(l) * std::polar(1.0, -k * dot(dirs[l], delta));
    return acc;
}

}  // namespace

KernelFamily family_of(const KernelSpec& spec) { return static_cast<KernelFamily>(spec.index()); }

std::string_view kernel_name(KernelFamily f) {
    switch (f) {
        case KernelFamily::RbfIso: return "rbf-iso";
        case KernelFamily::RbfAniso: return "rbf-aniso";
        case KernelFamily::RbfPeriodic: return "rbf-per";
        case KernelFamily::PlaneWaveMulti: return "plane-wave";
        case KernelFamily::PlaneWaveSparse: return "sparse";
        case KernelFamily::Hierarchical: return "hier";
        case KernelFamily::Bessel: return "bessel";
    }
    return "unknown";
}

KernelFamily parse_kernel(std::string_view name) {
    for (int i = 0; i <= static_cast<int>(KernelFamily::Bessel); ++i)
        if (kernel_name(static_cast<KernelFamily>(i)) == name) return static_cast<KernelFamily>(i);
    throw InvalidInput("unknown kernel '" + std::string(name) + "'");
}

std::vector<Vec2> circle_directions(int count) {
    std::vector<Vec2> dirs;
    for (int l = 0; l < count; ++l) {
        const double phi = 2.0 * kPi * l / count;
        dirs.push_back({std::cos(phi), std::sin(phi)});
    }
    return dirs;
}

std::vector<Vec2> half_circle_directions(int count) {
    std::vector<Vec2> dirs;
    for (int l = 0; l < count; ++l) {
        const double phi = kPi * l / count;
        dirs.push_back({std::cos(phi), std::sin(phi)});
    }
    return dirs;
}

void validate(const KernelSpec& spec) {
    std::visit(overloaded{
                   [](const RbfIso& s) {
                       require(s.alpha > 0.0, "alpha must be > 0");
                       require(s.rho > 0.0, "rho must be > 0");
                   },
                   [](const RbfAniso& s) {
                       require(s.alpha > 0.0, "alpha must be > 0");
                       require(s.rho.size() == s.directions.size(), "one rho per direction");
                       check_positive(s.rho, "rho_l must be > 0");
                       check_directions(s.directions);
                   },
                   [](const RbfPeriodic& s) {
                       require(s.alpha > 0.0, "alpha must be > 0");
                       require(s.rho.size() == s.directions.size(), "one rho per direction");
                       check_positive(s.rho, "rho_l must be > 0");
                       check_directions(s.directions);
                       require(s.k > 0.0, "k must be > 0");
                   },
                   [](const PlaneWaveMulti& s) {
                       require(s.sigma_w > 0.0, "sigma_w must be > 0");
                       require(s.k > 0.0, "k must be > 0");
                       check_directions(s.directions);
                   },
                   [](const PlaneWaveSparse& s) {
                       require(s.sigma.size() == s.directions.size(), "one sigma per direction");
                       check_positive(s.sigma, "sigma_l must be > 0");
                       require(s.a > 0.0 && s.b > 0.0, "inverse-gamma a, b must be > 0");
                       require(s.k > 0.0, "k must be > 0");
                       check_directions(s.directions);
                   },
                   [](const Hierarchical& s) {
                       require(s.sigma.size() == s.directions.size(), "one sigma per direction");
                       check_positive(s.sigma, "sigma_h must be > 0");
                       require(s.sigma_b > 0.0 && s.b > 0.0, "hierarchical b, sigma_b must be > 0");
                       require(s.k > 0.0, "k must be > 0");
                       check_directions(s.directions);
                   },
                   [](const Bessel& s) {
                       require(s.sigma_w > 0.0, "sigma_w must be > 0");
                       require(s.k > 0.0, "k must be > 0");
                   },
               },
               spec);
}

Complex kernel_at(const KernelSpec& spec, Vec2 delta) {
    return std::visit(
        overloaded{
            [&](const RbfIso& s) -> Complex {
                return s.alpha * s.alpha * std::exp(-squared_norm(delta) / (2.0 * s.rho * s.rho));
            },
            [&](const RbfAniso& s) -> Complex {
                double e = 0.0;
                for (std::size_t l = 0; l < s.rho.size(); ++l) {
                    const double p = dot(s.directions[l], delta);
                    e += p * p / (s.rho[l] * s.rho[l]);
                }
                return s.alpha * s.alpha * std::exp(-0.5 * e);
            },
            [&](const RbfPeriodic& s) -> Complex {
                double e = 0.0;
                for (std::size_t l = 0; l < s.rho.size(); ++l) {
                    const double sn = std::sin(0.5 * s.k * std::abs(dot(s.directions[l], delta)));
                    e += sn * sn / (2.0 * s.rho[l] * s.rho[l]);
                }
                return s.alpha * s.alpha * std::exp(-e);
            },
            [&](const PlaneWaveMulti& s) -> Complex {
                return s.sigma_w * s.sigma_w * plane_wave_sum(s.directions, s.k, delta, [](std::size_t) { return 1.0; });
            },
            [&](const PlaneWaveSparse& s) -> Complex {
                return plane_wave_sum(s.directions, s.k, delta, [&](std::size_t l) { return s.sigma[l] * s.sigma[l]; });
            },
            [&](const Hierarchical& s) -> Complex {
                return plane_wave_sum(s.directions, s.k, delta, [&](std::size_t l) { return s.sigma[l] * s.sigma[l]; });
            },
            [&](const Bessel& s) -> Complex {
                return s.sigma_w * s.sigma_w * std::cyl_bessel_j(0.0, s.k * norm(delta));
            },
        },
        spec);
}

Eigen::MatrixXcd gram(const KernelSpec& spec, std::span<const Vec2> locs) {
    const auto n = static_cast<Eigen::Index>(locs.size());
    Eigen::MatrixXcd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = kernel_at(spec, locs[i] - locs[i]);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            k(i, j) = kernel_at(spec, locs[i] - locs[j]);
            k(j, i) = std::conj(k(i, j));
        }
    }
    return k;
}

Eigen::MatrixXcd cross_covariance(const KernelSpec& spec, std::span<const Vec2> targets, std::span<const Vec2> locs) {
    Eigen::MatrixXcd c(static_cast<Eigen::Index>(targets.size()), static_cast<Eigen::Index>(locs.size()));
    for (std::size_t t = 0; t < targets.size(); ++t)
        for (std::size_t i = 0; i < locs.size(); ++i)
            c(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = kernel_at(spec, targets[t] - locs[i]);
    return c;
}

}  // namespace sfr::gp
