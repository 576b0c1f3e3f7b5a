#pragma once

#include <span>
#include <string_view>

namespace sfr::eval {

/// Reported in place of -inf when the linear NMSE is exactly zero.
inline constexpr double kDbSentinel = -240.0;

enum class NmseVariant {
    PerPoint,  // mean over points of |t - p|^2 / |t|^2
    Vector,    // ||t - p||^2 / ||t||^2 over the whole field
};

std::string_view variant_name(NmseVariant v);
NmseVariant parse_variant(std::string_view name);

struct Nmse {
    double linear = 0.0;
    double db = 0.0;
};

double to_db(double linear);

/// Throws DomainError on a zero truth sample (per-point) or an all-zero
/// truth (vector), ShapeMismatch on length mismatch.
Nmse nmse(std::span<const double> truth, std::span<const double> pred, NmseVariant variant = NmseVariant::PerPoint);

/// (t.p)^2 / ((t.t)(p.p)); DomainError if either vector is zero.
double mac(std::span<const double> truth, std::span<const double> pred);

}  // namespace sfr::eval
