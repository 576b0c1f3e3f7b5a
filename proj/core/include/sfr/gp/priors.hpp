#pragma once

#include <variant>

#include "sfr/rng.hpp"

namespace sfr::gp {

/// Gaussian on the positive parameter (folded at zero for draws).
struct NormalPrior {
    double mean = 0.0;
    double sd = 1.0;
};

struct InverseGammaPrior {
    double a = 1.0;  // shape
    double b = 1.0;  // scale
};

struct LogNormalPrior {
    double median = 1.0;
    double log_sd = 1.0;
};

using Prior = std::variant<NormalPrior, InverseGammaPrior, LogNormalPrior>;

/// log[b^a / Gamma(a) x^{-(a+1)} e^{-b/x}]; throws DomainError for non-positive inputs.
double inverse_gamma_logpdf(double x, double a, double b);

double log_density(const Prior& p, double x);
double mode(const Prior& p);
/// A zero-width prior pins its parameter to the mode.
bool is_degenerate(const Prior& p);
double sample(const Prior& p, Rng& rng);

}  // namespace sfr::gp
