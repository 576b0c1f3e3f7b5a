#include "sfr/gp/priors.hpp"

#include <cmath>
#include <limits>

#include "sfr/errors.hpp"
#include "sfr/geometry.hpp"

namespace sfr::gp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

}  // namespace

double inverse_gamma_logpdf(double x, double a, double b) {
    if (!(x > 0.0) || !(a > 0.0) || !(b > 0.0))
        throw DomainError("inverse_gamma_logpdf: x, a and b must be positive");
    return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

double log_density(const Prior& p, double x) {
    return std::visit(overloaded{
                          [x](const NormalPrior& n) {
                              const double z = (x - n.mean) / n.sd;
                              return -0.5 * z * z - std::log(n.sd) - 0.5 * std::log(2.0 * kPi);
                          },
                          [x](const InverseGammaPrior& g) {
                              if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
                              return inverse_gamma_logpdf(x, g.a, g.b);
                          },
                          [x](const LogNormalPrior& l) {
                              if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
                              const double z = (std::log(x) - std::log(l.median)) / l.log_sd;
                              return -0.5 * z * z - std::log(x * l.log_sd) - 0.5 * std::log(2.0 * kPi);
                          },
                      },
                      p);
}

double mode(const Prior& p) {
    return std::visit(overloaded{
                          [](const NormalPrior& n) { return n.mean; },
                          [](const InverseGammaPrior& g) { return g.b / (g.a + 1.0); },
                          [](const LogNormalPrior& l) { return l.median * std::exp(-l.log_sd * l.log_sd); },
                      },
                      p);
}

bool is_degenerate(const Prior& p) {
    return std::visit(overloaded{
                          [](const NormalPrior& n) { return n.sd == 0.0; },
                          [](const InverseGammaPrior&) { return false; },
                          [](const LogNormalPrior& l) { return l.log_sd == 0.0; },
                      },
                      p);
}

double sample(const Prior& p, Rng& rng) {
    return std::visit(overloaded{
                          [&](const NormalPrior& n) { return std::abs(n.mean + n.sd * rng.normal()); },
                          [&](const InverseGammaPrior& g) {
                              // b / Gamma(a, 1) with a Marsaglia-Tsang gamma draw.
                              double a = g.a;
                              double boost = 1.0;
                              if (a < 1.0) {
                                  boost = std::pow(rng.uniform() + 1e-300, 1.0 / a);
                                  a += 1.0;
                              }
                              const double d = a - 1.0 / 3.0;
                              const double c = 1.0 / std::sqrt(9.0 * d);
                              for (;;) {
                                  const double z = rng.normal();
                                  const double v = std::pow(1.0 + c * z, 3);
                                  if (v <= 0.0) continue;
                                  const double u = rng.uniform();
                                  if (std::log(u + 1e-300) < 0.5 * z * z + d - d * v + d * std::log(v))
                                      return g.b / (d * v * boost);
                              }
                          },
                          [&](const LogNormalPrior& l) { return l.median * std::exp(l.log_sd * rng.normal()); },
                      },
                      p);
}

}  // namespace sfr::gp
