#include "sfr/eval/metrics.hpp"

#include <cmath>
#include <string>

#include "sfr/errors.hpp"

namespace sfr::eval {

std::string_view variant_name(NmseVariant v) { return v == NmseVariant::PerPoint ? "point" : "vector"; }

NmseVariant parse_variant(std::string_view name) {
    if (name == "point") return NmseVariant::PerPoint;
    if (name == "vector") return NmseVariant::Vector;
    throw InvalidInput("unknown NMSE variant '" + std::string(name) + "' (expected point or vector)");
}

double to_db(double linear) {
    if (linear < 0.0 || std::isnan(linear)) throw DomainError("NMSE must be non-negative");
    if (linear == 0.0) return kDbSentinel;
    return 10.0 * std::log10(linear);
}

Nmse nmse(std::span<const double> truth, std::span<const double> pred, NmseVariant variant) {
    if (truth.size() != pred.size()) throw ShapeMismatch("nmse: truth and prediction lengths differ");
    if (truth.empty()) throw InvalidInput("nmse: empty input");
    double linear = 0.0;
    if (variant == NmseVariant::PerPoint) {
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (truth[i] == 0.0) throw DomainError("nmse: truth sample " + std::to_string(i) + " is exactly zero");
            const double e = truth[i] - pred[i];
            linear += (e * e) / (truth[i] * truth[i]);
        }
        linear /= static_cast<double>(truth.size());
    } else {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const double e = truth[i] - pred[i];
            num += e * e;
            den += truth[i] * truth[i];
        }
        if (den == 0.0) throw DomainError("nmse: truth is identically zero");
        linear = num / den;
    }
    return {linear, to_db(linear)};
}

double mac(std::span<const double> truth, std::span<const double> pred) {
    if (truth.size() != pred.size()) throw ShapeMismatch("mac: truth and prediction lengths differ");
    double tp = 0.0, tt = 0.0, pp = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        tp += truth[i] * pred[i];
        tt += truth[i] * truth[i];
        pp += pred[i] * pred[i];
    }
    if (tt == 0.0 || pp == 0.0) throw DomainError("mac: zero vector");
    return (tp * tp) / (tt * pp);
}

}  // namespace sfr::eval
