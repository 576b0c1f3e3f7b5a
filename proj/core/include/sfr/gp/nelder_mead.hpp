#pragma once

#include <functional>
#include <span>
#include <vector>

namespace sfr::gp {

struct NelderMeadOptions {
    int max_evaluations = 4000;
    double initial_step = 0.5;
    double f_tolerance = 1e-10;
    double x_tolerance = 1e-8;
};

struct NelderMeadResult {
    std::vector<double> point;
    double value = 0.0;
    int evaluations = 0;
};

/// Derivative-free maximization. Non-finite objective values rank below every
/// finite value. The returned value never falls below f(start).
NelderMeadResult nelder_mead_maximize(const std::function<double(std::span<const double>)>& f,
                                      std::vector<double> start, const NelderMeadOptions& opts = {});

}  // namespace sfr::gp
