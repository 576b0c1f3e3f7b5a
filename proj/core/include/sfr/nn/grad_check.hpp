#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "sfr/nn/layers.hpp"

namespace sfr::nn {

struct GradCheckOptions {
    double step = 1e-5;
    double tolerance = 1e-4;
    /// Cap on checked entries per tensor (0 = all); a strided subset is used.
    std::size_t max_entries_per_tensor = 0;
};

struct GradCheckFailure {
    std::string name;
    Eigen::Index row = 0;
    Eigen::Index col = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst;
    std::size_t checked = 0;
    std::vector<GradCheckFailure> failures;
    bool passed() const { return failures.empty(); }
};

/// |a - n| / max(|a|, |n|, 1e-6)
double gradient_relative_error(double analytic, double numeric);

/// Compares reverse-mode gradients of the scalar `loss` with respect to each
/// input against central differences. `loss` must rebuild the graph on every
/// call from the current input values.
GradCheckReport grad_check(const std::function<Tensor()>& loss, std::vector<NamedParameter> inputs,
                           const GradCheckOptions& options = {});

}  // namespace sfr::nn
