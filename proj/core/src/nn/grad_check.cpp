#include "sfr/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace sfr::nn {

double gradient_relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const std::function<Tensor()>& loss, std::vector<NamedParameter> inputs,
                           const GradCheckOptions& options) {
    for (auto& in : inputs) in.tensor.zero_grad();
    loss().backward();
    std::vector<Matrix> analytic;
    for (const auto& in : inputs) analytic.push_back(in.tensor.grad());

    GradCheckReport report;
    NoGradGuard no_grad;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        Matrix& x = inputs[t].tensor.mutable_value();
        const Eigen::Index total = x.size();
        Eigen::Index stride = 1;
        if (options.max_entries_per_tensor > 0 && static_cast<std::size_t>(total) > options.max_entries_per_tensor)
            stride = (total + static_cast<Eigen::Index>(options.max_entries_per_tensor) - 1) /
                     static_cast<Eigen::Index>(options.max_entries_per_tensor);
        for (Eigen::Index flat = 0; flat < total; flat += stride) {
            const Eigen::Index r = flat / x.cols();
            const Eigen::Index c = flat % x.cols();
            const double saved = x(r, c);
            x(r, c) = saved + options.step;
            const double up = loss().item();
            x(r, c) = saved - options.step;
            const double down = loss().item();
            x(r, c) = saved;
            const double numeric = (up - down) / (2.0 * options.step);
            const double a = analytic[t](r, c);
            const double err = gradient_relative_error(a, numeric);
            ++report.checked;
            if (err > report.max_rel_error || std::isnan(err)) {
                report.max_rel_error = err;
                report.worst = inputs[t].name;
            }
            if (!(err < options.tolerance)) report.failures.push_back({inputs[t].name, r, c, a, numeric, err});
        }
    }
    return report;
}

}  // namespace sfr::nn
