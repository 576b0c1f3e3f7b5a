#include "sfr/gp/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sfr::gp {

NelderMeadResult nelder_mead_maximize(const std::function<double(std::span<const double>)>& f,
                                      std::vector<double> start, const NelderMeadOptions& opts) {
    const std::size_t n = start.size();
    int evals = 0;
    // Minimize the negated objective; NaN/-inf map to +inf.
    auto cost = [&](const std::vector<double>& x) {
        ++evals;
        const double v = f(x);
        return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
    };
    if (n == 0) {
        const double c = cost(start);
        return {start, -c, evals};
    }

    std::vector<std::vector<double>> simplex(n + 1, start);
    for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += opts.initial_step;
    std::vector<double> costs(n + 1);
    for (std::size_t i = 0; i <= n; ++i) costs[i] = cost(simplex[i]);

    std::vector<std::size_t> order(n + 1);
    auto blend = [&](const std::vector<double>& c, const std::vector<double>& x, double t) {
        std::vector<double> out(n);
        for (std::size_t d = 0; d < n; ++d) out[d] = c[d] + t * (x[d] - c[d]);
        return out;
    };

    while (evals < opts.max_evaluations) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return costs[a] < costs[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

        double spread = 0.0;
        for (std::size_t i = 1; i <= n; ++i)
            for (std::size_t d = 0; d < n; ++d)
                spread = std::max(spread, std::abs(simplex[order[i]][d] - simplex[best][d]));
        if (std::isfinite(costs[worst]) &&
            costs[worst] - costs[best] <= opts.f_tolerance * (1.0 + std::abs(costs[best])) &&
            spread <= opts.x_tolerance)
            break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[order[i]][d] / static_cast<double>(n);

        const auto reflected = blend(centroid, simplex[worst], -1.0);
        const double c_ref = cost(reflected);
        if (c_ref < costs[best]) {
            const auto expanded = blend(centroid, simplex[worst], -2.0);
            const double c_exp = cost(expanded);
            if (c_exp < c_ref) {
                simplex[worst] = expanded;
                costs[worst] = c_exp;
            } else {
                simplex[worst] = reflected;
                costs[worst] = c_ref;
            }
        } else if (c_ref < costs[second]) {
            simplex[worst] = reflected;
            costs[worst] = c_ref;
        } else {
            const bool outside = c_ref < costs[worst];
            const auto contracted = blend(centroid, outside ? reflected : simplex[worst], 0.5);
            const double c_con = cost(contracted);
            if (c_con < std::min(c_ref, costs[worst])) {
                simplex[worst] = contracted;
                costs[worst] = c_con;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    auto& x = simplex[order[i]];
                    x = blend(simplex[best], x, 0.5);
                    costs[order[i]] = cost(x);
                }
            }
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(costs.begin(), costs.end()) - costs.begin());
    return {simplex[best], -costs[best], evals};
}

}  // namespace sfr::gp
