#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace rlsac {

/// Compares an analytic gradient against central finite differences.
///
/// `value_fn` evaluates the scalar function at a flat parameter vector;
/// `grad_fn` returns the analytic gradient at the same point. Returns the
/// maximum over coordinates of
///   |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
inline double gradient_check(const std::function<double(const std::vector<double>&)>& value_fn,
                             const std::function<std::vector<double>(const std::vector<double>&)>& grad_fn,
                             const std::vector<double>& at, double step) {
    const std::vector<double> analytic = grad_fn(at);
    double worst = 0.0;
    std::vector<double> probe = at;
    for (std::size_t i = 0; i < at.size(); ++i) {
        probe[i] = at[i] + step;
        const double up = value_fn(probe);
        probe[i] = at[i] - step;
        const double down = value_fn(probe);
        probe[i] = at[i];
        const double numeric = (up - down) / (2.0 * step);
        const double err =
            std::abs(analytic[i] - numeric) / std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace rlsac
