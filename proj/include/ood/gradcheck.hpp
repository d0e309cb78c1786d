#pragma once

#include <algorithm>
#include <cmath>

#include "ood/params.hpp"

namespace ood {

// Central finite-difference check of analytic gradients, 64-bit mode.
// `f(store, with_grad)` returns the scalar loss; when with_grad it must also
// accumulate gradients into the store (which is zeroed here first).
// Returns the max relative error over every parameter coordinate, with
// denominator max(|analytic|, |numeric|, 1e-6). The floor sits above the
// central-difference noise floor (~1e-10 at eps = 1e-5), so coordinates whose
// true gradient is essentially zero do not register spurious error.
template <typename F>
double finite_diff_check(F&& f, ParamStore<double>& params, double eps = 1e-5) {
    params.zero_grad();
    double base = f(params, true);
    require(std::isfinite(base), "finite_diff_check: non-finite loss");

    // snapshot analytic grads; f(·, false) below may clobber them
    std::vector<Tensor<double>> analytic;
    analytic.reserve(params.entries.size());
    for (const auto& e : params.entries) analytic.push_back(e.grad);

    double max_rel = 0.0;
    for (std::size_t i = 0; i < params.entries.size(); ++i) {
        auto& val = params.entries[i].value;
        for (std::size_t k = 0; k < val.numel(); ++k) {
            const double orig = val.data[k];
            val.data[k] = orig + eps;
            double fp = f(params, false);
            val.data[k] = orig - eps;
            double fm = f(params, false);
            val.data[k] = orig;
            require(std::isfinite(fp) && std::isfinite(fm),
                    "finite_diff_check: non-finite perturbed loss");
            double numeric = (fp - fm) / (2.0 * eps);
            double a = analytic[i].data[k];
            double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

}  // namespace ood
