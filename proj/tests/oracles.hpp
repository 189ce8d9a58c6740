#pragma once

// Test-only oracles, independent of the library code paths they check.

#include <cmath>
#include <vector>

#include "fblearn/mlp.hpp"

namespace oracles {

namespace detail {

template <typename F>
double simpson(F&& f, double a, double b) {
    const double m = 0.5 * (a + b);
    return (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
}

template <typename F>
double adaptive_step(F&& f, double a, double b, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double left = simpson(f, a, m);
    const double right = simpson(f, m, b);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_step(f, a, m, left, tol / 2.0, depth - 1) +
           adaptive_step(f, m, b, right, tol / 2.0, depth - 1);
}

}  // namespace detail

// Adaptive Simpson quadrature with absolute tolerance.
template <typename F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-10, int max_depth = 40) {
    return detail::adaptive_step(f, a, b, detail::simpson(f, a, b), tol, max_depth);
}

// Central finite differences of the mean batch loss with respect to every
// parameter.
inline fblearn::MlpGrad finite_difference_gradient(
    const fblearn::Mlp& mlp, const std::vector<std::vector<double>>& inputs,
    const std::vector<std::vector<double>>& targets, std::span<const int> indices,
    fblearn::LossKind kind, double eps = 1e-4) {
    fblearn::MlpGrad fd = fblearn::make_grad_like(mlp);
    fblearn::Mlp probe = mlp;
    for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
        for (std::size_t i = 0; i < mlp.weights[l].size(); ++i) {
            probe.weights[l][i] = mlp.weights[l][i] + eps;
            const double up = fblearn::batch_loss(probe, inputs, targets, indices, kind);
            probe.weights[l][i] = mlp.weights[l][i] - eps;
            const double down = fblearn::batch_loss(probe, inputs, targets, indices, kind);
            probe.weights[l][i] = mlp.weights[l][i];
            fd.weights[l][i] = (up - down) / (2.0 * eps);
        }
        for (std::size_t i = 0; i < mlp.biases[l].size(); ++i) {
            probe.biases[l][i] = mlp.biases[l][i] + eps;
            const double up = fblearn::batch_loss(probe, inputs, targets, indices, kind);
            probe.biases[l][i] = mlp.biases[l][i] - eps;
            const double down = fblearn::batch_loss(probe, inputs, targets, indices, kind);
            probe.biases[l][i] = mlp.biases[l][i];
            fd.biases[l][i] = (up - down) / (2.0 * eps);
        }
    }
    return fd;
}

// Largest deviation between analytic and finite-difference gradients under
// the unit-floored relative metric |a-f| / max(1, |a|, |f|).
inline double max_gradient_deviation(const fblearn::MlpGrad& analytic,
                                     const fblearn::MlpGrad& fd) {
    double worst = 0.0;
    for (std::size_t l = 0; l < analytic.weights.size(); ++l) {
        for (std::size_t i = 0; i < analytic.weights[l].size(); ++i) {
            const double a = analytic.weights[l][i];
            const double f = fd.weights[l][i];
            worst = std::max(worst,
                             std::abs(a - f) / std::max({1.0, std::abs(a), std::abs(f)}));
        }
        for (std::size_t i = 0; i < analytic.biases[l].size(); ++i) {
            const double a = analytic.biases[l][i];
            const double f = fd.biases[l][i];
            worst = std::max(worst,
                             std::abs(a - f) / std::max({1.0, std::abs(a), std::abs(f)}));
        }
    }
    return worst;
}

}  // namespace oracles
