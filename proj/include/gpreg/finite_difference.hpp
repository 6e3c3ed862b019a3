#pragma once

#include "gpreg/kernel_expr.hpp"

#include <vector>

/// Finite-difference stencils on kernels.
namespace gpreg::fd {

using MultiIndex = std::vector<int>;

/// Binomial difference weights (-1)^{m-k} C(m, k), k = 0..m.
[[nodiscard]] std::vector<double> difference_weights(int m);

/// Sum of |weights| for an order-m stencil, i.e. 2^m.
[[nodiscard]] double weight_mass(int m);

/// Central m-th derivative: s^{-m} sum_k w_k g(x + (k - m/2) s).
template <class F>
[[nodiscard]] double central_difference(F&& g, int m, double x, double s) {
    const auto w = difference_weights(m);
    double acc = 0.0;
    for (int k = 0; k <= m; ++k) {
        acc += w[static_cast<std::size_t>(k)] * g(x + (k - 0.5 * m) * s);
    }
    double scale = 1.0;
    for (int i = 0; i < m; ++i) {
        scale *= s;
    }
    return acc / scale;
}

/// d^{alpha}_x d^{beta}_y k(x, y) by nested central stencils with step s in every coordinate.
/// |alpha| and |beta| are limited to 4 per coordinate.
[[nodiscard]] double mixed_derivative(const KernelExpr& e, Point x, Point y, const MultiIndex& alpha,
                                      const MultiIndex& beta, double s);

/// Rounding bound for a stencil of total order m applied to values of size `magnitude`.
[[nodiscard]] double stencil_noise(int m, double magnitude, double s);

/// Step for derivative kernels of total order a = |alpha| per argument: small
/// against the grid spacing, but large enough that rounding stays below
/// 1e-7 relative to the kernel scale.
[[nodiscard]] double derivative_kernel_step(int a, double spacing, double length);

} // namespace gpreg::fd
