#include "gpreg/finite_difference.hpp"

#include "gpreg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace gpreg::fd {

namespace {

constexpr int kMaxPerCoordinate = 4;

struct Shift {
    std::vector<double> offset;
    double weight;
};

// Tensor-product stencil for a multi-index: every combination of per-coordinate offsets.
std::vector<Shift> stencil(const MultiIndex& order, std::size_t dim, double s) {
    std::vector<Shift> shifts{{std::vector<double>(dim, 0.0), 1.0}};
    for (std::size_t i = 0; i < order.size(); ++i) {
        const int m = order[i];
        if (m == 0) {
            continue;
        }
        const auto w = difference_weights(m);
        std::vector<Shift> next;
        next.reserve(shifts.size() * w.size());
        for (const auto& base : shifts) {
            for (int k = 0; k <= m; ++k) {
                Shift sh = base;
                sh.offset[i] += (k - 0.5 * m) * s;
                sh.weight *= w[static_cast<std::size_t>(k)];
                next.push_back(std::move(sh));
            }
        }
        shifts = std::move(next);
    }
    return shifts;
}

void check_index(const MultiIndex& idx, std::size_t dim, const char* what) {
    if (idx.size() != dim) {
        throw DimensionError(std::string(what) + ": multi-index has " + std::to_string(idx.size())
                             + " entries, kernel dimension is " + std::to_string(dim));
    }
    for (int m : idx) {
        if (m < 0 || m > kMaxPerCoordinate) {
            throw DomainError(std::string(what) + ": order per coordinate must be in [0, 4], got "
                              + std::to_string(m));
        }
    }
}

} // namespace

std::vector<double> difference_weights(int m) {
    if (m < 0) {
        throw DomainError("difference order must be nonnegative");
    }
    std::vector<double> w(static_cast<std::size_t>(m) + 1);
    double binom = 1.0;
    for (int k = 0; k <= m; ++k) {
        w[static_cast<std::size_t>(k)] = ((m - k) % 2 == 0) ? binom : -binom;
        binom = binom * (m - k) / (k + 1);
    }
    return w;
}

double weight_mass(int m) {
    return std::ldexp(1.0, m);
}

double mixed_derivative(const KernelExpr& e, Point x, Point y, const MultiIndex& alpha, const MultiIndex& beta,
                        double s) {
    const auto dim = static_cast<std::size_t>(e.dim());
    check_index(alpha, dim, "mixed_derivative");
    check_index(beta, dim, "mixed_derivative");
    if (x.size() != dim || y.size() != dim) {
        throw DimensionError("mixed_derivative: point dimension does not match kernel");
    }
    const int order = std::accumulate(alpha.begin(), alpha.end(), 0) + std::accumulate(beta.begin(), beta.end(), 0);
    if (order == 0) {
        return eval(e, x, y);
    }
    if (!(s > 0.0)) {
        throw DomainError("mixed_derivative: step must be positive");
    }
    const auto sx = stencil(alpha, dim, s);
    const auto sy = stencil(beta, dim, s);
    std::vector<double> px(dim);
    std::vector<double> py(dim);
    double acc = 0.0;
    for (const auto& a : sx) {
        for (std::size_t i = 0; i < dim; ++i) {
            px[i] = x[i] + a.offset[i];
        }
        for (const auto& b : sy) {
            for (std::size_t i = 0; i < dim; ++i) {
                py[i] = y[i] + b.offset[i];
            }
            acc += a.weight * b.weight * eval(e, px, py);
        }
    }
    return acc / std::pow(s, order);
}

double stencil_noise(int m, double magnitude, double s) {
    return std::numeric_limits<double>::epsilon() * weight_mass(m) * magnitude / std::pow(s, m);
}

double derivative_kernel_step(int a, double spacing, double length) {
    if (a == 0) {
        return 0.0;
    }
    constexpr double kRelativeNoise = 1e-7;
    const double grid_step = std::min(0.25 * spacing, 1e-3 * length);
    const double floor = length
        * std::pow(weight_mass(2 * a) * std::numeric_limits<double>::epsilon() / kRelativeNoise, 1.0 / (2.0 * a));
    return std::max(grid_step, floor);
}

} // namespace gpreg::fd
