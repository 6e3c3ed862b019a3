#pragma once

#include "gpreg/kernel_expr.hpp"

#include <boost/rational.hpp>

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace gpreg {

using ExactOrder = boost::rational<long long>;

/// Extended nonnegative real. Finite orders keep an exact rational whenever
/// the source parameters are dyadic with denominator dividing 64.
class Order {
public:
    static Order infinite();
    static Order exact(ExactOrder q);
    /// Exact when v * 64 is an integer, floating point otherwise.
    static Order from_double(double v);

    [[nodiscard]] bool is_infinite() const { return infinite_; }
    [[nodiscard]] double value() const;
    [[nodiscard]] const std::optional<ExactOrder>& exact_value() const { return exact_; }

    /// ceil(s) - 1: the number of classical derivatives. Infinite orders give nullopt.
    [[nodiscard]] std::optional<long long> integer_part() const;

    /// "inf", "p/q" / "p" when exact, shortest decimal otherwise.
    [[nodiscard]] std::string to_string() const;

    friend bool operator==(const Order& a, const Order& b);
    friend bool operator<(const Order& a, const Order& b);

private:
    bool infinite_ = false;
    std::optional<ExactOrder> exact_;
    double value_ = 0.0;
};

Order min(const Order& a, const Order& b);

/// Sample paths lie in C^{order-}_loc; `sharp` means membership fails for any larger order.
struct Regularity {
    Order order;
    bool sharp = false;
    bool log_corrected = false;

    friend bool operator==(const Regularity&, const Regularity&) = default;
};

constexpr int kInfiniteSobolev = std::numeric_limits<int>::max();

struct RegularityReport {
    std::string kernel;
    std::vector<Regularity> per_axis; // one entry per tensor factor, one otherwise
    int sobolev_order = 0;            // kInfiniteSobolev for smooth kernels
    std::vector<std::string> derivation;

    /// Smallest per-axis order, with flags of that axis.
    [[nodiscard]] Regularity overall() const;

    friend bool operator==(const RegularityReport&, const RegularityReport&) = default;
};

/// Leaf table. Throws StructureError for combinator nodes.
[[nodiscard]] Regularity leaf_regularity(const KernelExpr& leaf);

/// Recursive fold over the tree. Multi-child conic combinations and products
/// take the minimum of their children and are sufficient-only; single-child
/// nodes keep the child's flags; a top-level tensor product concatenates the
/// axes of its factors; a warp gives n + gamma * delta (sufficient-only).
[[nodiscard]] RegularityReport infer_regularity(const KernelExpr& e);

/// Sobolev order from the diagonal-differentiability condition, min-propagated.
[[nodiscard]] int sobolev_order(const KernelExpr& e);

} // namespace gpreg
