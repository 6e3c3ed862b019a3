#include "gpreg/regularity.hpp"

#include "gpreg/errors.hpp"
#include "gpreg/kernel_parser.hpp"

#include <algorithm>
#include <cmath>

namespace gpreg {

namespace {

constexpr long long kExactDenominator = 64;

ExactOrder ceil_minus_one(const ExactOrder& q) {
    const long long p = q.numerator();
    const long long d = q.denominator();
    const long long floor = p >= 0 ? p / d : -((-p + d - 1) / d);
    const long long ceil = (floor * d == p) ? floor : floor + 1;
    return ExactOrder(ceil - 1);
}

std::string describe(const Regularity& r) {
    std::string out = "order " + r.order.to_string() + (r.sharp ? ", sharp" : ", sufficient-only");
    if (r.log_corrected) {
        out += ", log-corrected";
    }
    return out;
}

std::string describe_axes(const std::vector<Regularity>& axes) {
    if (axes.size() == 1) {
        return describe(axes.front());
    }
    std::string out = "axes [";
    for (std::size_t i = 0; i < axes.size(); ++i) {
        out += (i ? "; " : "") + describe(axes[i]);
    }
    return out + "]";
}

// min(1, s - n) for finite n <= s; 1 when s is infinite.
Order capped_excess(const Order& s, long long n) {
    if (s.is_infinite()) {
        return Order::exact(1);
    }
    if (const auto& q = s.exact_value()) {
        return Order::exact(std::min(ExactOrder(1), *q - ExactOrder(n)));
    }
    return Order::from_double(std::min(1.0, s.value() - static_cast<double>(n)));
}

Order warp_order(const Order& kernel, const Order& map, long long& n_out, Order& gamma, Order& delta) {
    const auto nk = kernel.integer_part();
    const auto nphi = map.integer_part();
    if (!nk && !nphi) {
        n_out = -1;
        return Order::infinite();
    }
    const long long n = std::min(nk.value_or(std::numeric_limits<long long>::max()),
                                 nphi.value_or(std::numeric_limits<long long>::max()));
    n_out = n;
    gamma = capped_excess(kernel, n);
    delta = capped_excess(map, n);
    if (gamma.exact_value() && delta.exact_value()) {
        return Order::exact(ExactOrder(n) + *gamma.exact_value() * *delta.exact_value());
    }
    return Order::from_double(static_cast<double>(n) + gamma.value() * delta.value());
}

struct Folder {
    std::vector<std::string> trace;

    void note(int depth, const std::string& rule, const KernelExpr& e, const std::vector<Regularity>& axes) {
        trace.push_back(std::string(static_cast<std::size_t>(2 * depth), ' ') + rule + ": " + print_kernel(e)
                        + " -> " + describe_axes(axes));
    }

    // Collapses a multi-axis result to its weakest axis (sufficient-only).
    static Regularity collapse(const std::vector<Regularity>& axes) {
        if (axes.size() == 1) {
            return axes.front();
        }
        Regularity out = axes.front();
        for (const auto& a : axes) {
            if (a.order < out.order) {
                out = a;
            }
        }
        out.sharp = false;
        return out;
    }

    Regularity min_rule(const std::vector<Regularity>& parts, bool all_smooth_sharp) {
        Order lowest = Order::infinite();
        for (const auto& p : parts) {
            lowest = min(lowest, p.order);
        }
        Regularity out{lowest, false, false};
        for (const auto& p : parts) {
            if (p.order == lowest) {
                out.log_corrected = out.log_corrected || p.log_corrected;
            }
        }
        if (all_smooth_sharp && lowest.is_infinite()) {
            out.sharp = true;
        }
        return out;
    }

    std::vector<Regularity> fold(const KernelExpr& e, bool top_level, int depth) {
        if (is_leaf(e)) {
            std::vector<Regularity> out{leaf_regularity(e)};
            note(depth, "leaf " + node_name(e), e, out);
            return out;
        }
        if (const auto* t = e.as<TensorProduct>()) {
            std::vector<Regularity> axes;
            for (const auto& child : t->children) {
                const auto part = fold(child, top_level, depth + 1);
                axes.insert(axes.end(), part.begin(), part.end());
            }
            if (!top_level) {
                axes = {collapse(axes)};
                note(depth, "tensor (nested, collapsed to weakest axis)", e, axes);
            } else {
                note(depth, "tensor (axis concatenation)", e, axes);
            }
            return axes;
        }
        if (const auto* w = e.as<Warp>()) {
            const Regularity child = collapse(fold(w->child, false, depth + 1));
            const Order map = w->warp.family == WarpFamily::Affine ? Order::infinite()
                                                                    : Order::from_double(w->warp.beta);
            long long n = 0;
            Order gamma = Order::exact(1);
            Order delta = Order::exact(1);
            const Order s = warp_order(child.order, map, n, gamma, delta);
            Regularity out{s, false, child.log_corrected && s == child.order};
            std::string rule = "warp";
            if (n >= 0) {
                rule += " (n=" + std::to_string(n) + ", gamma=" + gamma.to_string() + ", delta=" + delta.to_string()
                    + ")";
            }
            note(depth, rule, e, {out});
            return {out};
        }
        const bool is_product = e.as<Product>() != nullptr;
        const auto kids = children(e);
        std::vector<Regularity> parts;
        for (const auto& child : kids) {
            parts.push_back(collapse(fold(child, false, depth + 1)));
        }
        if (parts.size() == 1) {
            note(depth, is_product ? "product (single factor)" : "conic (single term, positive scale)", e, parts);
            return parts;
        }
        const Regularity out = min_rule(parts, is_product);
        note(depth, is_product ? "product (min rule)" : "conic (min rule)", e, {out});
        return {out};
    }
};

int sobolev_leaf(const KernelExpr& e) {
    if (const auto* m = e.as<Matern>()) {
        const double fl = std::floor(m->nu);
        return static_cast<int>(m->nu == fl ? fl - 1.0 : fl);
    }
    if (const auto* w = e.as<Wendland>()) {
        return w->n;
    }
    if (e.as<Wiener>()) {
        return 0;
    }
    return kInfiniteSobolev;
}

} // namespace

Order Order::infinite() {
    Order o;
    o.infinite_ = true;
    o.value_ = std::numeric_limits<double>::infinity();
    return o;
}

Order Order::exact(ExactOrder q) {
    Order o;
    o.exact_ = q;
    o.value_ = boost::rational_cast<double>(q);
    return o;
}

Order Order::from_double(double v) {
    if (std::isinf(v) && v > 0) {
        return infinite();
    }
    if (!std::isfinite(v) || v < 0.0) {
        throw DomainError("order must be a nonnegative real, got " + std::to_string(v));
    }
    const double scaled = v * kExactDenominator;
    if (scaled == std::floor(scaled) && scaled < 1e15) {
        return exact(ExactOrder(static_cast<long long>(scaled), kExactDenominator));
    }
    Order o;
    o.value_ = v;
    return o;
}

double Order::value() const {
    return value_;
}

std::optional<long long> Order::integer_part() const {
    if (infinite_) {
        return std::nullopt;
    }
    if (exact_) {
        return ceil_minus_one(*exact_).numerator();
    }
    return static_cast<long long>(std::ceil(value_)) - 1;
}

std::string Order::to_string() const {
    if (infinite_) {
        return "inf";
    }
    if (exact_) {
        if (exact_->denominator() == 1) {
            return std::to_string(exact_->numerator());
        }
        return std::to_string(exact_->numerator()) + "/" + std::to_string(exact_->denominator());
    }
    return format_number(value_);
}

bool operator==(const Order& a, const Order& b) {
    if (a.infinite_ || b.infinite_) {
        return a.infinite_ == b.infinite_;
    }
    if (a.exact_ && b.exact_) {
        return *a.exact_ == *b.exact_;
    }
    return a.value_ == b.value_;
}

bool operator<(const Order& a, const Order& b) {
    if (a.infinite_) {
        return false;
    }
    if (b.infinite_) {
        return true;
    }
    if (a.exact_ && b.exact_) {
        return *a.exact_ < *b.exact_;
    }
    return a.value_ < b.value_;
}

Order min(const Order& a, const Order& b) {
    return b < a ? b : a;
}

Regularity RegularityReport::overall() const {
    Regularity out = per_axis.front();
    for (const auto& r : per_axis) {
        if (r.order < out.order) {
            out = r;
        }
    }
    return out;
}

Regularity leaf_regularity(const KernelExpr& leaf) {
    if (const auto* m = leaf.as<Matern>()) {
        return {Order::from_double(m->nu), true, m->nu == std::floor(m->nu)};
    }
    if (const auto* w = leaf.as<Wendland>()) {
        return {Order::exact(ExactOrder(2 * w->n + 1, 2)), true, false};
    }
    if (leaf.as<Wiener>()) {
        return {Order::exact(ExactOrder(1, 2)), true, false};
    }
    if (leaf.as<SquaredExponential>() || leaf.as<RationalQuadratic>() || leaf.as<Periodic>() || leaf.as<Linear>()
        || leaf.as<Polynomial>()) {
        return {Order::infinite(), true, false};
    }
    if (leaf.as<Feature>()) {
        return {Order::infinite(), false, false};
    }
    throw StructureError("leaf_regularity: '" + node_name(leaf) + "' is not a leaf");
}

RegularityReport infer_regularity(const KernelExpr& e) {
    Folder folder;
    RegularityReport report;
    report.kernel = print_kernel(e);
    report.per_axis = folder.fold(e, true, 0);
    report.sobolev_order = sobolev_order(e);
    report.derivation = std::move(folder.trace);
    report.derivation.push_back(
        "sobolev: " + (report.sobolev_order == kInfiniteSobolev ? std::string("inf")
                                                                 : std::to_string(report.sobolev_order)));
    return report;
}

int sobolev_order(const KernelExpr& e) {
    if (is_leaf(e)) {
        return sobolev_leaf(e);
    }
    if (e.as<Warp>()) {
        Folder folder;
        const auto n = folder.fold(e, false, 0).front().order.integer_part();
        return n ? static_cast<int>(std::max(0LL, *n)) : kInfiniteSobolev;
    }
    int out = kInfiniteSobolev;
    for (const auto& child : children(e)) {
        out = std::min(out, sobolev_order(child));
    }
    return out;
}

} // namespace gpreg
