#include "gpreg/kernel_expr.hpp"

#include "gpreg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace gpreg {

namespace {

constexpr int kMaxDim = 16;

void require(bool ok, const std::string& message) {
    if (!ok) {
        throw DomainError(message);
    }
}

void check_lengthscale(double ell) {
    require(std::isfinite(ell) && ell > 0.0,
            "lengthscale must be positive and finite, got " + std::to_string(ell));
}

void check_dim(int dim) {
    require(dim >= 1 && dim <= kMaxDim,
            "dim must be in [1, " + std::to_string(kMaxDim) + "], got " + std::to_string(dim));
}

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double squared_distance(Point x, Point y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        acc += d * d;
    }
    return acc;
}

double dot(Point x, Point y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc += x[i] * y[i];
    }
    return acc;
}

double norm(Point h) {
    return std::sqrt(dot(h, h));
}

double apply_warp(const WarpSpec& w, double v) {
    if (w.family == WarpFamily::Affine) {
        return w.scale * v + w.shift;
    }
    return std::pow(std::abs(v), w.beta);
}

// Radial profile of an isotropic leaf, r >= 0.
double leaf_radial(const NodeData& data, double r) {
    return std::visit(
        Overloaded{
            [r](const Matern& m) { return special::matern_radial(m.nu, r / m.lengthscale); },
            [r](const Wendland& w) { return (*w.radial)(r / w.lengthscale); },
            [r](const SquaredExponential& s) {
                const double u = r / s.lengthscale;
                return std::exp(-u * u);
            },
            [r](const RationalQuadratic& q) {
                const double u = r / q.lengthscale;
                return std::pow(1.0 + u * u, -q.a);
            },
            [](const auto&) -> double {
                throw StructureError("leaf has no radial profile");
            },
        },
        data);
}

double eval_impl(const KernelExpr& e, Point x, Point y) {
    return std::visit(
        Overloaded{
            [&](const Matern&) { return leaf_radial(e.node().data, std::sqrt(squared_distance(x, y))); },
            [&](const Wendland&) { return leaf_radial(e.node().data, std::sqrt(squared_distance(x, y))); },
            [&](const SquaredExponential& s) {
                return std::exp(-squared_distance(x, y) / (s.lengthscale * s.lengthscale));
            },
            [&](const RationalQuadratic& q) {
                return std::pow(1.0 + squared_distance(x, y) / (q.lengthscale * q.lengthscale), -q.a);
            },
            [&](const Periodic& p) {
                const double s = std::sin(std::numbers::pi * (x[0] - y[0]) / p.lengthscale);
                return std::exp(-s * s);
            },
            [&](const Wiener&) {
                if (!(x[0] > 0.0) || !(y[0] > 0.0)) {
                    throw DomainError("wiener kernel requires strictly positive inputs");
                }
                return std::min(x[0], y[0]);
            },
            [&](const Linear&) { return dot(x, y); },
            [&](const Polynomial& p) { return std::pow(1.0 + dot(x, y), p.degree); },
            [&](const Feature& f) {
                double acc = 0.0;
                if (f.family == FeatureFamily::Monomial) {
                    double px = 1.0;
                    double py = 1.0;
                    for (int k = 0; k <= f.degree; ++k) {
                        acc += px * py;
                        px *= x[0];
                        py *= y[0];
                    }
                } else {
                    for (int k = 1; k <= f.degree; ++k) {
                        acc += std::cos(k * x[0]) * std::cos(k * y[0])
                            + std::sin(k * x[0]) * std::sin(k * y[0]);
                    }
                }
                return acc;
            },
            [&](const Conic& c) {
                double acc = 0.0;
                for (std::size_t i = 0; i < c.children.size(); ++i) {
                    acc += c.weights[i] * eval_impl(c.children[i], x, y);
                }
                return acc;
            },
            [&](const Product& p) {
                double acc = 1.0;
                for (const auto& child : p.children) {
                    acc *= eval_impl(child, x, y);
                }
                return acc;
            },
            [&](const TensorProduct& t) {
                double acc = 1.0;
                std::size_t offset = 0;
                for (const auto& child : t.children) {
                    const auto n = static_cast<std::size_t>(child.dim());
                    acc *= eval_impl(child, x.subspan(offset, n), y.subspan(offset, n));
                    offset += n;
                }
                return acc;
            },
            [&](const Warp& w) {
                std::vector<double> wx(x.begin(), x.end());
                std::vector<double> wy(y.begin(), y.end());
                for (auto& v : wx) {
                    v = apply_warp(w.warp, v);
                }
                for (auto& v : wy) {
                    v = apply_warp(w.warp, v);
                }
                return eval_impl(w.child, wx, wy);
            },
        },
        e.node().data);
}

double radial_impl(const KernelExpr& e, double r) {
    if (const auto* c = e.as<Conic>()) {
        double acc = 0.0;
        for (std::size_t i = 0; i < c->children.size(); ++i) {
            acc += c->weights[i] * radial_impl(c->children[i], r);
        }
        return acc;
    }
    if (const auto* p = e.as<Product>()) {
        double acc = 1.0;
        for (const auto& child : p->children) {
            acc *= radial_impl(child, r);
        }
        return acc;
    }
    return leaf_radial(e.node().data, r);
}

double stationary_impl(const KernelExpr& e, Point h) {
    if (const auto* c = e.as<Conic>()) {
        double acc = 0.0;
        for (std::size_t i = 0; i < c->children.size(); ++i) {
            acc += c->weights[i] * stationary_impl(c->children[i], h);
        }
        return acc;
    }
    if (const auto* p = e.as<Product>()) {
        double acc = 1.0;
        for (const auto& child : p->children) {
            acc *= stationary_impl(child, h);
        }
        return acc;
    }
    if (const auto* p = e.as<Periodic>()) {
        const double s = std::sin(std::numbers::pi * h[0] / p->lengthscale);
        return std::exp(-s * s);
    }
    return leaf_radial(e.node().data, norm(h));
}

StructureClass::Kind weakest(StructureClass::Kind a, StructureClass::Kind b) {
    using K = StructureClass::Kind;
    if (a == K::General || b == K::General || a == K::Tensor || b == K::Tensor) {
        return K::General;
    }
    if (a == K::Stationary || b == K::Stationary) {
        return K::Stationary;
    }
    return K::Isotropic;
}

StructureClass classify_impl(const KernelExpr& e, bool top_level) {
    using K = StructureClass::Kind;
    return std::visit(
        Overloaded{
            [](const Matern&) { return StructureClass{K::Isotropic, {}}; },
            [](const Wendland&) { return StructureClass{K::Isotropic, {}}; },
            [](const SquaredExponential&) { return StructureClass{K::Isotropic, {}}; },
            [](const RationalQuadratic&) { return StructureClass{K::Isotropic, {}}; },
            [](const Periodic&) { return StructureClass{K::Stationary, {}}; },
            [](const Wiener&) { return StructureClass{K::General, {}}; },
            [](const Linear&) { return StructureClass{K::General, {}}; },
            [](const Polynomial&) { return StructureClass{K::General, {}}; },
            [](const Feature&) { return StructureClass{K::General, {}}; },
            [](const Conic& c) {
                K kind = K::Isotropic;
                for (const auto& child : c.children) {
                    kind = weakest(kind, classify_impl(child, false).kind);
                }
                return StructureClass{kind, {}};
            },
            [](const Product& p) {
                K kind = K::Isotropic;
                for (const auto& child : p.children) {
                    kind = weakest(kind, classify_impl(child, false).kind);
                }
                return StructureClass{kind, {}};
            },
            [top_level](const TensorProduct& t) {
                if (!top_level) {
                    return StructureClass{K::General, {}};
                }
                StructureClass out{K::Tensor, {}};
                for (const auto& child : t.children) {
                    out.factors.push_back(classify_impl(child, true));
                }
                return out;
            },
            [](const Warp&) { return StructureClass{K::General, {}}; },
        },
        e.node().data);
}

bool same_double(double a, double b) {
    return a == b || (std::isnan(a) && std::isnan(b));
}

bool equal_children(const std::vector<KernelExpr>& a, const std::vector<KernelExpr>& b) {
    if (a.size() != b.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(a[i] == b[i])) {
            return false;
        }
    }
    return true;
}

} // namespace

KernelExpr KernelExpr::matern(double nu, double lengthscale, int dim) {
    require(std::isfinite(nu) && nu > 0.0 && nu <= 100.0,
            "nu must be in (0, 100], got " + std::to_string(nu));
    check_lengthscale(lengthscale);
    check_dim(dim);
    return KernelExpr(std::make_shared<const Node>(Node{Matern{nu, lengthscale, dim}, dim}));
}

KernelExpr KernelExpr::wendland(int d, int n, double lengthscale, int dim) {
    require(d >= 1 && d <= kMaxDim, "d must be in [1, 16], got " + std::to_string(d));
    require(n >= 0 && n <= 10, "n must be in [0, 10], got " + std::to_string(n));
    check_lengthscale(lengthscale);
    if (dim == 0) {
        dim = d;
    }
    require(dim >= 1 && dim <= d,
            "dim must be in [1, d] for a Wendland kernel, got " + std::to_string(dim));
    auto radial = std::make_shared<const special::PiecewisePolynomial>(special::wendland_polynomial(d, n));
    return KernelExpr(std::make_shared<const Node>(
        Node{Wendland{d, n, lengthscale, dim, std::move(radial)}, dim}));
}

KernelExpr KernelExpr::squared_exponential(double lengthscale, int dim) {
    check_lengthscale(lengthscale);
    check_dim(dim);
    return KernelExpr(std::make_shared<const Node>(Node{SquaredExponential{lengthscale, dim}, dim}));
}

KernelExpr KernelExpr::rational_quadratic(double a, double lengthscale, int dim) {
    require(std::isfinite(a) && a > 0.0, "a must be positive, got " + std::to_string(a));
    check_lengthscale(lengthscale);
    check_dim(dim);
    return KernelExpr(std::make_shared<const Node>(Node{RationalQuadratic{a, lengthscale, dim}, dim}));
}

KernelExpr KernelExpr::periodic(double lengthscale) {
    check_lengthscale(lengthscale);
    return KernelExpr(std::make_shared<const Node>(Node{Periodic{lengthscale}, 1}));
}

KernelExpr KernelExpr::wiener() {
    return KernelExpr(std::make_shared<const Node>(Node{Wiener{}, 1}));
}

KernelExpr KernelExpr::linear(int dim) {
    check_dim(dim);
    return KernelExpr(std::make_shared<const Node>(Node{Linear{dim}, dim}));
}

KernelExpr KernelExpr::polynomial(int degree, int dim) {
    require(degree >= 1 && degree <= 50, "m must be in [1, 50], got " + std::to_string(degree));
    check_dim(dim);
    return KernelExpr(std::make_shared<const Node>(Node{Polynomial{degree, dim}, dim}));
}

KernelExpr KernelExpr::feature_monomial(int degree) {
    require(degree >= 1 && degree <= 50, "m must be in [1, 50], got " + std::to_string(degree));
    return KernelExpr(std::make_shared<const Node>(Node{Feature{FeatureFamily::Monomial, degree}, 1}));
}

KernelExpr KernelExpr::feature_trigonometric(int degree) {
    require(degree >= 1 && degree <= 50, "m must be in [1, 50], got " + std::to_string(degree));
    return KernelExpr(
        std::make_shared<const Node>(Node{Feature{FeatureFamily::Trigonometric, degree}, 1}));
}

KernelExpr KernelExpr::conic(std::vector<KernelExpr> children, std::vector<double> weights) {
    if (children.empty()) {
        throw DimensionError("conic combination needs at least one child");
    }
    if (children.size() != weights.size()) {
        throw DimensionError("conic combination: weight count does not match child count");
    }
    for (double w : weights) {
        require(std::isfinite(w) && w > 0.0, "conic weights must be positive, got " + std::to_string(w));
    }
    const int dim = children.front().dim();
    for (const auto& c : children) {
        if (c.dim() != dim) {
            throw DimensionError("conic combination: children have different input dimensions");
        }
    }
    return KernelExpr(std::make_shared<const Node>(Node{Conic{std::move(children), std::move(weights)}, dim}));
}

KernelExpr KernelExpr::sum(std::vector<KernelExpr> children) {
    std::vector<double> weights(children.size(), 1.0);
    return conic(std::move(children), std::move(weights));
}

KernelExpr KernelExpr::product(std::vector<KernelExpr> children) {
    if (children.empty()) {
        throw DimensionError("product needs at least one child");
    }
    // A one-factor product is its factor; the DSL has no other spelling for it.
    if (children.size() == 1) {
        return std::move(children.front());
    }
    const int dim = children.front().dim();
    for (const auto& c : children) {
        if (c.dim() != dim) {
            throw DimensionError("product: children have different input dimensions");
        }
    }
    return KernelExpr(std::make_shared<const Node>(Node{Product{std::move(children)}, dim}));
}

KernelExpr KernelExpr::tensor(std::vector<KernelExpr> children) {
    if (children.empty()) {
        throw DimensionError("tensor product needs at least one factor");
    }
    int dim = 0;
    for (const auto& c : children) {
        dim += c.dim();
    }
    if (dim > kMaxDim) {
        throw DimensionError("tensor product exceeds the maximum input dimension");
    }
    return KernelExpr(std::make_shared<const Node>(Node{TensorProduct{std::move(children)}, dim}));
}

KernelExpr KernelExpr::warp_affine(KernelExpr child, double scale, double shift) {
    require(std::isfinite(scale) && scale != 0.0, "affine warp scale must be nonzero");
    require(std::isfinite(shift), "affine warp shift must be finite");
    const int dim = child.dim();
    return KernelExpr(std::make_shared<const Node>(
        Node{Warp{std::move(child), WarpSpec{WarpFamily::Affine, scale, shift, 1.0}}, dim}));
}

KernelExpr KernelExpr::warp_abs_power(KernelExpr child, double beta) {
    require(std::isfinite(beta) && beta > 0.0 && beta <= 1.0,
            "abs_power beta must be in (0, 1], got " + std::to_string(beta));
    const int dim = child.dim();
    return KernelExpr(std::make_shared<const Node>(
        Node{Warp{std::move(child), WarpSpec{WarpFamily::AbsPower, 1.0, 0.0, beta}}, dim}));
}

bool operator==(const KernelExpr& a, const KernelExpr& b) {
    if (a.node_ == b.node_) {
        return true;
    }
    if (a.node().data.index() != b.node().data.index() || a.dim() != b.dim()) {
        return false;
    }
    return std::visit(
        Overloaded{
            [&](const Matern& x) {
                const auto& y = *b.as<Matern>();
                return same_double(x.nu, y.nu) && same_double(x.lengthscale, y.lengthscale) && x.dim == y.dim;
            },
            [&](const Wendland& x) {
                const auto& y = *b.as<Wendland>();
                return x.d == y.d && x.n == y.n && same_double(x.lengthscale, y.lengthscale) && x.dim == y.dim;
            },
            [&](const SquaredExponential& x) {
                const auto& y = *b.as<SquaredExponential>();
                return same_double(x.lengthscale, y.lengthscale) && x.dim == y.dim;
            },
            [&](const RationalQuadratic& x) {
                const auto& y = *b.as<RationalQuadratic>();
                return same_double(x.a, y.a) && same_double(x.lengthscale, y.lengthscale) && x.dim == y.dim;
            },
            [&](const Periodic& x) { return same_double(x.lengthscale, b.as<Periodic>()->lengthscale); },
            [&](const Wiener&) { return true; },
            [&](const Linear& x) { return x.dim == b.as<Linear>()->dim; },
            [&](const Polynomial& x) {
                const auto& y = *b.as<Polynomial>();
                return x.degree == y.degree && x.dim == y.dim;
            },
            [&](const Feature& x) {
                const auto& y = *b.as<Feature>();
                return x.family == y.family && x.degree == y.degree;
            },
            [&](const Conic& x) {
                const auto& y = *b.as<Conic>();
                return x.weights == y.weights && equal_children(x.children, y.children);
            },
            [&](const Product& x) { return equal_children(x.children, b.as<Product>()->children); },
            [&](const TensorProduct& x) { return equal_children(x.children, b.as<TensorProduct>()->children); },
            [&](const Warp& x) {
                const auto& y = *b.as<Warp>();
                return x.warp == y.warp && x.child == y.child;
            },
        },
        a.node().data);
}

bool is_leaf(const KernelExpr& e) {
    return !(e.as<Conic>() || e.as<Product>() || e.as<TensorProduct>() || e.as<Warp>());
}

std::vector<KernelExpr> children(const KernelExpr& e) {
    if (const auto* c = e.as<Conic>()) {
        return c->children;
    }
    if (const auto* p = e.as<Product>()) {
        return p->children;
    }
    if (const auto* t = e.as<TensorProduct>()) {
        return t->children;
    }
    if (const auto* w = e.as<Warp>()) {
        return {w->child};
    }
    return {};
}

std::string node_name(const KernelExpr& e) {
    static const char* const kNames[] = {"matern", "wendland", "se",    "rq",      "periodic",
                                         "wiener", "linear",   "poly",  "feature", "conic",
                                         "product", "tensor",  "warp"};
    return kNames[e.node().data.index()];
}

std::size_t StructureClass::axis_count() const {
    if (kind != Kind::Tensor) {
        return 1;
    }
    std::size_t n = 0;
    for (const auto& f : factors) {
        n += f.axis_count();
    }
    return n;
}

std::string StructureClass::to_string() const {
    switch (kind) {
    case Kind::General:
        return "general";
    case Kind::Stationary:
        return "stationary";
    case Kind::Isotropic:
        return "isotropic";
    case Kind::Tensor: {
        std::string out = "tensor(";
        for (std::size_t i = 0; i < factors.size(); ++i) {
            out += (i ? ", " : "") + factors[i].to_string();
        }
        return out + ")";
    }
    }
    return "general";
}

StructureClass classify(const KernelExpr& e) {
    return classify_impl(e, true);
}

double eval(const KernelExpr& e, Point x, Point y) {
    const auto d = static_cast<std::size_t>(e.dim());
    if (x.size() != d || y.size() != d) {
        throw DimensionError("eval: kernel has input dimension " + std::to_string(d) + ", got points of size "
                             + std::to_string(x.size()) + " and " + std::to_string(y.size()));
    }
    return eval_impl(e, x, y);
}

double eval(const KernelExpr& e, double x, double y) {
    return eval(e, Point(&x, 1), Point(&y, 1));
}

double eval_radial(const KernelExpr& e, double r) {
    if (!classify(e).is_isotropic()) {
        throw StructureError("eval_radial: expression is not isotropic");
    }
    if (!(r >= 0.0)) {
        throw DomainError("eval_radial: radius must be nonnegative");
    }
    return radial_impl(e, r);
}

double eval_stationary(const KernelExpr& e, Point h) {
    if (!classify(e).is_stationary()) {
        throw StructureError("eval_stationary: expression is not stationary");
    }
    if (h.size() != static_cast<std::size_t>(e.dim())) {
        throw DimensionError("eval_stationary: lag has wrong dimension");
    }
    return stationary_impl(e, h);
}

double characteristic_length(const KernelExpr& e) {
    return std::visit(
        Overloaded{
            [](const Matern& m) { return m.lengthscale / std::max(1.0, std::sqrt(2.0 * m.nu)); },
            [](const Wendland& w) { return w.lengthscale; },
            [](const SquaredExponential& s) { return s.lengthscale; },
            [](const RationalQuadratic& q) { return q.lengthscale; },
            [](const Periodic& p) { return p.lengthscale / std::numbers::pi; },
            [](const Wiener&) { return 1.0; },
            [](const Linear&) { return 1.0; },
            [](const Polynomial&) { return 1.0; },
            [](const Feature& f) { return f.family == FeatureFamily::Trigonometric ? 1.0 / f.degree : 1.0; },
            [&](const Warp& w) {
                const double inner = characteristic_length(w.child);
                return w.warp.family == WarpFamily::Affine ? inner / std::abs(w.warp.scale) : inner;
            },
            [&](const auto&) {
                double out = std::numeric_limits<double>::infinity();
                for (const auto& child : children(e)) {
                    out = std::min(out, characteristic_length(child));
                }
                return out;
            },
        },
        e.node().data);
}

std::vector<bool> positive_axes(const KernelExpr& e) {
    const auto d = static_cast<std::size_t>(e.dim());
    if (e.as<Wiener>()) {
        return {true};
    }
    if (const auto* t = e.as<TensorProduct>()) {
        std::vector<bool> out;
        for (const auto& child : t->children) {
            const auto part = positive_axes(child);
            out.insert(out.end(), part.begin(), part.end());
        }
        return out;
    }
    std::vector<bool> out(d, false);
    if (e.as<Warp>()) {
        return out;
    }
    for (const auto& child : children(e)) {
        const auto part = positive_axes(child);
        for (std::size_t i = 0; i < d; ++i) {
            out[i] = out[i] || part[i];
        }
    }
    return out;
}

} // namespace gpreg
