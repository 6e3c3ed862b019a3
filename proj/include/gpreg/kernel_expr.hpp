#pragma once

#include "gpreg/special_functions.hpp"

#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace gpreg {

struct Node;

/// Immutable covariance-kernel expression tree. Copies share structure.
class KernelExpr {
public:
    // Leaf kernels. Parameters are validated; violations throw DomainError.
    static KernelExpr matern(double nu, double lengthscale = 1.0, int dim = 1);
    static KernelExpr wendland(int d, int n, double lengthscale = 1.0, int dim = 0);
    static KernelExpr squared_exponential(double lengthscale = 1.0, int dim = 1);
    static KernelExpr rational_quadratic(double a, double lengthscale = 1.0, int dim = 1);
    static KernelExpr periodic(double lengthscale = 1.0);
    static KernelExpr wiener();
    static KernelExpr linear(int dim = 1);
    static KernelExpr polynomial(int degree, int dim = 1);
    static KernelExpr feature_monomial(int degree);
    static KernelExpr feature_trigonometric(int degree);

    // Combinators. Dimension mismatches throw DimensionError.
    static KernelExpr conic(std::vector<KernelExpr> children, std::vector<double> weights);
    static KernelExpr sum(std::vector<KernelExpr> children);
    // A single factor is returned unchanged.
    static KernelExpr product(std::vector<KernelExpr> children);
    static KernelExpr tensor(std::vector<KernelExpr> children);
    static KernelExpr warp_affine(KernelExpr child, double scale, double shift);
    static KernelExpr warp_abs_power(KernelExpr child, double beta);

    [[nodiscard]] const Node& node() const { return *node_; }
    [[nodiscard]] int dim() const;

    template <class T>
    [[nodiscard]] const T* as() const;

    friend bool operator==(const KernelExpr& a, const KernelExpr& b);

private:
    explicit KernelExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

struct Matern {
    double nu;
    double lengthscale;
    int dim;
};

struct Wendland {
    int d;
    int n;
    double lengthscale;
    int dim;
    std::shared_ptr<const special::PiecewisePolynomial> radial;
};

struct SquaredExponential {
    double lengthscale;
    int dim;
};

struct RationalQuadratic {
    double a;
    double lengthscale;
    int dim;
};

/// exp(-sin^2(pi (x - y) / lengthscale)), one-dimensional.
struct Periodic {
    double lengthscale;
};

/// min(x, y) on the open half-line.
struct Wiener {};

struct Linear {
    int dim;
};

/// (1 + <x, y>)^degree
struct Polynomial {
    int degree;
    int dim;
};

enum class FeatureFamily { Monomial, Trigonometric };

/// phi(x)^T phi(y) with phi = (1, x, ..., x^m) or (cos kx, sin kx)_{k=1..m}; one-dimensional.
struct Feature {
    FeatureFamily family;
    int degree;
};

struct Conic {
    std::vector<KernelExpr> children;
    std::vector<double> weights;
};

struct Product {
    std::vector<KernelExpr> children;
};

struct TensorProduct {
    std::vector<KernelExpr> children;
};

enum class WarpFamily { Affine, AbsPower };

/// Componentwise input warp: affine x -> scale x + shift, or abs_power x -> |x|^beta.
struct WarpSpec {
    WarpFamily family;
    double scale = 1.0;
    double shift = 0.0;
    double beta = 1.0;

    friend bool operator==(const WarpSpec&, const WarpSpec&) = default;
};

struct Warp {
    KernelExpr child;
    WarpSpec warp;
};

using NodeData = std::variant<Matern, Wendland, SquaredExponential, RationalQuadratic, Periodic,
                              Wiener, Linear, Polynomial, Feature, Conic, Product, TensorProduct,
                              Warp>;

struct Node {
    NodeData data;
    int dim;
};

inline int KernelExpr::dim() const { return node_->dim; }

template <class T>
const T* KernelExpr::as() const {
    return std::get_if<T>(&node_->data);
}

[[nodiscard]] bool is_leaf(const KernelExpr& e);
[[nodiscard]] std::vector<KernelExpr> children(const KernelExpr& e);
[[nodiscard]] std::string node_name(const KernelExpr& e);

/// Structural classification; see classify().
struct StructureClass {
    enum class Kind { General, Stationary, Isotropic, Tensor };
    Kind kind = Kind::General;
    std::vector<StructureClass> factors; // populated for Tensor only

    [[nodiscard]] bool is_stationary() const {
        return kind == Kind::Stationary || kind == Kind::Isotropic;
    }
    [[nodiscard]] bool is_isotropic() const { return kind == Kind::Isotropic; }
    /// Number of regularity axes: flattened tensor factor count, 1 otherwise.
    [[nodiscard]] std::size_t axis_count() const;
    [[nodiscard]] std::string to_string() const;

    friend bool operator==(const StructureClass&, const StructureClass&) = default;
};

/// Syntactic classification. Leaf table plus closure rules: conic combinations
/// and products keep the weakest class of their children; warps demote to
/// General; a TensorProduct is Tensor at the top level and General when nested.
[[nodiscard]] StructureClass classify(const KernelExpr& e);

using Point = std::span<const double>;

/// k(x, y). Throws DimensionError on size mismatch and DomainError outside the domain.
[[nodiscard]] double eval(const KernelExpr& e, Point x, Point y);
[[nodiscard]] double eval(const KernelExpr& e, double x, double y);

/// k_r(r) for isotropic trees; StructureError otherwise.
[[nodiscard]] double eval_radial(const KernelExpr& e, double r);

/// k_delta(h) for stationary trees; StructureError otherwise.
[[nodiscard]] double eval_stationary(const KernelExpr& e, Point h);

/// Smallest intrinsic length scale in the tree (1 for scale-free leaves).
/// Numerical probes scale their step ladders by it.
[[nodiscard]] double characteristic_length(const KernelExpr& e);

/// Per input coordinate: true when the coordinate must be strictly positive
/// (it feeds a Wiener leaf without an intervening warp).
[[nodiscard]] std::vector<bool> positive_axes(const KernelExpr& e);

} // namespace gpreg
