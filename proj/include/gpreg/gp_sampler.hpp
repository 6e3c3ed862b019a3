#pragma once

#include "gpreg/finite_difference.hpp"
#include "gpreg/kernel_expr.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace gpreg {

struct GridAxis {
    double start = 0.0;
    double end = 1.0;
    int count = 2;

    [[nodiscard]] double spacing() const { return (end - start) / (count - 1); }
    [[nodiscard]] double at(int i) const;

    friend bool operator==(const GridAxis&, const GridAxis&) = default;
};

/// Uniform 1-D or 2-D grid; 2-D points are flattened row-major (second axis fastest).
struct Grid {
    std::vector<GridAxis> axes;

    /// "a:b:n" or "a:b:n,c:d:m".
    static Grid parse(std::string_view spec);
    static Grid line(double start, double end, int count);
    static Grid square(double start, double end, int count);

    [[nodiscard]] std::size_t dim() const { return axes.size(); }
    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] std::vector<double> point(std::size_t index) const;
    [[nodiscard]] std::vector<std::vector<double>> points() const;
    [[nodiscard]] std::string to_string() const;

    /// Throws DomainError unless start < end and count >= 2 on every axis.
    void validate() const;

    friend bool operator==(const Grid&, const Grid&) = default;
};

/// Throws DimensionError/DomainError when the grid does not fit the kernel
/// (dimension mismatch, or a Wiener coordinate not strictly positive).
void check_grid_for_kernel(const KernelExpr& e, const Grid& grid);

/// G[i][j] = k(p_i, p_j); upper triangle evaluated, lower mirrored (bitwise symmetric).
[[nodiscard]] Eigen::MatrixXd build_gram(const KernelExpr& e, const std::vector<std::vector<double>>& points);
[[nodiscard]] Eigen::MatrixXd build_gram(const KernelExpr& e, const Grid& grid);

/// Gram of the derivative kernel d^{alpha,alpha}k by central stencils with step s.
[[nodiscard]] Eigen::MatrixXd build_derivative_gram(const KernelExpr& e, const std::vector<std::vector<double>>& points,
                                                    const fd::MultiIndex& alpha, double s);

struct JitterPolicy {
    double initial_relative = 1e-12; // lambda_0 = initial_relative * trace / N
    double max_relative = 1e-6;      // give up beyond max_relative * trace / N
    double growth = 10.0;
};

struct CholeskyResult {
    Eigen::MatrixXd lower;
    double jitter = 0.0;
};

/// LL^T = A + lambda I for the first lambda in {0, lambda_0, growth lambda_0, ...}
/// that factors; NumericalError when the budget is exhausted.
[[nodiscard]] CholeskyResult cholesky_with_jitter(const Eigen::MatrixXd& a, const JitterPolicy& policy = {});

/// n standard normals for one draw. SplitMix64 over the counter (seed, draw, i)
/// gives 53-bit uniforms in (0, 1); consecutive pairs go through Box-Muller
/// (cos, sin). Part of the output contract: changing it changes every fixture.
[[nodiscard]] std::vector<double> standard_normals(std::uint64_t seed, std::uint64_t draw, std::size_t n);

struct PathSamples {
    Grid grid;
    Eigen::MatrixXd samples; // count x grid points, one draw per row
    std::string kernel;
    std::uint64_t seed = 0;
    double jitter_used = 0.0;
    std::vector<double> factor_jitter; // per tensor factor when factorized by Kronecker structure
    fd::MultiIndex alpha;              // all zeros for plain draws
    double derivative_step = 0.0;

    [[nodiscard]] std::size_t count() const { return static_cast<std::size_t>(samples.rows()); }
};

/// Rows = L z with z from standard_normals(seed, row, N). A top-level tensor
/// product of 1-D factors on a 2-D grid is factorized as L_1 (x) L_2, which
/// is the exact Cholesky factor of the Kronecker-structured Gram.
[[nodiscard]] PathSamples sample_paths(const KernelExpr& e, const Grid& grid, int count, std::uint64_t seed);

/// Draws from d^{alpha,alpha}k. Requires the inferred order along every axis
/// to exceed the derivative order requested there (GateError otherwise).
[[nodiscard]] PathSamples sample_derivative_paths(const KernelExpr& e, const fd::MultiIndex& alpha,
                                                  const Grid& grid, int count, std::uint64_t seed);

/// CSV with header x[,y],s0,s1,...; one grid point per row; %.17g values.
void write_samples_csv(std::ostream& out, const PathSamples& samples);

/// Reads a CSV written by write_samples_csv. The grid is reconstructed from
/// the coordinate columns, which must be uniform.
[[nodiscard]] PathSamples read_samples_csv(std::istream& in);

} // namespace gpreg
