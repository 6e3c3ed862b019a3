#pragma once

#include "gpreg/finite_difference.hpp"
#include "gpreg/kernel_expr.hpp"
#include "gpreg/regularity.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gpreg {

using fd::MultiIndex;

/// Least-squares line through (log h, log value).
struct ExponentFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::vector<double> scales; // strictly decreasing
    std::vector<double> values; // aligned with scales
    double residual_max = 0.0;
};

/// Requires >= 4 points, positive values and distinct h. Points may come in any order.
[[nodiscard]] ExponentFit loglog_fit(std::vector<std::pair<double, double>> points);

/// d^{a,a}k(x+h,x+h) - d^{a,a}k(x+h,x) - d^{a,a}k(x,x+h) + d^{a,a}k(x,x).
/// Exact kernel algebra for alpha = 0; nested central stencils otherwise,
/// with step |h| / (2 |alpha|) unless `step` is given.
[[nodiscard]] double second_difference(const KernelExpr& e, Point x, Point h, const MultiIndex& alpha,
                                       double step = 0.0);

/// Cross version with d^{alpha,beta}; bounded by sqrt of the two diagonal
/// versions for any covariance kernel.
[[nodiscard]] double cross_second_difference(const KernelExpr& e, Point x, Point h, const MultiIndex& alpha,
                                             const MultiIndex& beta, double step = 0.0);

struct RadialDerivative {
    double value = 0.0;
    bool stable = false; // two successive Richardson refinements agree within 1e-4 relative
};

/// k_r^{(order)}(r) of the even extension t -> k_r(|t|); exact polynomial
/// differentiation for a Wendland leaf, Richardson-extrapolated central
/// differences otherwise. order <= 8.
[[nodiscard]] RadialDerivative radial_derivative(const KernelExpr& e, int order, double r);

struct VerifyConfig {
    double tol = 0.15;
    double log_tol = 0.25;
    int max_order = 3;
    // Scales h = L 2^{-j}, j from window_lo to window_hi in steps of window_step,
    // L the characteristic length of the kernel.
    double window_lo = 4.0;
    double window_hi = 12.0;
    double window_step = 0.5;
    // A scale is used when the rounding bound is below noise_ratio times the signal.
    double noise_ratio = 0.01;
    double residual_limit = 0.1;
    // Cauchy ratio below which order-n diagonal derivatives count as converging.
    double convergence_ratio = 0.85;
    int probe_count = 8;
};

/// Largest n <= cfg.max_order for which the order-n diagonal derivatives
/// d^{a,a}k(x,x), |a| = n, exist numerically.
[[nodiscard]] int detect_order(const KernelExpr& e, const VerifyConfig& cfg = {});

/// Order-n deviation delta_n(h) at one scale, maximized over axes and probes.
/// delta_n(h) = E|Delta_h^{n+1} f(x)|^2 / h^{2n}, computed from kernel values;
/// for a Wendland leaf |k_r^{(2n)}(h) - k_r^{(2n)}(0)| from the exact polynomial.
/// Grows like h^{2 gamma} when the order is n + gamma.
[[nodiscard]] double diagonal_deviation(const KernelExpr& e, int n, double h, const VerifyConfig& cfg = {});

/// Log-log fit of delta_n over the scale window. nullopt when fewer than four
/// scales carry signal above rounding noise (the kernel is smooth to this order).
[[nodiscard]] std::optional<ExponentFit> estimate_diagonal_exponent(const KernelExpr& e, int n,
                                                                    const VerifyConfig& cfg = {});

enum class Verdict { Pass, LogFlagged, Fail };
[[nodiscard]] std::string to_string(Verdict v);

struct ProbeSlope {
    std::vector<double> x;
    double slope = 0.0;
};

/// Verification of one regularity axis (one tensor factor, or the whole kernel).
struct AxisVerification {
    std::string kernel;
    Regularity predicted;
    int detected_n = 0;
    bool smooth_to_probed = false;   // detected_n reached max_order
    std::optional<ExponentFit> fit;  // absent when smooth_to_probed
    double detected_order = 0.0;     // detected_n + slope / 2, or max_order when smooth
    double tolerance = 0.0;
    std::string method;
    std::vector<ProbeSlope> probes;  // general kernels only
    double uniformity_spread = 0.0;  // max - min probe slope
    Verdict verdict = Verdict::Fail;
    std::string note;
};

struct VerifyReport {
    RegularityReport predicted;
    std::vector<AxisVerification> axes;
    Verdict verdict = Verdict::Fail;

    [[nodiscard]] bool passed() const { return verdict != Verdict::Fail; }
};

/// Compares numerics against the symbolic prediction. Sharp finite orders pass
/// when |detected - s| <= tol (log_tol and LogFlagged for log-corrected orders);
/// sufficient-only orders pass when detected >= s - tol; infinite orders pass
/// when the probe reaches max_order. Tensor products are verified per factor.
[[nodiscard]] VerifyReport verify_regularity(const KernelExpr& e, const RegularityReport& predicted,
                                             const VerifyConfig& cfg = {});
[[nodiscard]] VerifyReport verify_regularity(const KernelExpr& e, const VerifyConfig& cfg = {});

} // namespace gpreg
