#include "gpreg/numeric_verify.hpp"

#include "gpreg/errors.hpp"
#include "gpreg/kernel_parser.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace gpreg {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxRadialOrder = 8;
constexpr int kDetectionLevels = 16;
constexpr double kUsableDifference = 100.0;

int total(const MultiIndex& a) {
    return std::accumulate(a.begin(), a.end(), 0);
}

double norm(Point h) {
    double acc = 0.0;
    for (double v : h) {
        acc += v * v;
    }
    return std::sqrt(acc);
}

const Wendland* wendland_leaf(const KernelExpr& e) {
    return e.as<Wendland>();
}

// Where and in which directions the increment functional is probed.
struct Geometry {
    std::vector<std::vector<double>> bases;
    std::vector<std::size_t> axes;
    bool general = false;
};

// Halton point in [0.5, 1.5]^d.
std::vector<double> halton_probe(int index, std::size_t dim) {
    static constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
    std::vector<double> x(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        const int base = kPrimes[i];
        double f = 1.0;
        double r = 0.0;
        int n = index + 1;
        while (n > 0) {
            f /= base;
            r += f * (n % base);
            n /= base;
        }
        x[i] = 0.5 + r;
    }
    return x;
}

Geometry geometry(const KernelExpr& e, const VerifyConfig& cfg) {
    const auto dim = static_cast<std::size_t>(e.dim());
    const auto cls = classify(e);
    Geometry g;
    if (cls.is_isotropic()) {
        g.bases = {std::vector<double>(dim, 0.0)};
        g.axes = {0};
        return g;
    }
    for (std::size_t i = 0; i < dim; ++i) {
        g.axes.push_back(i);
    }
    if (cls.is_stationary()) {
        g.bases = {std::vector<double>(dim, 0.0)};
        return g;
    }
    g.general = true;
    for (int p = 0; p < cfg.probe_count; ++p) {
        g.bases.push_back(halton_probe(p, dim));
    }
    return g;
}

struct Increment {
    double value;
    double magnitude; // largest |k| seen
};

// E|Delta_h^m f(x)|^2 along one axis = sum_{i,j} w_i w_j k(x + i h e, x + j h e).
Increment increment_variance(const KernelExpr& e, const std::vector<double>& base, std::size_t axis, int m,
                             double h) {
    const auto w = fd::difference_weights(m);
    std::vector<double> px = base;
    std::vector<double> py = base;
    double acc = 0.0;
    double magnitude = 0.0;
    for (int i = 0; i <= m; ++i) {
        px[axis] = base[axis] + i * h;
        for (int j = 0; j <= m; ++j) {
            py[axis] = base[axis] + j * h;
            const double k = eval(e, px, py);
            magnitude = std::max(magnitude, std::abs(k));
            acc += w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)] * k;
        }
    }
    return {acc, magnitude};
}

// V_n(h) = E|Delta_h^n f|^2 / h^{2n} and its rounding bound.
struct Scaled {
    double value;
    double noise;
};

Scaled scaled_increment(const KernelExpr& e, const std::vector<double>& base, std::size_t axis, int n, double h) {
    const auto inc = increment_variance(e, base, axis, n, h);
    const double scale = std::pow(h, 2 * n);
    const double mass = fd::weight_mass(n);
    return {inc.value / scale, kEps * mass * mass * inc.magnitude / scale};
}

// Converging Cauchy sequence V_n(h_k) on a dyadic ladder: the finest two
// usable ratios of successive differences must lie below the threshold.
bool converges(const KernelExpr& e, const std::vector<double>& base, std::size_t axis, int n, double length,
               const VerifyConfig& cfg) {
    std::vector<Scaled> v;
    for (int k = 1; k <= kDetectionLevels + 1; ++k) {
        v.push_back(scaled_increment(e, base, axis, n, length * std::ldexp(1.0, -k)));
    }
    std::vector<double> diffs;
    std::vector<bool> usable;
    for (std::size_t k = 0; k + 1 < v.size(); ++k) {
        const double d = v[k].value - v[k + 1].value;
        diffs.push_back(d);
        usable.push_back(std::abs(d) > kUsableDifference * (v[k].noise + v[k + 1].noise));
    }
    std::vector<double> ratios;
    for (std::size_t k = 0; k + 1 < diffs.size(); ++k) {
        if (usable[k] && usable[k + 1]) {
            ratios.push_back(std::abs(diffs[k + 1]) / std::abs(diffs[k]));
        }
    }
    if (ratios.empty()) {
        return true;
    }
    const std::size_t first = ratios.size() >= 2 ? ratios.size() - 2 : 0;
    for (std::size_t i = first; i < ratios.size(); ++i) {
        if (!(ratios[i] < cfg.convergence_ratio)) {
            return false;
        }
    }
    return true;
}

double verification_length(const KernelExpr& e) {
    return std::min(1.0, characteristic_length(e));
}

int wendland_detected_order(const Wendland& w) {
    const int odd = w.radial->lowest_odd_degree();
    if (odd < 0) {
        return std::numeric_limits<int>::max();
    }
    return (odd - 1) / 2;
}

double wendland_deviation(const Wendland& w, int n, double h) {
    using special::Rational;
    const auto p = w.radial->derivative(2 * n);
    const Rational rho = Rational(h) / Rational(w.lengthscale);
    const Rational diff = p.exact_value(rho) - p.exact_value(Rational(0));
    return std::abs(static_cast<double>(diff)) / std::pow(w.lengthscale, 2 * n);
}

// Deviation per base point (max over axes) at one scale, with the rounding bound.
struct Deviation {
    std::vector<double> per_base;
    double noise = 0.0;
};

Deviation deviation_profile(const KernelExpr& e, const Geometry& g, int n, double h) {
    Deviation out;
    for (const auto& base : g.bases) {
        double best = 0.0;
        for (std::size_t axis : g.axes) {
            const auto inc = increment_variance(e, base, axis, n + 1, h);
            const double scale = std::pow(h, 2 * n);
            const double mass = fd::weight_mass(n + 1);
            best = std::max(best, std::abs(inc.value) / scale);
            out.noise = std::max(out.noise, kEps * mass * mass * inc.magnitude / scale);
        }
        out.per_base.push_back(best);
    }
    return out;
}

std::vector<double> scale_ladder(const KernelExpr& e, const VerifyConfig& cfg) {
    if (!(cfg.window_step > 0.0) || cfg.window_hi < cfg.window_lo) {
        throw DomainError("verify: invalid scale window");
    }
    const double length = verification_length(e);
    std::vector<double> scales;
    for (double j = cfg.window_lo; j <= cfg.window_hi + 1e-9; j += cfg.window_step) {
        scales.push_back(length * std::exp2(-j));
    }
    return scales;
}

// Fits the usable points, dropping the smallest scale while the residual is too large.
std::optional<ExponentFit> pruned_fit(std::vector<std::pair<double, double>> points, const VerifyConfig& cfg) {
    std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    while (points.size() >= 4) {
        ExponentFit fit = loglog_fit(points);
        if (fit.residual_max <= cfg.residual_limit || points.size() == 4) {
            return fit;
        }
        points.pop_back();
    }
    return std::nullopt;
}

struct ProfileFit {
    std::optional<ExponentFit> overall;
    std::vector<ProbeSlope> probes;
};

ProfileFit fit_profile(const KernelExpr& e, int n, const VerifyConfig& cfg) {
    ProfileFit out;
    const auto scales = scale_ladder(e, cfg);
    if (const auto* w = wendland_leaf(e)) {
        std::vector<std::pair<double, double>> pts;
        for (double h : scales) {
            const double d = wendland_deviation(*w, n, h);
            if (d > 0.0) {
                pts.emplace_back(h, d);
            }
        }
        out.overall = pruned_fit(std::move(pts), cfg);
        return out;
    }
    const Geometry g = geometry(e, cfg);
    std::vector<std::vector<std::pair<double, double>>> per_base(g.bases.size());
    std::vector<std::pair<double, double>> overall;
    for (double h : scales) {
        const Deviation d = deviation_profile(e, g, n, h);
        const double worst = *std::max_element(d.per_base.begin(), d.per_base.end());
        if (worst > 0.0 && d.noise <= cfg.noise_ratio * worst) {
            overall.emplace_back(h, worst);
        }
        for (std::size_t b = 0; b < g.bases.size(); ++b) {
            if (d.per_base[b] > 0.0 && d.noise <= cfg.noise_ratio * d.per_base[b]) {
                per_base[b].emplace_back(h, d.per_base[b]);
            }
        }
    }
    out.overall = pruned_fit(std::move(overall), cfg);
    if (g.general) {
        for (std::size_t b = 0; b < g.bases.size(); ++b) {
            if (auto fit = pruned_fit(std::move(per_base[b]), cfg)) {
                out.probes.push_back({g.bases[b], fit->slope});
            }
        }
    }
    return out;
}

AxisVerification verify_axis(const KernelExpr& e, const Regularity& predicted, const VerifyConfig& cfg) {
    AxisVerification out;
    out.kernel = print_kernel(e);
    out.predicted = predicted;
    out.method = wendland_leaf(e) ? "exact-polynomial" : "increment-variance";
    out.tolerance = predicted.log_corrected ? cfg.log_tol : cfg.tol;
    out.detected_n = detect_order(e, cfg);

    if (out.detected_n >= cfg.max_order) {
        out.detected_n = cfg.max_order;
        out.smooth_to_probed = true;
        out.detected_order = cfg.max_order;
        out.note = "smooth to probed order " + std::to_string(cfg.max_order);
        bool ok = true;
        if (!predicted.order.is_infinite() && predicted.sharp) {
            ok = predicted.order.value() >= cfg.max_order - out.tolerance;
        }
        out.verdict = ok ? Verdict::Pass : Verdict::Fail;
        return out;
    }

    auto profile = fit_profile(e, out.detected_n, cfg);
    out.fit = profile.overall;
    out.probes = std::move(profile.probes);
    if (!out.probes.empty()) {
        const auto [lo, hi] = std::minmax_element(out.probes.begin(), out.probes.end(),
                                                  [](const auto& a, const auto& b) { return a.slope < b.slope; });
        out.uniformity_spread = hi->slope - lo->slope;
    }
    if (!out.fit) {
        out.verdict = Verdict::Fail;
        out.detected_order = out.detected_n;
        out.note = "order-" + std::to_string(out.detected_n)
            + " deviation is below rounding noise at all scales, yet the next order does not converge";
        return out;
    }
    out.detected_order = out.detected_n + 0.5 * out.fit->slope;

    bool ok = false;
    if (predicted.order.is_infinite()) {
        out.note = "finite order detected for a kernel predicted smooth";
    } else if (predicted.sharp) {
        ok = std::abs(out.detected_order - predicted.order.value()) <= out.tolerance;
    } else {
        ok = out.detected_order >= predicted.order.value() - out.tolerance;
        out.note = "sufficient-only prediction checked as a lower bound";
    }
    if (!ok) {
        out.verdict = Verdict::Fail;
    } else {
        out.verdict = predicted.log_corrected ? Verdict::LogFlagged : Verdict::Pass;
    }
    return out;
}

} // namespace

ExponentFit loglog_fit(std::vector<std::pair<double, double>> points) {
    if (points.size() < 4) {
        throw DomainError("loglog_fit: need at least 4 points, got " + std::to_string(points.size()));
    }
    for (const auto& [h, v] : points) {
        if (!(h > 0.0) || !std::isfinite(h)) {
            throw DomainError("loglog_fit: scales must be positive and finite");
        }
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw DomainError("loglog_fit: values must be positive and finite");
        }
    }
    std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i].first == points[i - 1].first) {
            throw DomainError("loglog_fit: scales must be distinct");
        }
    }
    const auto n = static_cast<double>(points.size());
    double mx = 0.0;
    double my = 0.0;
    for (const auto& [h, v] : points) {
        mx += std::log(h);
        my += std::log(v);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (const auto& [h, v] : points) {
        const double dx = std::log(h) - mx;
        const double dy = std::log(v) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    ExponentFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (const auto& [h, v] : points) {
        const double r = std::log(v) - (fit.intercept + fit.slope * std::log(h));
        ss_res += r * r;
        fit.residual_max = std::max(fit.residual_max, std::abs(r));
        fit.scales.push_back(h);
        fit.values.push_back(v);
    }
    fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return fit;
}

double second_difference(const KernelExpr& e, Point x, Point h, const MultiIndex& alpha, double step) {
    return cross_second_difference(e, x, h, alpha, alpha, step);
}

double cross_second_difference(const KernelExpr& e, Point x, Point h, const MultiIndex& alpha,
                               const MultiIndex& beta, double step) {
    const auto dim = static_cast<std::size_t>(e.dim());
    if (x.size() != dim || h.size() != dim) {
        throw DimensionError("second_difference: point dimension does not match kernel");
    }
    std::vector<double> xh(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        xh[i] = x[i] + h[i];
    }
    const int order = std::max(total(alpha), total(beta));
    if (order > 0 && step == 0.0) {
        step = norm(h) / (2.0 * order);
    }
    auto d = [&](Point a, Point b) { return fd::mixed_derivative(e, a, b, alpha, beta, step); };
    return d(xh, xh) - d(xh, x) - d(x, xh) + d(x, x);
}

RadialDerivative radial_derivative(const KernelExpr& e, int order, double r) {
    if (!classify(e).is_isotropic()) {
        throw StructureError("radial_derivative: expression is not isotropic");
    }
    if (order < 0 || order > kMaxRadialOrder) {
        throw DomainError("radial_derivative: order must be in [0, 8], got " + std::to_string(order));
    }
    if (!(r >= 0.0) || !std::isfinite(r)) {
        throw DomainError("radial_derivative: radius must be nonnegative and finite");
    }
    if (const auto* w = wendland_leaf(e)) {
        const auto& p = *w->radial;
        const double rho = r / w->lengthscale;
        const double scale = std::pow(w->lengthscale, order);
        if (rho == 0.0) {
            // The even extension has a k-th derivative at 0 iff every odd coefficient of degree <= k vanishes.
            const int odd = p.lowest_odd_degree();
            const bool exists = odd < 0 || odd > order;
            const double value = (order % 2 == 0) ? p.derivative_value(order, 0.0) / scale : 0.0;
            return {exists ? value : std::numeric_limits<double>::quiet_NaN(), exists};
        }
        if (rho >= 1.0) {
            // At the support edge the left limit of the derivative must vanish.
            special::Rational left = 0;
            for (const auto& c : p.derivative(order).coefficients()) {
                left += c;
            }
            const bool flat = rho > 1.0 || left == 0;
            return {0.0, flat};
        }
        return {p.derivative_value(order, rho) / scale, true};
    }

    auto g = [&e](double t) { return eval_radial(e, std::abs(t)); };
    const double length = verification_length(e);
    const double g0 = std::abs(g(r));
    if (order == 0) {
        return {g(r), true};
    }
    const double floor = 1e-6 * std::max(g0, std::abs(g(0.0))) / std::pow(length, order);
    const double s = length * std::max(1.0, r / length) * std::pow(kEps, 1.0 / (order + 6));

    if (r == 0.0 && order % 2 == 1) {
        // Odd order at the origin: exists iff the one-sided derivative vanishes.
        auto forward = [&](double step) {
            const auto wts = fd::difference_weights(order);
            double acc = 0.0;
            for (int k = 0; k <= order; ++k) {
                acc += wts[static_cast<std::size_t>(k)] * g(k * step);
            }
            return acc / std::pow(step, order);
        };
        const double f0 = forward(s);
        const double f1 = forward(0.5 * s);
        const double f2 = forward(0.25 * s);
        const double r1a = 2.0 * f1 - f0;
        const double r1b = 2.0 * f2 - f1;
        const double r2 = (4.0 * r1b - r1a) / 3.0;
        const bool vanishes = std::abs(r2) <= 1e-4 * std::max(1.0, std::abs(g(0.0))) / std::pow(length, order);
        return {vanishes ? 0.0 : r2, vanishes};
    }

    const double a0 = fd::central_difference(g, order, r, s);
    const double a1 = fd::central_difference(g, order, r, 0.5 * s);
    const double a2 = fd::central_difference(g, order, r, 0.25 * s);
    const double r1a = (4.0 * a1 - a0) / 3.0;
    const double r1b = (4.0 * a2 - a1) / 3.0;
    const double r2 = (16.0 * r1b - r1a) / 15.0;
    const bool stable = std::abs(r2 - r1b) <= 1e-4 * std::max(std::abs(r2), floor);
    return {r2, stable};
}

int detect_order(const KernelExpr& e, const VerifyConfig& cfg) {
    if (cfg.max_order < 0) {
        throw DomainError("detect_order: max_order must be nonnegative");
    }
    if (const auto* w = wendland_leaf(e)) {
        return std::min(cfg.max_order, wendland_detected_order(*w));
    }
    const Geometry g = geometry(e, cfg);
    const double length = verification_length(e);
    for (int n = 1; n <= cfg.max_order; ++n) {
        for (const auto& base : g.bases) {
            for (std::size_t axis : g.axes) {
                if (!converges(e, base, axis, n, length, cfg)) {
                    return n - 1;
                }
            }
        }
    }
    return cfg.max_order;
}

double diagonal_deviation(const KernelExpr& e, int n, double h, const VerifyConfig& cfg) {
    if (n < 0) {
        throw DomainError("diagonal_deviation: order must be nonnegative");
    }
    if (!(h > 0.0)) {
        throw DomainError("diagonal_deviation: scale must be positive");
    }
    if (const auto* w = wendland_leaf(e)) {
        return wendland_deviation(*w, n, h);
    }
    const auto d = deviation_profile(e, geometry(e, cfg), n, h);
    return *std::max_element(d.per_base.begin(), d.per_base.end());
}

std::optional<ExponentFit> estimate_diagonal_exponent(const KernelExpr& e, int n, const VerifyConfig& cfg) {
    if (n < 0) {
        throw DomainError("estimate_diagonal_exponent: order must be nonnegative");
    }
    return fit_profile(e, n, cfg).overall;
}

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::Pass:
        return "pass";
    case Verdict::LogFlagged:
        return "log-flagged";
    case Verdict::Fail:
        return "fail";
    }
    return "fail";
}

VerifyReport verify_regularity(const KernelExpr& e, const RegularityReport& predicted, const VerifyConfig& cfg) {
    VerifyReport report;
    report.predicted = predicted;
    const auto* tensor = e.as<TensorProduct>();
    if (tensor && predicted.per_axis.size() > 1) {
        std::size_t axis = 0;
        for (const auto& factor : tensor->children) {
            const auto sub = verify_regularity(factor, infer_regularity(factor), cfg);
            for (const auto& a : sub.axes) {
                AxisVerification copy = a;
                copy.predicted = predicted.per_axis.at(axis++);
                report.axes.push_back(std::move(copy));
            }
        }
    } else {
        report.axes.push_back(verify_axis(e, predicted.overall(), cfg));
    }
    report.verdict = Verdict::Pass;
    for (const auto& a : report.axes) {
        if (a.verdict == Verdict::Fail) {
            report.verdict = Verdict::Fail;
            break;
        }
        if (a.verdict == Verdict::LogFlagged) {
            report.verdict = Verdict::LogFlagged;
        }
    }
    return report;
}

VerifyReport verify_regularity(const KernelExpr& e, const VerifyConfig& cfg) {
    return verify_regularity(e, infer_regularity(e), cfg);
}

} // namespace gpreg
