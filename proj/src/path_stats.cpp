#include "gpreg/path_stats.hpp"

#include "gpreg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace gpreg {

namespace {

// A path sampled along a line: values[offset + i * stride] for i < length.
struct Slice {
    std::size_t offset;
    std::size_t stride;
};

StructureFunction accumulate(const PathSamples& samples, const std::vector<Slice>& slices, std::size_t length,
                             double spacing, int m, const std::vector<int>& lags) {
    if (m < 1) {
        throw DomainError("structure_function: order m must be >= 1");
    }
    if (lags.empty()) {
        throw DomainError("structure_function: no lags");
    }
    const auto w = fd::difference_weights(m);
    StructureFunction out;
    out.m = m;
    for (int lag : lags) {
        if (lag < 1 || static_cast<std::size_t>(m) * static_cast<std::size_t>(lag) >= length) {
            throw DomainError("structure_function: lag " + std::to_string(lag) + " out of range for order "
                              + std::to_string(m) + " on " + std::to_string(length) + " points");
        }
        const std::size_t valid = length - static_cast<std::size_t>(m) * static_cast<std::size_t>(lag);
        // Fixed-order summation: per draw, per slice, per position.
        double total = 0.0;
        for (Eigen::Index d = 0; d < samples.samples.rows(); ++d) {
            const auto row = samples.samples.row(d);
            double per_draw = 0.0;
            for (const auto& s : slices) {
                for (std::size_t x = 0; x < valid; ++x) {
                    double inc = 0.0;
                    for (int j = 0; j <= m; ++j) {
                        const std::size_t i = x + static_cast<std::size_t>(j) * static_cast<std::size_t>(lag);
                        inc += w[static_cast<std::size_t>(j)] * row(static_cast<Eigen::Index>(s.offset + i * s.stride));
                    }
                    per_draw += inc * inc;
                }
            }
            total += per_draw;
        }
        const double n = static_cast<double>(samples.samples.rows()) * static_cast<double>(slices.size())
            * static_cast<double>(valid);
        out.lags.push_back(lag);
        out.lag_lengths.push_back(lag * spacing);
        out.values.push_back(total / n);
    }
    return out;
}

double mean_square(const PathSamples& samples) {
    const double n = static_cast<double>(samples.samples.size());
    return n > 0 ? samples.samples.squaredNorm() / n : 0.0;
}

PathEstimate estimate(const PathSamples& samples, const PathConfig& cfg,
                      const std::function<StructureFunction(int, const std::vector<int>&)>& sf, int points) {
    if (cfg.max_m < 1 || cfg.max_m > 8) {
        throw DomainError("max_m must be in [1, 8]");
    }
    if (static_cast<int>(samples.count()) < cfg.min_samples) {
        throw DomainError("path estimate needs at least " + std::to_string(cfg.min_samples) + " draws, got "
                          + std::to_string(samples.count()));
    }
    const auto lags = default_lags(points);
    if (lags.size() < 4) {
        throw DomainError("grid too coarse for path estimation: " + std::to_string(points)
                          + " points give fewer than 4 lags in [4, span/8]");
    }
    const double ms = mean_square(samples);
    PathEstimate out;
    for (int m = 1; m <= cfg.max_m; ++m) {
        StructureFunction s = sf(m, lags);
        const double floor = std::pow(100.0 * std::numeric_limits<double>::epsilon() * fd::weight_mass(m), 2) * ms;
        const bool at_rounding =
            std::all_of(s.values.begin(), s.values.end(), [floor](double v) { return !(v > floor); });
        if (at_rounding) {
            // Increments vanish: constant data at m = 1, or a polynomial path of degree < m.
            out.structure = std::move(s);
            out.m_used = m;
            if (m == 1) {
                out.status = EstimateStatus::Degenerate;
                out.s_hat = std::numeric_limits<double>::quiet_NaN();
            } else {
                out.status = EstimateStatus::LowerBound;
                out.s_hat = cfg.max_m;
            }
            return out;
        }
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            if (s.values[i] > floor) {
                pts.emplace_back(s.lag_lengths[i], s.values[i]);
            }
        }
        if (pts.size() < 4) {
            out.status = EstimateStatus::Degenerate;
            out.s_hat = std::numeric_limits<double>::quiet_NaN();
            out.m_used = m;
            out.structure = std::move(s);
            return out;
        }
        ExponentFit fit = loglog_fit(std::move(pts));
        const bool saturated = fit.slope > 2.0 * m - cfg.saturation_margin;
        out.fit = fit;
        out.m_used = m;
        out.structure = std::move(s);
        if (!saturated) {
            out.status = EstimateStatus::Point;
            out.s_hat = 0.5 * fit.slope;
            return out;
        }
    }
    out.status = EstimateStatus::LowerBound;
    out.s_hat = cfg.max_m;
    return out;
}

} // namespace

std::vector<int> default_lags(int points) {
    const double span_steps = points - 1;
    std::vector<int> lags;
    for (int k = 0;; ++k) {
        const int lag = static_cast<int>(std::lround(4.0 * std::exp2(k / 4.0)));
        if (lag > span_steps / 8.0) {
            break;
        }
        if (lags.empty() || lags.back() != lag) {
            lags.push_back(lag);
        }
    }
    return lags;
}

StructureFunction structure_function(const PathSamples& samples, int m, const std::vector<int>& lags) {
    if (samples.grid.dim() != 1) {
        throw DimensionError("structure_function: samples must lie on a 1-D grid; use structure_function_axis");
    }
    const auto n = static_cast<std::size_t>(samples.grid.axes[0].count);
    return accumulate(samples, {Slice{0, 1}}, n, samples.grid.axes[0].spacing(), m, lags);
}

StructureFunction structure_function_axis(const PathSamples& samples, std::size_t axis, int m,
                                          const std::vector<int>& lags) {
    if (samples.grid.dim() != 2) {
        throw DimensionError("structure_function_axis: samples must lie on a 2-D grid");
    }
    if (axis > 1) {
        throw DimensionError("structure_function_axis: axis must be 0 or 1");
    }
    const auto n1 = static_cast<std::size_t>(samples.grid.axes[0].count);
    const auto n2 = static_cast<std::size_t>(samples.grid.axes[1].count);
    std::vector<Slice> slices;
    if (axis == 0) {
        for (std::size_t j = 0; j < n2; ++j) {
            slices.push_back({j, n2});
        }
        return accumulate(samples, slices, n1, samples.grid.axes[0].spacing(), m, lags);
    }
    for (std::size_t i = 0; i < n1; ++i) {
        slices.push_back({i * n2, 1});
    }
    return accumulate(samples, slices, n2, samples.grid.axes[1].spacing(), m, lags);
}

std::string to_string(EstimateStatus s) {
    switch (s) {
    case EstimateStatus::Point:
        return "point";
    case EstimateStatus::LowerBound:
        return "lower_bound";
    case EstimateStatus::Degenerate:
        return "degenerate";
    }
    return "degenerate";
}

PathEstimate estimate_path_regularity(const PathSamples& samples, const PathConfig& cfg) {
    if (samples.grid.dim() != 1) {
        throw DimensionError("estimate_path_regularity: samples must lie on a 1-D grid; use axiswise_regularity");
    }
    return estimate(
        samples, cfg, [&](int m, const std::vector<int>& lags) { return structure_function(samples, m, lags); },
        samples.grid.axes[0].count);
}

std::vector<PathEstimate> axiswise_regularity(const PathSamples& samples, const PathConfig& cfg) {
    if (samples.grid.dim() != 2) {
        throw DimensionError("axiswise_regularity: samples must lie on a 2-D grid");
    }
    std::vector<PathEstimate> out;
    for (std::size_t axis = 0; axis < 2; ++axis) {
        out.push_back(estimate(
            samples, cfg,
            [&](int m, const std::vector<int>& lags) { return structure_function_axis(samples, axis, m, lags); },
            samples.grid.axes[axis].count));
    }
    return out;
}

} // namespace gpreg
