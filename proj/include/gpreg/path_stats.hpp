#pragma once

#include "gpreg/gp_sampler.hpp"
#include "gpreg/numeric_verify.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gpreg {

struct StructureFunction {
    int m = 1;
    std::vector<int> lags;            // in grid steps
    std::vector<double> lag_lengths;  // physical units
    std::vector<double> values;       // S_m(h) = mean over x and draws of |Delta_h^m f(x)|^2
};

/// Lags in grid steps between 4 and span/8: round(4 * 2^{k/4}), deduplicated.
[[nodiscard]] std::vector<int> default_lags(int points);

/// S_m on 1-D samples. Lags must satisfy 1 <= lag and m * lag < points.
[[nodiscard]] StructureFunction structure_function(const PathSamples& samples, int m, const std::vector<int>& lags);

/// Axis-wise S_m on 2-D samples, averaged over every slice along `axis`.
[[nodiscard]] StructureFunction structure_function_axis(const PathSamples& samples, std::size_t axis, int m,
                                                        const std::vector<int>& lags);

struct PathConfig {
    int max_m = 4;
    int min_samples = 50;
    double saturation_margin = 0.2; // saturated when slope > 2m - margin
};

enum class EstimateStatus { Point, LowerBound, Degenerate };
[[nodiscard]] std::string to_string(EstimateStatus s);

struct PathEstimate {
    EstimateStatus status = EstimateStatus::Degenerate;
    double s_hat = 0.0;              // point estimate, or the lower bound max_m
    int m_used = 0;
    std::optional<ExponentFit> fit;  // fit at m_used
    StructureFunction structure;     // at m_used
};

/// Adaptive-order estimate: start at m = 1, move to m + 1 while the slope of
/// log S_m against log h exceeds 2m - margin, return s_hat = slope / 2 at the
/// first unsaturated m. Saturation at max_m gives a lower bound; structure
/// functions at rounding level give Degenerate.
[[nodiscard]] PathEstimate estimate_path_regularity(const PathSamples& samples, const PathConfig& cfg = {});

/// One estimate per axis of a 2-D sample set.
[[nodiscard]] std::vector<PathEstimate> axiswise_regularity(const PathSamples& samples, const PathConfig& cfg = {});

} // namespace gpreg
