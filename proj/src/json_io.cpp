#include "gpreg/json_io.hpp"

#include "gpreg/errors.hpp"
#include "gpreg/kernel_parser.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <system_error>

namespace gpreg::json {

namespace {

Json number_or_null(double v) {
    return std::isfinite(v) ? Json(v) : Json(nullptr);
}

Json detected(const AxisVerification& a) {
    Json d;
    d["n"] = a.detected_n;
    d["order"] = number_or_null(a.detected_order);
    d["smooth_to_probed"] = a.smooth_to_probed;
    if (a.fit) {
        d["slope"] = a.fit->slope;
        d["r2"] = a.fit->r_squared;
        d["scales"] = a.fit->scales;
    } else {
        d["slope"] = nullptr;
        d["r2"] = nullptr;
        d["scales"] = Json::array();
    }
    d["method"] = a.method;
    d["kernel"] = a.kernel;
    d["predicted_order"] = order(a.predicted.order);
    d["tolerance"] = a.tolerance;
    d["verdict"] = to_string(a.verdict);
    if (!a.note.empty()) {
        d["note"] = a.note;
    }
    return d;
}

} // namespace

Json order(const Order& o) {
    if (o.is_infinite()) {
        return "inf";
    }
    return o.value();
}

Json regularity(const Regularity& r) {
    Json j;
    j["order"] = order(r.order);
    j["order_exact"] = r.order.exact_value() ? Json(r.order.to_string()) : Json(nullptr);
    j["sharp"] = r.sharp;
    j["log_corrected"] = r.log_corrected;
    return j;
}

Json report(const RegularityReport& r) {
    Json j;
    j["kernel"] = r.kernel;
    j["per_axis"] = Json::array();
    for (const auto& a : r.per_axis) {
        j["per_axis"].push_back(regularity(a));
    }
    j["sobolev_order"] = r.sobolev_order == kInfiniteSobolev ? Json("inf") : Json(r.sobolev_order);
    j["derivation"] = r.derivation;
    return j;
}

Json fit(const ExponentFit& f) {
    Json j;
    j["slope"] = f.slope;
    j["intercept"] = f.intercept;
    j["r2"] = f.r_squared;
    j["residual_max"] = f.residual_max;
    j["scales"] = f.scales;
    j["values"] = f.values;
    return j;
}

Json verification(const VerifyReport& r) {
    Json j;
    j["kernel"] = r.predicted.kernel;
    j["predicted"] = report(r.predicted);
    if (r.axes.size() == 1) {
        j["detected"] = detected(r.axes.front());
    } else {
        j["detected"] = Json::array();
        for (const auto& a : r.axes) {
            j["detected"].push_back(detected(a));
        }
    }
    j["verdict"] = to_string(r.verdict);
    j["probes"] = Json::array();
    for (const auto& a : r.axes) {
        for (const auto& p : a.probes) {
            j["probes"].push_back({{"x", p.x}, {"slope", p.slope}});
        }
    }
    double spread = 0.0;
    for (const auto& a : r.axes) {
        spread = std::max(spread, a.uniformity_spread);
    }
    if (!j["probes"].empty()) {
        j["uniformity_spread"] = spread;
    }
    return j;
}

Json estimate(const PathEstimate& e, const std::string& kernel, const std::string& axis) {
    Json j;
    j["kernel"] = kernel;
    j["axis"] = axis;
    j["status"] = to_string(e.status);
    j["m_used"] = e.m_used;
    if (e.status == EstimateStatus::Point) {
        j["s_hat"] = e.s_hat;
    } else if (e.status == EstimateStatus::LowerBound) {
        j["lower_bound"] = e.s_hat;
    } else {
        j["s_hat"] = nullptr;
    }
    j["slope"] = e.fit ? Json(e.fit->slope) : Json(nullptr);
    j["r2"] = e.fit ? Json(e.fit->r_squared) : Json(nullptr);
    j["lags"] = e.structure.lag_lengths;
    j["lag_steps"] = e.structure.lags;
    j["structure_function"] = e.structure.values;
    return j;
}

Json sample_metadata(const PathSamples& s) {
    Json j;
    j["kernel"] = s.kernel;
    j["seed"] = s.seed;
    j["grid"] = s.grid.to_string();
    j["count"] = s.count();
    j["jitter_used"] = s.jitter_used;
    if (!s.factor_jitter.empty()) {
        j["factor_jitter"] = s.factor_jitter;
    }
    j["alpha"] = s.alpha;
    if (s.derivative_step > 0.0) {
        j["derivative_step"] = s.derivative_step;
    }
    return j;
}

void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
        }
        out << content;
        out.flush();
        if (!out) {
            throw std::runtime_error("write to '" + tmp.string() + "' failed");
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error("cannot move output into place at '" + path + "': " + ec.message());
    }
}

} // namespace gpreg::json
