#include "commands.hpp"

#include "gpreg/errors.hpp"
#include "gpreg/gp_sampler.hpp"
#include "gpreg/json_io.hpp"
#include "gpreg/kernel_parser.hpp"
#include "gpreg/numeric_verify.hpp"
#include "gpreg/path_stats.hpp"
#include "gpreg/regularity.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

namespace gpreg::cli {

namespace {

using json::Json;

struct RunConfig {
    std::string kernel;
    std::string grid;
    std::optional<int> count;
    std::uint64_t seed = 42;
    std::string out;
    std::string format = "json";
    std::string sample_format = "csv";
    std::optional<double> tol;
    int max_order = 3;
    std::string profile;
    std::string samples;
    std::string alpha;
    int max_m = 4;
    bool no_sample = false;
};

// A usage problem detected after flag parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

KernelExpr require_kernel(const RunConfig& rc) {
    if (rc.kernel.empty()) {
        throw UsageError("a kernel expression is required");
    }
    return parse_kernel(rc.kernel);
}

VerifyConfig verify_config(const RunConfig& rc) {
    VerifyConfig cfg;
    if (rc.tol) {
        if (!(*rc.tol > 0.0)) {
            throw UsageError("--tol must be positive");
        }
        cfg.tol = *rc.tol;
        cfg.log_tol = std::max(cfg.log_tol, *rc.tol);
    }
    if (rc.max_order < 0 || rc.max_order > 6) {
        throw UsageError("--max-order must be in [0, 6]");
    }
    cfg.max_order = rc.max_order;
    return cfg;
}

// Default grids. The desk profile pins the sizes used by the acceptance table.
Grid default_grid(const KernelExpr& e, bool desk) {
    const auto positive = positive_axes(e);
    const auto axis = [&](std::size_t i, int n) {
        const double lo = positive[i] ? 1.0 : 0.0;
        return GridAxis{lo, lo + 1.0, n};
    };
    if (e.dim() == 1) {
        return Grid{{axis(0, desk ? 4097 : 1025)}};
    }
    if (e.dim() == 2) {
        const int n = desk ? 128 : 64;
        return Grid{{axis(0, n), axis(1, n)}};
    }
    throw DimensionError("sampling supports 1-D and 2-D kernels; this kernel has dimension "
                         + std::to_string(e.dim()));
}

Grid resolve_grid(const RunConfig& rc, const KernelExpr& e) {
    if (!rc.grid.empty()) {
        return Grid::parse(rc.grid);
    }
    return default_grid(e, rc.profile == "desk");
}

int resolve_count(const RunConfig& rc, const KernelExpr& e, int fallback) {
    if (rc.count) {
        if (*rc.count < 1) {
            throw UsageError("--count must be positive");
        }
        return *rc.count;
    }
    if (rc.profile == "desk") {
        return e.dim() == 1 ? 200 : 100;
    }
    return fallback;
}

fd::MultiIndex parse_alpha(const std::string& text, int dim) {
    fd::MultiIndex alpha;
    if (text.empty()) {
        return fd::MultiIndex(static_cast<std::size_t>(dim), 0);
    }
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(part, &used);
            if (used != part.size() || v < 0) {
                throw std::invalid_argument(part);
            }
            alpha.push_back(v);
        } catch (const std::logic_error&) {
            throw UsageError("--alpha expects comma-separated nonnegative integers, got '" + text + "'");
        }
    }
    if (static_cast<int>(alpha.size()) != dim) {
        throw UsageError("--alpha has " + std::to_string(alpha.size()) + " entries; the kernel has dimension "
                         + std::to_string(dim));
    }
    return alpha;
}

std::string sidecar_path(const std::string& csv) {
    std::filesystem::path p(csv);
    p.replace_extension(".json");
    if (p == std::filesystem::path(csv)) {
        p += ".meta.json";
    }
    return p.string();
}

std::string to_csv(const PathSamples& s) {
    std::ostringstream os;
    write_samples_csv(os, s);
    return os.str();
}

void emit(std::ostream& out, const Json& j) {
    out << j.dump(2) << '\n';
}

std::string order_cell(const Order& o) {
    return o.to_string();
}

// --- analyze ---------------------------------------------------------------

int cmd_analyze(const RunConfig& rc, std::ostream& out) {
    const KernelExpr e = require_kernel(rc);
    const RegularityReport r = infer_regularity(e);
    if (rc.format == "csv") {
        out << "kernel,axis,order,sharp,log_corrected,sobolev_order\n";
        for (std::size_t i = 0; i < r.per_axis.size(); ++i) {
            const auto& a = r.per_axis[i];
            out << '"' << r.kernel << "\"," << i << ',' << order_cell(a.order) << ',' << a.sharp << ','
                << a.log_corrected << ','
                << (r.sobolev_order == kInfiniteSobolev ? std::string("inf") : std::to_string(r.sobolev_order))
                << '\n';
        }
        return Ok;
    }
    emit(out, json::report(r));
    return Ok;
}

// --- verify ----------------------------------------------------------------

int cmd_verify(const RunConfig& rc, std::ostream& out) {
    const KernelExpr e = require_kernel(rc);
    const VerifyReport r = verify_regularity(e, verify_config(rc));
    if (rc.format == "csv") {
        out << "kernel,axis,predicted,detected,method,verdict\n";
        for (std::size_t i = 0; i < r.axes.size(); ++i) {
            const auto& a = r.axes[i];
            out << '"' << a.kernel << "\"," << i << ',' << order_cell(a.predicted.order) << ','
                << json::Json(a.detected_order).dump() << ',' << a.method << ',' << to_string(a.verdict) << '\n';
        }
    } else {
        emit(out, json::verification(r));
    }
    return r.passed() ? Ok : VerifyFailed;
}

// --- sample ----------------------------------------------------------------

PathSamples draw(const RunConfig& rc, const KernelExpr& e, int fallback_count) {
    const Grid grid = resolve_grid(rc, e);
    const int count = resolve_count(rc, e, fallback_count);
    const fd::MultiIndex alpha = parse_alpha(rc.alpha, e.dim());
    const bool derivative = std::any_of(alpha.begin(), alpha.end(), [](int a) { return a > 0; });
    return derivative ? sample_derivative_paths(e, alpha, grid, count, rc.seed)
                      : sample_paths(e, grid, count, rc.seed);
}

int cmd_sample(const RunConfig& rc, std::ostream& out) {
    const KernelExpr e = require_kernel(rc);
    const PathSamples s = draw(rc, e, 1);
    const Json meta = json::sample_metadata(s);
    if (rc.out.empty()) {
        if (rc.sample_format == "json") {
            emit(out, meta);
        } else {
            out << to_csv(s);
        }
        return Ok;
    }
    json::write_atomic(rc.out, to_csv(s));
    json::write_atomic(sidecar_path(rc.out), meta.dump(2) + "\n");
    emit(out, meta);
    return Ok;
}

// --- estimate --------------------------------------------------------------

std::vector<Json> estimates(const PathSamples& s, const std::string& kernel, const PathConfig& cfg) {
    std::vector<Json> out;
    if (s.grid.dim() == 1) {
        out.push_back(json::estimate(estimate_path_regularity(s, cfg), kernel, "x"));
    } else {
        const auto both = axiswise_regularity(s, cfg);
        out.push_back(json::estimate(both[0], kernel, "x"));
        out.push_back(json::estimate(both[1], kernel, "y"));
    }
    return out;
}

PathConfig path_config(const RunConfig& rc) {
    PathConfig cfg;
    if (rc.max_m < 1 || rc.max_m > 8) {
        throw UsageError("--max-m must be in [1, 8]");
    }
    cfg.max_m = rc.max_m;
    return cfg;
}

Json as_single_or_array(const std::vector<Json>& items) {
    if (items.size() == 1) {
        return items.front();
    }
    Json arr = Json::array();
    for (const auto& i : items) {
        arr.push_back(i);
    }
    return arr;
}

int cmd_estimate(const RunConfig& rc, std::ostream& out) {
    const PathConfig cfg = path_config(rc);
    if (!rc.samples.empty()) {
        if (!rc.kernel.empty() || !rc.grid.empty() || rc.count) {
            throw UsageError("--samples reads existing draws; do not combine it with a kernel, --grid or --count");
        }
        std::ifstream in(rc.samples);
        if (!in) {
            throw std::runtime_error("cannot open samples file '" + rc.samples + "'");
        }
        PathSamples s = read_samples_csv(in);
        std::ifstream side(sidecar_path(rc.samples));
        if (side) {
            const auto meta = Json::parse(side, nullptr, false);
            if (!meta.is_discarded() && meta.contains("kernel") && meta["kernel"].is_string()) {
                s.kernel = meta["kernel"].get<std::string>();
            }
        }
        const std::string kernel = s.kernel.empty() ? std::string("unknown") : s.kernel;
        emit(out, as_single_or_array(estimates(s, kernel, cfg)));
        return Ok;
    }
    const KernelExpr e = require_kernel(rc);
    const PathSamples s = draw(rc, e, 100);
    emit(out, as_single_or_array(estimates(s, s.kernel, cfg)));
    return Ok;
}

// --- report ----------------------------------------------------------------

// k(c, p) over the grid for 2-D kernels (c the grid centre), k(x, y) over
// grid x grid for 1-D kernels, on at most 129 points per axis.
std::string kernel_surface_csv(const KernelExpr& e, const Grid& grid) {
    const auto thin = [](const GridAxis& a) {
        if (a.count <= 129) {
            return a;
        }
        return GridAxis{a.start, a.end, 129};
    };
    std::ostringstream os;
    char buf[64];
    const auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    os << "x,y,k\n";
    if (grid.dim() == 1) {
        const GridAxis a = thin(grid.axes[0]);
        for (int i = 0; i < a.count; ++i) {
            for (int j = 0; j < a.count; ++j) {
                os << num(a.at(i)) << ',' << num(a.at(j)) << ',' << num(eval(e, a.at(i), a.at(j))) << '\n';
            }
        }
        return os.str();
    }
    const GridAxis a = thin(grid.axes[0]);
    const GridAxis b = thin(grid.axes[1]);
    const double centre[2] = {0.5 * (a.start + a.end), 0.5 * (b.start + b.end)};
    for (int i = 0; i < a.count; ++i) {
        for (int j = 0; j < b.count; ++j) {
            const double p[2] = {a.at(i), b.at(j)};
            os << num(p[0]) << ',' << num(p[1]) << ',' << num(eval(e, Point(centre, 2), Point(p, 2))) << '\n';
        }
    }
    return os.str();
}

std::string first_path_csv(const PathSamples& s) {
    std::ostringstream os;
    char buf[64];
    const auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    os << (s.grid.dim() == 1 ? "x,f\n" : "x,y,f\n");
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
        for (double c : s.grid.point(i)) {
            os << num(c) << ',';
        }
        os << num(s.samples(0, static_cast<Eigen::Index>(i))) << '\n';
    }
    return os.str();
}

int cmd_report(const RunConfig& rc, std::ostream& out) {
    const KernelExpr e = require_kernel(rc);
    const RegularityReport analysis = infer_regularity(e);
    const VerifyReport verification = verify_regularity(e, analysis, verify_config(rc));
    const std::filesystem::path dir = rc.out.empty() ? std::filesystem::path(".") : std::filesystem::path(rc.out);
    std::filesystem::create_directories(dir);

    Json j;
    j["kernel"] = analysis.kernel;
    j["analyze"] = json::report(analysis);
    j["verify"] = json::verification(verification);

    const Grid grid = resolve_grid(rc, e);
    check_grid_for_kernel(e, grid);
    const std::string surface = (dir / "kernel_surface.csv").string();
    json::write_atomic(surface, kernel_surface_csv(e, grid));
    j["files"]["kernel_surface"] = surface;

    if (rc.no_sample) {
        j["estimate"] = {{"skipped", true}, {"reason", "sampling disabled by --no-sample"}};
    } else {
        const PathSamples s = draw(rc, e, 100);
        const std::string path = (dir / "sample_path.csv").string();
        json::write_atomic(path, first_path_csv(s));
        j["files"]["sample_path"] = path;
        j["sample"] = json::sample_metadata(s);
        j["estimate"] = as_single_or_array(estimates(s, s.kernel, path_config(rc)));
    }
    emit(out, j);
    return verification.passed() ? Ok : VerifyFailed;
}

// --- wiring ----------------------------------------------------------------

void add_kernel(CLI::App* sub, RunConfig& rc) {
    sub->add_option("kernel,-k,--kernel", rc.kernel, "Kernel expression");
}

void add_numeric(CLI::App* sub, RunConfig& rc) {
    sub->add_option("--tol", rc.tol, "Tolerance on the detected order");
    sub->add_option("--max-order", rc.max_order, "Highest derivative order probed")->capture_default_str();
}

void add_sampling(CLI::App* sub, RunConfig& rc) {
    sub->add_option("--grid", rc.grid, "Grid a:b:n or a:b:n,c:d:m");
    sub->add_option("--count", rc.count, "Number of draws");
    sub->add_option("--seed", rc.seed, "Random seed")->capture_default_str();
    sub->add_option("--alpha", rc.alpha, "Derivative multi-index, comma separated");
    sub->add_option("--profile", rc.profile, "Parameter profile")->check(CLI::IsMember({"desk"}));
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig rc;
    CLI::App app{"Sample-path regularity of Gaussian processes from their covariance kernel", "gpreg"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "gpreg 1.0.0");

    auto* analyze = app.add_subcommand("analyze", "Infer the regularity order symbolically");
    add_kernel(analyze, rc);
    analyze->add_option("--format", rc.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    auto* verify = app.add_subcommand("verify", "Check the inferred order numerically on the kernel");
    add_kernel(verify, rc);
    add_numeric(verify, rc);
    verify->add_option("--format", rc.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    verify->add_option("--profile", rc.profile, "Parameter profile")->check(CLI::IsMember({"desk"}));

    auto* sample = app.add_subcommand("sample", "Draw sample paths on a grid");
    add_kernel(sample, rc);
    add_sampling(sample, rc);
    sample->add_option("--out", rc.out, "CSV output path; a JSON sidecar is written next to it");
    sample->add_option("--format", rc.sample_format, "Standard output format without --out: csv or json")
        ->check(CLI::IsMember({"json", "csv"}));

    auto* estimate = app.add_subcommand("estimate", "Estimate the path regularity from draws");
    add_kernel(estimate, rc);
    add_sampling(estimate, rc);
    estimate->add_option("--samples", rc.samples, "CSV of draws written by the sample command");
    estimate->add_option("--max-m", rc.max_m, "Highest increment order")->capture_default_str();

    auto* report = app.add_subcommand("report", "Combined analysis, verification and estimation");
    add_kernel(report, rc);
    add_numeric(report, rc);
    add_sampling(report, rc);
    report->add_option("--out", rc.out, "Directory for kernel_surface.csv and sample_path.csv");
    report->add_option("--max-m", rc.max_m, "Highest increment order")->capture_default_str();
    report->add_flag("--no-sample", rc.no_sample, "Skip sampling and estimation");

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? Ok : Usage;
    }

    try {
        if (*analyze) return cmd_analyze(rc, out);
        if (*verify) return cmd_verify(rc, out);
        if (*sample) return cmd_sample(rc, out);
        if (*estimate) return cmd_estimate(rc, out);
        if (*report) return cmd_report(rc, out);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return Usage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return Usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return Runtime;
    }
    return Usage;
}

} // namespace gpreg::cli
