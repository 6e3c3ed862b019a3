#include "gpreg/gp_sampler.hpp"

#include "gpreg/errors.hpp"
#include "gpreg/kernel_parser.hpp"
#include "gpreg/regularity.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace gpreg {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double parse_double(std::string_view s, const std::string& what) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw DomainError(what + ": cannot parse '" + std::string(s) + "' as a number");
    }
    return v;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) {
        return {};
    }
    return s.substr(first, s.find_last_not_of(" \t") - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

// Structured factorization applies to a top-level tensor of 1-D factors on a 2-D grid.
bool kronecker_structured(const KernelExpr& e, const Grid& grid) {
    const auto* t = e.as<TensorProduct>();
    return t && grid.dim() == 2 && t->children.size() == 2 && t->children[0].dim() == 1
        && t->children[1].dim() == 1;
}

Eigen::MatrixXd draw_normals(std::uint64_t seed, std::size_t n, int count) {
    Eigen::MatrixXd z(static_cast<Eigen::Index>(n), count);
    for (int d = 0; d < count; ++d) {
        const auto col = standard_normals(seed, static_cast<std::uint64_t>(d), n);
        z.col(d) = Eigen::Map<const Eigen::VectorXd>(col.data(), static_cast<Eigen::Index>(n));
    }
    return z;
}

void check_count(int count) {
    if (count < 1) {
        throw DomainError("sample count must be >= 1, got " + std::to_string(count));
    }
}

void gate(const KernelExpr& e, const fd::MultiIndex& alpha) {
    const auto report = infer_regularity(e);
    std::vector<std::size_t> groups; // coordinates per regularity axis
    if (report.per_axis.size() > 1) {
        for (const auto& f : e.as<TensorProduct>()->children) {
            groups.push_back(static_cast<std::size_t>(f.dim()));
        }
    } else {
        groups.push_back(alpha.size());
    }
    std::size_t offset = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        int order = 0;
        for (std::size_t i = offset; i < offset + groups[g]; ++i) {
            order += alpha[i];
        }
        offset += groups[g];
        const Order& s = report.per_axis[g].order;
        if (order > 0 && !(Order::from_double(order) < s)) {
            throw GateError("derivative of order " + std::to_string(order) + " requested, but samples are only in C^{"
                            + s.to_string() + "-}" + (groups.size() > 1 ? " along axis " + std::to_string(g) : ""));
        }
    }
}

} // namespace

double GridAxis::at(int i) const {
    if (i == count - 1) {
        return end;
    }
    return start + (end - start) * (static_cast<double>(i) / (count - 1));
}

Grid Grid::parse(std::string_view spec) {
    Grid g;
    for (auto part : split(spec, ',')) {
        auto fields = split(part, ':');
        for (auto& f : fields) {
            f = trim(f);
        }
        if (fields.size() != 3) {
            throw DomainError("grid axis must look like start:end:count, got '" + std::string(part) + "'");
        }
        GridAxis a;
        a.start = parse_double(fields[0], "grid start");
        a.end = parse_double(fields[1], "grid end");
        const double n = parse_double(fields[2], "grid count");
        if (n != std::floor(n) || n > 1e7) {
            throw DomainError("grid count must be an integer, got '" + std::string(fields[2]) + "'");
        }
        a.count = static_cast<int>(n);
        g.axes.push_back(a);
    }
    if (g.axes.empty() || g.axes.size() > 2) {
        throw DomainError("grid must have one or two axes");
    }
    g.validate();
    return g;
}

Grid Grid::line(double start, double end, int count) {
    Grid g{{GridAxis{start, end, count}}};
    g.validate();
    return g;
}

Grid Grid::square(double start, double end, int count) {
    Grid g{{GridAxis{start, end, count}, GridAxis{start, end, count}}};
    g.validate();
    return g;
}

std::size_t Grid::size() const {
    std::size_t n = 1;
    for (const auto& a : axes) {
        n *= static_cast<std::size_t>(a.count);
    }
    return n;
}

std::vector<double> Grid::point(std::size_t index) const {
    std::vector<double> p(axes.size());
    for (std::size_t k = axes.size(); k-- > 0;) {
        const auto n = static_cast<std::size_t>(axes[k].count);
        p[k] = axes[k].at(static_cast<int>(index % n));
        index /= n;
    }
    return p;
}

std::vector<std::vector<double>> Grid::points() const {
    std::vector<std::vector<double>> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) {
        out.push_back(point(i));
    }
    return out;
}

std::string Grid::to_string() const {
    std::string out;
    for (std::size_t k = 0; k < axes.size(); ++k) {
        out += (k ? "," : "") + format_number(axes[k].start) + ":" + format_number(axes[k].end) + ":"
            + std::to_string(axes[k].count);
    }
    return out;
}

void Grid::validate() const {
    if (axes.empty() || axes.size() > 2) {
        throw DomainError("grid must have one or two axes");
    }
    for (const auto& a : axes) {
        if (!std::isfinite(a.start) || !std::isfinite(a.end) || !(a.start < a.end)) {
            throw DomainError("grid axis needs start < end, got " + format_number(a.start) + ":"
                              + format_number(a.end));
        }
        if (a.count < 2) {
            throw DomainError("grid axis needs at least 2 points, got " + std::to_string(a.count));
        }
    }
}

namespace {

struct Interval {
    double lo, hi;
};

// Pushes the grid box through warps and throws when a Wiener leaf could see a
// nonpositive coordinate.
void check_wiener_inputs(const KernelExpr& e, const std::vector<Interval>& box) {
    if (e.as<Wiener>()) {
        if (!(box.front().lo > 0.0)) {
            throw DomainError("a wiener() leaf would receive the nonpositive coordinate "
                              + format_number(box.front().lo) + " on this grid");
        }
        return;
    }
    if (const auto* w = e.as<Warp>()) {
        std::vector<Interval> mapped;
        for (const auto& iv : box) {
            if (w->warp.family == WarpFamily::Affine) {
                const double a = w->warp.scale * iv.lo + w->warp.shift;
                const double b = w->warp.scale * iv.hi + w->warp.shift;
                mapped.push_back({std::min(a, b), std::max(a, b)});
            } else {
                const double lo = iv.lo <= 0.0 && iv.hi >= 0.0 ? 0.0 : std::min(std::abs(iv.lo), std::abs(iv.hi));
                const double hi = std::max(std::abs(iv.lo), std::abs(iv.hi));
                mapped.push_back({std::pow(lo, w->warp.beta), std::pow(hi, w->warp.beta)});
            }
        }
        check_wiener_inputs(w->child, mapped);
        return;
    }
    if (const auto* t = e.as<TensorProduct>()) {
        std::size_t offset = 0;
        for (const auto& f : t->children) {
            const auto n = static_cast<std::size_t>(f.dim());
            check_wiener_inputs(f, std::vector<Interval>(box.begin() + static_cast<std::ptrdiff_t>(offset),
                                                         box.begin() + static_cast<std::ptrdiff_t>(offset + n)));
            offset += n;
        }
        return;
    }
    for (const auto& child : children(e)) {
        check_wiener_inputs(child, box);
    }
}

} // namespace

void check_grid_for_kernel(const KernelExpr& e, const Grid& grid) {
    grid.validate();
    if (grid.dim() != static_cast<std::size_t>(e.dim())) {
        throw DimensionError("grid has dimension " + std::to_string(grid.dim()) + " but the kernel has input dimension "
                             + std::to_string(e.dim()));
    }
    const auto positive = positive_axes(e);
    for (std::size_t k = 0; k < grid.dim(); ++k) {
        if (positive[k] && !(grid.axes[k].start > 0.0)) {
            throw DomainError("kernel requires strictly positive coordinates on axis " + std::to_string(k)
                              + ", but the grid starts at " + format_number(grid.axes[k].start));
        }
    }
    std::vector<Interval> box;
    for (const auto& a : grid.axes) {
        box.push_back({a.start, a.end});
    }
    check_wiener_inputs(e, box);
}

Eigen::MatrixXd build_gram(const KernelExpr& e, const std::vector<std::vector<double>>& points) {
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
            const double v = eval(e, points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]);
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

Eigen::MatrixXd build_gram(const KernelExpr& e, const Grid& grid) {
    check_grid_for_kernel(e, grid);
    return build_gram(e, grid.points());
}

Eigen::MatrixXd build_derivative_gram(const KernelExpr& e, const std::vector<std::vector<double>>& points,
                                      const fd::MultiIndex& alpha, double s) {
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
            const double v = fd::mixed_derivative(e, points[static_cast<std::size_t>(i)],
                                                  points[static_cast<std::size_t>(j)], alpha, alpha, s);
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

CholeskyResult cholesky_with_jitter(const Eigen::MatrixXd& a, const JitterPolicy& policy) {
    if (a.rows() != a.cols()) {
        throw DimensionError("cholesky_with_jitter: matrix is not square");
    }
    const auto n = a.rows();
    if (n == 0) {
        return {Eigen::MatrixXd(0, 0), 0.0};
    }
    const double mean_diag = a.trace() / static_cast<double>(n);
    if (!(mean_diag > 0.0) || !std::isfinite(mean_diag)) {
        throw NumericalError("cholesky_with_jitter: trace must be positive and finite");
    }
    const double budget = policy.max_relative * mean_diag;
    double jitter = 0.0;
    Eigen::MatrixXd work;
    while (true) {
        work = a;
        work.diagonal().array() += jitter;
        Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(work);
        if (llt.info() == Eigen::Success) {
            work.triangularView<Eigen::StrictlyUpper>().setZero();
            return {std::move(work), jitter};
        }
        const double next = jitter == 0.0 ? policy.initial_relative * mean_diag : jitter * policy.growth;
        if (next > budget * (1.0 + 1e-12)) {
            throw NumericalError("cholesky_with_jitter: jitter budget " + format_number(budget)
                                 + " exhausted; the matrix is not numerically positive semidefinite");
        }
        jitter = next;
    }
}

std::vector<double> standard_normals(std::uint64_t seed, std::uint64_t draw, std::size_t n) {
    const std::uint64_t key = splitmix64(splitmix64(seed) ^ (0xD1B54A32D192ED03ULL * (draw + 1)));
    auto uniform = [key](std::uint64_t i) {
        return (static_cast<double>(splitmix64(key + i) >> 11) + 0.5) * 0x1.0p-53;
    };
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; i += 2) {
        const double u1 = uniform(i);
        const double u2 = uniform(i + 1);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        z[i] = r * std::cos(theta);
        if (i + 1 < n) {
            z[i + 1] = r * std::sin(theta);
        }
    }
    return z;
}

PathSamples sample_paths(const KernelExpr& e, const Grid& grid, int count, std::uint64_t seed) {
    check_count(count);
    check_grid_for_kernel(e, grid);
    PathSamples out;
    out.grid = grid;
    out.kernel = print_kernel(e);
    out.seed = seed;
    out.alpha.assign(grid.dim(), 0);
    const Eigen::MatrixXd z = draw_normals(seed, grid.size(), count);

    if (kronecker_structured(e, grid)) {
        const auto& t = *e.as<TensorProduct>();
        const auto c1 = cholesky_with_jitter(build_gram(t.children[0], Grid{{grid.axes[0]}}));
        const auto c2 = cholesky_with_jitter(build_gram(t.children[1], Grid{{grid.axes[1]}}));
        out.factor_jitter = {c1.jitter, c2.jitter};
        out.jitter_used = std::max(c1.jitter, c2.jitter);
        const Eigen::Index n1 = grid.axes[0].count;
        const Eigen::Index n2 = grid.axes[1].count;
        out.samples.resize(count, n1 * n2);
        for (int d = 0; d < count; ++d) {
            // Row-major z reshaped to n1 x n2: (L1 (x) L2) z = L1 Z L2^T.
            Eigen::MatrixXd zm(n1, n2);
            for (Eigen::Index i = 0; i < n1; ++i) {
                zm.row(i) = z.col(d).segment(i * n2, n2).transpose();
            }
            const Eigen::MatrixXd f = c1.lower.triangularView<Eigen::Lower>() * zm
                * c2.lower.triangularView<Eigen::Lower>().transpose();
            for (Eigen::Index i = 0; i < n1; ++i) {
                out.samples.row(d).segment(i * n2, n2) = f.row(i);
            }
        }
        return out;
    }

    const auto chol = cholesky_with_jitter(build_gram(e, grid.points()));
    out.jitter_used = chol.jitter;
    out.samples = (chol.lower.triangularView<Eigen::Lower>() * z).transpose();
    return out;
}

PathSamples sample_derivative_paths(const KernelExpr& e, const fd::MultiIndex& alpha, const Grid& grid, int count,
                                    std::uint64_t seed) {
    check_count(count);
    check_grid_for_kernel(e, grid);
    if (alpha.size() != grid.dim()) {
        throw DimensionError("alpha has " + std::to_string(alpha.size()) + " entries, grid dimension is "
                             + std::to_string(grid.dim()));
    }
    const int order = std::accumulate(alpha.begin(), alpha.end(), 0);
    if (order == 0) {
        return sample_paths(e, grid, count, seed);
    }
    gate(e, alpha);
    double spacing = grid.axes[0].spacing();
    for (const auto& a : grid.axes) {
        spacing = std::min(spacing, a.spacing());
    }
    const double s = fd::derivative_kernel_step(order, spacing, std::min(1.0, characteristic_length(e)));
    const auto points = grid.points();
    const auto chol = cholesky_with_jitter(build_derivative_gram(e, points, alpha, s));
    PathSamples out;
    out.grid = grid;
    out.kernel = print_kernel(e);
    out.seed = seed;
    out.alpha = alpha;
    out.derivative_step = s;
    out.jitter_used = chol.jitter;
    out.samples = (chol.lower.triangularView<Eigen::Lower>() * draw_normals(seed, grid.size(), count)).transpose();
    return out;
}

void write_samples_csv(std::ostream& out, const PathSamples& samples) {
    const std::size_t dim = samples.grid.dim();
    out << (dim == 2 ? "x,y" : "x");
    for (Eigen::Index d = 0; d < samples.samples.rows(); ++d) {
        out << ",s" << d;
    }
    out << '\n';
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (std::size_t p = 0; p < samples.grid.size(); ++p) {
        const auto x = samples.grid.point(p);
        for (std::size_t k = 0; k < dim; ++k) {
            if (k) {
                out << ',';
            }
            put(x[k]);
        }
        for (Eigen::Index d = 0; d < samples.samples.rows(); ++d) {
            out << ',';
            put(samples.samples(d, static_cast<Eigen::Index>(p)));
        }
        out << '\n';
    }
}

PathSamples read_samples_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw DomainError("samples CSV is empty");
    }
    const auto header = split(line, ',');
    std::size_t dim = 0;
    if (header.size() >= 2 && header[0] == "x" && header[1] == "y") {
        dim = 2;
    } else if (!header.empty() && header[0] == "x") {
        dim = 1;
    } else {
        throw DomainError("samples CSV header must start with x or x,y");
    }
    const std::size_t count = header.size() - dim;
    if (count == 0) {
        throw DomainError("samples CSV has no sample columns");
    }
    std::vector<std::vector<double>> coords(dim);
    std::vector<std::vector<double>> columns(count);
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) {
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != header.size()) {
            throw DomainError("samples CSV row " + std::to_string(row) + " has " + std::to_string(fields.size())
                              + " fields, expected " + std::to_string(header.size()));
        }
        for (std::size_t k = 0; k < dim; ++k) {
            coords[k].push_back(parse_double(fields[k], "samples CSV"));
        }
        for (std::size_t c = 0; c < count; ++c) {
            columns[c].push_back(parse_double(fields[dim + c], "samples CSV"));
        }
    }
    const std::size_t n = coords[0].size();
    PathSamples out;
    // Recover axes: the last axis varies fastest.
    if (dim == 1) {
        out.grid.axes = {GridAxis{coords[0].front(), coords[0].back(), static_cast<int>(n)}};
    } else {
        std::size_t n2 = 1;
        while (n2 < n && coords[0][n2] == coords[0][0]) {
            ++n2;
        }
        if (n2 == 0 || n % n2 != 0) {
            throw DomainError("samples CSV coordinates do not form a row-major grid");
        }
        out.grid.axes = {GridAxis{coords[0].front(), coords[0].back(), static_cast<int>(n / n2)},
                         GridAxis{coords[1].front(), coords[1][n2 - 1], static_cast<int>(n2)}};
    }
    out.grid.validate();
    if (out.grid.size() != n) {
        throw DomainError("samples CSV coordinates do not form a complete grid");
    }
    for (std::size_t p = 0; p < n; ++p) {
        const auto expect = out.grid.point(p);
        for (std::size_t k = 0; k < dim; ++k) {
            // Coordinates printed to six significant digits still identify the grid.
            const double tol = 1e-5 * std::abs(expect[k]) + 1e-3 * out.grid.axes[k].spacing();
            if (std::abs(coords[k][p] - expect[k]) > tol) {
                throw DomainError("samples CSV coordinates are not a uniform grid (row " + std::to_string(p + 2) + ")");
            }
        }
    }
    out.samples.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(n));
    for (std::size_t c = 0; c < count; ++c) {
        for (std::size_t p = 0; p < n; ++p) {
            out.samples(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(p)) = columns[c][p];
        }
    }
    out.alpha.assign(dim, 0);
    return out;
}

} // namespace gpreg
