#include "gpreg/errors.hpp"
#include "gpreg/kernel_parser.hpp"
#include "gpreg/path_stats.hpp"

#include <doctest.h>

#include <cmath>

using namespace gpreg;

namespace {

PathSamples synthetic(const Grid& grid, int count, double (*f)(const std::vector<double>&, int)) {
    PathSamples s;
    s.grid = grid;
    s.samples.resize(count, static_cast<Eigen::Index>(grid.size()));
    for (int d = 0; d < count; ++d) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            s.samples(d, static_cast<Eigen::Index>(i)) = f(grid.point(i), d);
        }
    }
    return s;
}

} // namespace

TEST_CASE("default lags") {
    const auto lags = default_lags(4097);
    CHECK(lags.front() == 4);
    CHECK(lags.back() <= 512);
    for (std::size_t i = 1; i < lags.size(); ++i) {
        CHECK(lags[i] > lags[i - 1]);
    }
    CHECK(default_lags(129) == std::vector<int>{4, 5, 6, 7, 8, 10, 11, 13, 16});
}

TEST_CASE("structure function vanishes on constants and affine paths") {
    const auto g = Grid::line(0.0, 1.0, 257);
    const auto c = synthetic(g, 3, [](const std::vector<double>&, int) { return 2.5; });
    for (int m = 1; m <= 4; ++m) {
        for (double v : structure_function(c, m, {4, 8, 16}).values) {
            CHECK(v == 0.0);
        }
    }
    const auto lin = synthetic(g, 2, [](const std::vector<double>& p, int) { return p[0]; });
    for (double v : structure_function(lin, 2, {4, 8, 16}).values) {
        CHECK(std::abs(v) <= 1e-28);
    }
    CHECK_THROWS_AS((void)structure_function(lin, 2, {200}), DomainError);
    CHECK_THROWS_AS((void)structure_function(lin, 0, {4}), DomainError);
}

TEST_CASE("structure function invariances") {
    const auto s = sample_paths(KernelExpr::matern(1.5), Grid::line(0.0, 1.0, 257), 60, 8);
    auto shifted = s;
    auto tilted = s;
    auto scaled = s;
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
        const double x = s.grid.point(i)[0];
        shifted.samples.col(static_cast<Eigen::Index>(i)).array() += 3.0;
        tilted.samples.col(static_cast<Eigen::Index>(i)).array() += 1.0 + 2.0 * x;
    }
    scaled.samples *= 3.0;
    const std::vector<int> lags{4, 6, 8, 12, 16};
    const auto base1 = structure_function(s, 1, lags);
    const auto base2 = structure_function(s, 2, lags);
    const auto sh = structure_function(shifted, 1, lags);
    const auto ti = structure_function(tilted, 2, lags);
    for (std::size_t i = 0; i < lags.size(); ++i) {
        CHECK(base1.values[i] >= 0.0);
        CHECK(std::abs(sh.values[i] - base1.values[i]) <= 1e-10 * base1.values[i]);
        CHECK(std::abs(ti.values[i] - base2.values[i]) <= 1e-8 * base2.values[i]);
    }
    const auto a = estimate_path_regularity(s);
    const auto b = estimate_path_regularity(scaled);
    REQUIRE(a.fit);
    REQUIRE(b.fit);
    CHECK(std::abs(a.fit->slope - b.fit->slope) <= 1e-12);
    CHECK(std::abs(a.s_hat - b.s_hat) <= 1e-12);
}

TEST_CASE("Wiener structure function equals the lag") {
    const auto s = sample_paths(KernelExpr::wiener(), Grid::line(1.0, 2.0, 4097), 200, 42);
    const auto sf = structure_function(s, 1, default_lags(4097));
    for (std::size_t i = 0; i < sf.values.size(); ++i) {
        CHECK(std::abs(sf.values[i] / sf.lag_lengths[i] - 1.0) <= 0.1);
    }
}

TEST_CASE("estimates for the Matern family") {
    const auto g = Grid::line(0.0, 1.0, 4097);
    const auto m05 = estimate_path_regularity(sample_paths(KernelExpr::matern(0.5), g, 200, 42));
    CHECK(m05.status == EstimateStatus::Point);
    CHECK(m05.m_used == 1);
    CHECK(std::abs(m05.s_hat - 0.5) <= 0.1);
    const auto m15 = estimate_path_regularity(sample_paths(KernelExpr::matern(1.5), g, 200, 42));
    CHECK(m15.status == EstimateStatus::Point);
    CHECK(m15.m_used == 2);
    CHECK(std::abs(m15.s_hat - 1.5) <= 0.15);
}

TEST_CASE("smooth paths saturate") {
    const auto s = sample_paths(KernelExpr::squared_exponential(), Grid::line(0.0, 1.28, 129), 200, 42);
    const auto e = estimate_path_regularity(s);
    CHECK(e.status == EstimateStatus::LowerBound);
    CHECK(e.s_hat == 4.0);
    CHECK(e.m_used == 4);
    const auto s2 = sample_paths(parse_kernel("se(dim=2)"), Grid::square(0.0, 0.64, 64), 60, 42);
    const auto both = axiswise_regularity(s2);
    REQUIRE(both.size() == 2);
    CHECK(both[0].status == EstimateStatus::LowerBound);
    CHECK(both[1].status == EstimateStatus::LowerBound);
}

TEST_CASE("degenerate and rejected inputs") {
    const auto g = Grid::line(0.0, 1.0, 257);
    const auto c = synthetic(g, 50, [](const std::vector<double>&, int) { return 1.0; });
    const auto e = estimate_path_regularity(c);
    CHECK(e.status == EstimateStatus::Degenerate);
    CHECK(std::isnan(e.s_hat));
    const auto few = synthetic(g, 10, [](const std::vector<double>& p, int) { return p[0]; });
    CHECK_THROWS_AS((void)estimate_path_regularity(few), DomainError);
    const auto coarse = synthetic(Grid::line(0.0, 1.0, 40), 50, [](const std::vector<double>& p, int) { return p[0]; });
    CHECK_THROWS_AS((void)estimate_path_regularity(coarse), DomainError);
    CHECK_THROWS_AS((void)axiswise_regularity(c), DimensionError);
    // A quadratic in every draw: S_1 and S_2 carry signal, S_3 vanishes.
    const auto quad = synthetic(g, 50, [](const std::vector<double>& p, int d) { return (d + 1) * p[0] * p[0]; });
    const auto q = estimate_path_regularity(quad);
    CHECK(q.status == EstimateStatus::LowerBound);
}

TEST_CASE("tensor estimates swap with the factors") {
    const auto g = Grid::square(0.0, 1.0, 64);
    const auto ab = axiswise_regularity(
        sample_paths(parse_kernel("tensor(wendland(d=1, n=0), wendland(d=1, n=1))"), g, 100, 42));
    const auto ba = axiswise_regularity(
        sample_paths(parse_kernel("tensor(wendland(d=1, n=1), wendland(d=1, n=0))"), g, 100, 42));
    CHECK(std::abs(ab[0].s_hat - ba[1].s_hat) <= 0.1);
    CHECK(std::abs(ab[1].s_hat - ba[0].s_hat) <= 0.1);
    CHECK(ab[0].s_hat < ab[1].s_hat);
}
