#include "gpreg/errors.hpp"
#include "gpreg/gp_sampler.hpp"
#include "gpreg/kernel_parser.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace gpreg;

TEST_CASE("grid parsing and layout") {
    const auto g = Grid::parse("0:1:5");
    CHECK(g.dim() == 1);
    CHECK(g.size() == 5);
    CHECK(g.axes[0].spacing() == 0.25);
    CHECK(g.to_string() == "0:1:5");
    const auto g2 = Grid::parse("0:1:3, 2:4:2");
    CHECK(g2.dim() == 2);
    CHECK(g2.size() == 6);
    // Row-major: second axis fastest.
    CHECK(g2.point(1) == std::vector<double>{0.0, 4.0});
    CHECK(g2.point(2) == std::vector<double>{0.5, 2.0});
    CHECK(g2.axes[0].at(2) == 1.0);
    CHECK_THROWS_AS((void)Grid::parse("1:0:5"), DomainError);
    CHECK_THROWS_AS((void)Grid::parse("0:1:1"), DomainError);
    CHECK_THROWS_AS((void)Grid::parse("0:1"), DomainError);
    CHECK_THROWS_AS((void)Grid::parse("0:1:3,0:1:3,0:1:3"), DomainError);
    CHECK_THROWS_AS((void)Grid::parse("a:1:3"), DomainError);
}

TEST_CASE("grid checks against the kernel") {
    CHECK_THROWS_AS((void)check_grid_for_kernel(KernelExpr::wiener(), Grid::line(0.0, 1.0, 5)), DomainError);
    CHECK_NOTHROW((void)check_grid_for_kernel(KernelExpr::wiener(), Grid::line(0.5, 1.0, 5)));
    CHECK_THROWS_AS((void)check_grid_for_kernel(KernelExpr::wiener(), Grid::square(0.5, 1.0, 5)), DimensionError);
    CHECK_THROWS_AS((void)check_grid_for_kernel(parse_kernel("tensor(se(), wiener())"), Grid::square(0.0, 1.0, 5)),
                    DomainError);
    // Warps move the coordinates a Wiener leaf sees.
    CHECK_NOTHROW(check_grid_for_kernel(parse_kernel("warp(wiener(), affine(a=1, b=2))"), Grid::line(0.0, 1.0, 5)));
    CHECK_THROWS_AS(check_grid_for_kernel(parse_kernel("warp(wiener(), affine(a=-1, b=0.5))"), Grid::line(0.0, 1.0, 5)),
                    DomainError);
    CHECK_THROWS_AS(check_grid_for_kernel(parse_kernel("warp(wiener(), abs_power(beta=0.5))"), Grid::line(-1.0, 1.0, 5)),
                    DomainError);
    CHECK_NOTHROW(check_grid_for_kernel(parse_kernel("warp(wiener(), abs_power(beta=0.5))"), Grid::line(0.5, 1.0, 5)));
}

TEST_CASE("build_gram examples") {
    const std::vector<std::vector<double>> pts = {{0.0}, {1.0}, {2.0}};
    const auto g = build_gram(KernelExpr::squared_exponential(), pts);
    CHECK(g(0, 0) == 1.0);
    CHECK(g(1, 1) == 1.0);
    CHECK(g(2, 2) == 1.0);
    CHECK(g(0, 2) == std::exp(-4.0));
    const auto one = build_gram(KernelExpr::matern(0.5), std::vector<std::vector<double>>{{0.3}});
    CHECK(one.rows() == 1);
    CHECK(one(0, 0) == 1.0);
    const auto w = build_gram(KernelExpr::wiener(), std::vector<std::vector<double>>{{1.0}, {2.0}, {3.0}});
    Eigen::Matrix3d expect;
    expect << 1, 1, 1, 1, 2, 2, 1, 2, 3;
    CHECK(w == expect);
    const auto big = build_gram(parse_kernel("matern(nu=1.3) + warp(wiener(), affine(a=1, b=2))"),
                                Grid::line(0.0, 1.0, 40));
    CHECK(big == big.transpose());
}

TEST_CASE("cholesky_with_jitter examples") {
    const auto id = cholesky_with_jitter(Eigen::MatrixXd::Identity(4, 4));
    CHECK(id.jitter == 0.0);
    CHECK(id.lower == Eigen::MatrixXd::Identity(4, 4));
    Eigen::MatrixXd w(3, 3);
    w << 1, 1, 1, 1, 2, 2, 1, 2, 3;
    const auto lw = cholesky_with_jitter(w);
    CHECK(lw.jitter == 0.0);
    CHECK((lw.lower * lw.lower.transpose() - w).cwiseAbs().maxCoeff() <= 1e-14);
    const auto ones = cholesky_with_jitter(Eigen::MatrixXd::Ones(3, 3));
    CHECK(ones.jitter > 0.0);
    CHECK(ones.jitter <= 1e-6 * 3.0 / 3.0);
    Eigen::MatrixXd indefinite = Eigen::MatrixXd::Identity(2, 2);
    indefinite(1, 1) = -1.0;
    CHECK_THROWS_AS((void)cholesky_with_jitter(indefinite), NumericalError);
}

TEST_CASE("standard normals are reproducible and split per draw") {
    const auto a = standard_normals(42, 0, 101);
    const auto b = standard_normals(42, 0, 101);
    CHECK(a == b);
    CHECK(standard_normals(42, 1, 101) != a);
    CHECK(standard_normals(43, 0, 101) != a);
    // A prefix does not depend on the requested length.
    const auto c = standard_normals(42, 0, 50);
    CHECK(std::equal(c.begin(), c.end(), a.begin()));
    const auto many = standard_normals(7, 3, 200000);
    double mean = 0.0, sq = 0.0;
    for (double z : many) {
        mean += z;
        sq += z * z;
    }
    mean /= static_cast<double>(many.size());
    sq /= static_cast<double>(many.size());
    CHECK(std::abs(mean) <= 0.01);
    CHECK(std::abs(sq - 1.0) <= 0.01);
}

TEST_CASE("sample_paths is deterministic and seeded per draw") {
    const auto e = KernelExpr::matern(1.5);
    const auto g = Grid::line(0.0, 1.0, 33);
    const auto a = sample_paths(e, g, 5, 42);
    const auto b = sample_paths(e, g, 5, 42);
    CHECK(a.samples == b.samples);
    // Draw i does not depend on how many draws were requested.
    const auto c = sample_paths(e, g, 3, 42);
    CHECK(c.samples == a.samples.topRows(3));
    CHECK(a.count() == 5);
    CHECK(a.kernel == "matern(nu=1.5)");
    CHECK(a.seed == 42);
    CHECK(sample_paths(e, g, 5, 43).samples != a.samples);
    CHECK_THROWS_AS((void)sample_paths(e, g, 0, 42), DomainError);
    CHECK_THROWS_AS((void)sample_paths(KernelExpr::wiener(), Grid::line(0.0, 1.0, 9), 1, 42), DomainError);
}

TEST_CASE("empirical mean and covariance") {
    const auto e = KernelExpr::matern(0.5);
    const auto g = Grid::line(0.0, 1.0, 17);
    const int count = 4000;
    const auto s = sample_paths(e, g, count, 5);
    const Eigen::RowVectorXd mean = s.samples.colwise().mean();
    CHECK(mean.cwiseAbs().maxCoeff() <= 4.0 / std::sqrt(count));
    const Eigen::MatrixXd cov = s.samples.transpose() * s.samples / count;
    CHECK((cov - build_gram(e, g)).cwiseAbs().maxCoeff() <= 0.1);
}

TEST_CASE("single long Matern path has unit variance") {
    // 400 correlation lengths, so the path average is close to the ensemble one.
    const auto s = sample_paths(KernelExpr::matern(0.5), Grid::line(0.0, 400.0, 4097), 1, 42);
    const double mean = s.samples.mean();
    const double var = (s.samples.array() - mean).square().mean();
    CHECK(var >= 0.7);
    CHECK(var <= 1.3);
}

TEST_CASE("Kronecker factorization matches the dense Gram") {
    const auto e = parse_kernel("tensor(wendland(d=1, n=0), matern(nu=1.5))");
    const auto g = Grid::parse("0:1:9,0:2:7");
    const auto s = sample_paths(e, g, 3000, 9);
    REQUIRE(s.factor_jitter.size() == 2);
    const Eigen::MatrixXd cov = s.samples.transpose() * s.samples / 3000.0;
    CHECK((cov - build_gram(e, g)).cwiseAbs().maxCoeff() <= 0.12);
}

TEST_CASE("derivative paths") {
    const auto g = Grid::line(0.0, 1.0, 65);
    const auto d = sample_derivative_paths(KernelExpr::matern(1.5), {1}, g, 4, 42);
    CHECK(d.alpha == std::vector<int>{1});
    CHECK(d.derivative_step > 0.0);
    CHECK(d.samples.allFinite());
    CHECK_THROWS_AS((void)sample_derivative_paths(KernelExpr::matern(0.5), {1}, g, 4, 42), GateError);
    CHECK_THROWS_AS((void)sample_derivative_paths(KernelExpr::matern(1.0), {1}, g, 4, 42), GateError);
    CHECK_THROWS_AS((void)sample_derivative_paths(KernelExpr::matern(2.5), {1, 0}, g, 4, 42), DimensionError);
    const auto t = parse_kernel("tensor(wendland(d=1, n=0), wendland(d=1, n=1))");
    const auto g2 = Grid::parse("0:1:9,0:1:9");
    CHECK_NOTHROW((void)sample_derivative_paths(t, {0, 1}, g2, 2, 1));
    CHECK_THROWS_AS((void)sample_derivative_paths(t, {1, 0}, g2, 2, 1), GateError);
}

TEST_CASE("SE second derivative process has variance 12") {
    const auto g = Grid::line(0.0, 1.0, 21);
    const int count = 2000;
    const auto d = sample_derivative_paths(KernelExpr::squared_exponential(), {2}, g, count, 17);
    for (int i = 5; i <= 15; i += 5) {
        const double var = d.samples.col(i).squaredNorm() / count;
        CHECK(std::abs(var - 12.0) <= 0.15 * 12.0);
    }
}

TEST_CASE("CSV round trip") {
    const auto s = sample_paths(parse_kernel("tensor(se(), wiener())"), Grid::parse("0:1:4,1:2:3"), 2, 3);
    std::stringstream ss;
    write_samples_csv(ss, s);
    const std::string text = ss.str();
    CHECK(text.rfind("x,y,s0,s1\n", 0) == 0);
    const auto back = read_samples_csv(ss);
    CHECK(back.grid == s.grid);
    CHECK(back.samples == s.samples);
    std::stringstream bad("x,s0\n0,1\n0.5,2\n2,3\n");
    CHECK_THROWS((void)read_samples_csv(bad));
}
