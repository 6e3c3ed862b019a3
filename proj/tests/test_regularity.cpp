#include "gpreg/kernel_parser.hpp"
#include "gpreg/regularity.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

using namespace gpreg;

namespace {

Regularity single(const char* text) {
    const auto r = infer_regularity(parse_kernel(text));
    REQUIRE(r.per_axis.size() == 1);
    return r.per_axis.front();
}

Order q(long long p, long long d = 1) {
    return Order::exact(ExactOrder(p, d));
}

} // namespace

TEST_CASE("Order basics") {
    CHECK(Order::from_double(2.5) == q(5, 2));
    CHECK(Order::from_double(2.5).exact_value().has_value());
    CHECK_FALSE(Order::from_double(0.3).exact_value().has_value());
    CHECK(Order::from_double(0.3).value() == 0.3);
    CHECK(Order::infinite().is_infinite());
    CHECK(q(1, 2) < Order::infinite());
    CHECK_FALSE(Order::infinite() < Order::infinite());
    CHECK(min(q(3, 2), q(1, 2)) == q(1, 2));
    CHECK(q(5, 2).integer_part() == 2);
    CHECK(q(2).integer_part() == 1);
    CHECK_FALSE(Order::infinite().integer_part().has_value());
    CHECK(q(5, 2).to_string() == "5/2");
    CHECK(q(3).to_string() == "3");
    CHECK(Order::infinite().to_string() == "inf");
}

TEST_CASE("leaf table") {
    const auto m = leaf_regularity(KernelExpr::matern(2.5));
    CHECK(m.order == q(5, 2));
    CHECK(m.sharp);
    CHECK_FALSE(m.log_corrected);
    CHECK(leaf_regularity(KernelExpr::matern(2.0)).log_corrected);
    const auto w = leaf_regularity(KernelExpr::wendland(1, 1));
    CHECK(w.order == q(3, 2));
    CHECK(w.sharp);
    CHECK(leaf_regularity(KernelExpr::wiener()).order == q(1, 2));
    CHECK(leaf_regularity(KernelExpr::wiener()).sharp);
    for (const auto& e : {KernelExpr::squared_exponential(), KernelExpr::rational_quadratic(1.0),
                          KernelExpr::periodic(), KernelExpr::linear(), KernelExpr::polynomial(3)}) {
        CHECK(leaf_regularity(e).order.is_infinite());
        CHECK(leaf_regularity(e).sharp);
    }
    CHECK(leaf_regularity(KernelExpr::feature_trigonometric(2)).order.is_infinite());
    CHECK_FALSE(leaf_regularity(KernelExpr::feature_trigonometric(2)).sharp);
    CHECK_THROWS((void)leaf_regularity(parse_kernel("se() + wiener()")));
}

TEST_CASE("combinator examples") {
    const auto c = single("matern(nu=0.5) + se()");
    CHECK(c.order == q(1, 2));
    CHECK_FALSE(c.sharp);

    const auto t = infer_regularity(parse_kernel("tensor(wendland(d=1,n=0), wendland(d=1,n=1))"));
    REQUIRE(t.per_axis.size() == 2);
    CHECK(t.per_axis[0].order == q(1, 2));
    CHECK(t.per_axis[1].order == q(3, 2));
    CHECK(t.per_axis[0].sharp);
    CHECK(t.per_axis[1].sharp);

    const auto w = single("warp(matern(nu=0.5), abs_power(beta=0.5))");
    CHECK(w.order == q(1, 4));
    CHECK_FALSE(w.sharp);

    // Smooth warps keep the order.
    CHECK(single("warp(matern(nu=1.5), affine(a=3, b=1))").order == q(3, 2));
    // n = min(1, 0) = 0, gamma = 1, delta = 1/2.
    CHECK(single("warp(matern(nu=1.5), abs_power(beta=0.5))").order == q(1, 2));

    const auto p = single("se() * periodic()");
    CHECK(p.order.is_infinite());
    CHECK(p.sharp);
    CHECK_FALSE(single("matern(nu=1.5) * se()").sharp);
    CHECK(single("3*matern(nu=1.5)").sharp);
    CHECK(single("matern(nu=1) + matern(nu=2)").log_corrected);
    CHECK_FALSE(single("matern(nu=1) + matern(nu=0.5)").log_corrected);
}

TEST_CASE("sobolev order") {
    CHECK(sobolev_order(KernelExpr::matern(1.5)) == 1);
    CHECK(sobolev_order(KernelExpr::matern(2.0)) == 1);
    CHECK(sobolev_order(KernelExpr::matern(2.5)) == 2);
    CHECK(sobolev_order(KernelExpr::matern(0.5)) == 0);
    CHECK(sobolev_order(KernelExpr::wendland(3, 2)) == 2);
    CHECK(sobolev_order(KernelExpr::wiener()) == 0);
    CHECK(sobolev_order(KernelExpr::squared_exponential()) == kInfiniteSobolev);
    CHECK(sobolev_order(parse_kernel("tensor(matern(nu=2.5), wendland(d=1,n=1))")) == 1);
    CHECK(sobolev_order(parse_kernel("warp(matern(nu=2.5), abs_power(beta=0.5))")) == 0);
    const auto r = infer_regularity(parse_kernel("matern(nu=2.5)"));
    CHECK(r.sobolev_order == 2);
}

TEST_CASE("sobolev order never exceeds the smallest finite order plus one") {
    oracle::TreeGenerator gen(99);
    for (int i = 0; i < 200; ++i) {
        const auto e = gen.tree(3);
        const auto r = infer_regularity(e);
        const auto o = r.overall().order;
        if (!o.is_infinite()) {
            CHECK(r.sobolev_order <= o.value() + 1.0);
        }
    }
}

TEST_CASE("min rule, concatenation and scale invariance on random trees") {
    oracle::TreeGenerator gen(2024);
    for (int i = 0; i < 50; ++i) {
        const auto a = gen.tree(2);
        const auto b = gen.tree(2);
        CAPTURE(print_kernel(a));
        CAPTURE(print_kernel(b));
        const auto ra = infer_regularity(a).overall();
        const auto rb = infer_regularity(b).overall();
        const Order expected = min(ra.order, rb.order);
        CHECK(infer_regularity(KernelExpr::conic({a, b}, {1.0, 2.0})).overall().order == expected);
        CHECK(infer_regularity(KernelExpr::product({a, b})).overall().order == expected);

        const auto t = infer_regularity(KernelExpr::tensor({a, b}));
        REQUIRE(t.per_axis.size() == 2);
        CHECK(t.per_axis[0] == ra);
        CHECK(t.per_axis[1] == rb);

        const double w = 0.1 + 5.0 * gen.uniform();
        CHECK(infer_regularity(KernelExpr::conic({a}, {w})).per_axis == infer_regularity(a).per_axis);

        CHECK(infer_regularity(a) == infer_regularity(a));
    }
}

TEST_CASE("derivation trace names the rules") {
    const auto r = infer_regularity(parse_kernel("warp(matern(nu=0.5), abs_power(beta=0.5)) + se()"));
    REQUIRE_FALSE(r.derivation.empty());
    bool saw_warp = false, saw_conic = false;
    for (const auto& line : r.derivation) {
        saw_warp = saw_warp || line.find("warp") != std::string::npos;
        saw_conic = saw_conic || line.find("conic") != std::string::npos;
    }
    CHECK(saw_warp);
    CHECK(saw_conic);
    CHECK(r.derivation.back().find("sobolev") != std::string::npos);
}
