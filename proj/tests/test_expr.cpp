#include <doctest.h>

#include <cmath>

#include "bandlim/expr.hpp"

using namespace bandlim;

static double ev1(const Expr& e, std::int64_t x) {
    std::int64_t pt[1] = {x};
    return e.eval(pt);
}

TEST_CASE("parse and evaluate 2 + 1/(1+x0^2)") {
    auto e = Expr::parse("2 + 1/(1+x0^2)", 1);
    CHECK(ev1(e, 0) == doctest::Approx(3.0));
    CHECK(ev1(e, 1) == doctest::Approx(2.5));
    CHECK(ev1(e, 3) == doctest::Approx(2.1));
    // AST size: add, 2, div, 1, add, 1, pow, x0
    CHECK(e.node_count() == 8);
}

TEST_CASE("precedence and associativity") {
    auto e = Expr::parse("1 + 2*3", 1);
    CHECK(ev1(e, 0) == doctest::Approx(7.0));
    CHECK(ev1(Expr::parse("10 - 4 - 3", 1), 0) == doctest::Approx(3.0));
    CHECK(ev1(Expr::parse("12 / 3 / 2", 1), 0) == doctest::Approx(2.0));
    CHECK(ev1(Expr::parse("-x0^2", 1), 3) == doctest::Approx(-9.0));
    CHECK(ev1(Expr::parse("(1+x0)^3", 1), 1) == doctest::Approx(8.0));
    CHECK(ev1(Expr::parse("2^-1", 1), 0) == doctest::Approx(0.5));
}

TEST_CASE("functions") {
    CHECK(ev1(Expr::parse("abs(x0)", 1), -4) == doctest::Approx(4.0));
    CHECK(ev1(Expr::parse("sign(x0)", 1), -4) == doctest::Approx(-1.0));
    CHECK(ev1(Expr::parse("sign(x0)", 1), 0) == doctest::Approx(0.0));
    CHECK(ev1(Expr::parse("exp(x0)", 1), 1) == doctest::Approx(std::exp(1.0)));
    CHECK(ev1(Expr::parse("tanh(x0)", 1), 2) == doctest::Approx(std::tanh(2.0)));
    CHECK(ev1(Expr::parse("min(x0, 3)", 1), 5) == doctest::Approx(3.0));
    CHECK(ev1(Expr::parse("max(x0, 3)", 1), 5) == doctest::Approx(5.0));
}

TEST_CASE("multiple variables") {
    auto e = Expr::parse("x0 + 10*x1", 2);
    std::int64_t pt[2] = {3, 4};
    CHECK(e.eval(pt) == doctest::Approx(43.0));
    CHECK_THROWS_AS(Expr::parse("x2", 2), ExprError);
}

TEST_CASE("division by zero reports the evaluation point") {
    auto e = Expr::parse("1/x0", 1);
    CHECK_THROWS_AS(ev1(e, 0), ExprError);
    CHECK(ev1(e, 2) == doctest::Approx(0.5));
    CHECK_THROWS_AS(ev1(Expr::parse("x0^-1", 1), 0), ExprError);
}

TEST_CASE("parse errors carry a position") {
    try {
        Expr::parse("1 + @", 1);
        FAIL("expected ExprError");
    } catch (const ExprError& e) {
        CHECK(e.position == 4);
    }
    CHECK_THROWS_AS(Expr::parse("foo(1)", 1), ExprError);
    CHECK_THROWS_AS(Expr::parse("min(1)", 1), ExprError);
    CHECK_THROWS_AS(Expr::parse("(1+2", 1), ExprError);
    CHECK_THROWS_AS(Expr::parse("1 2", 1), ExprError);
    CHECK_THROWS_AS(Expr::parse("x0^x0", 1), ExprError);
}

TEST_CASE("shifted substitutes x + h") {
    auto e = Expr::parse("x0^2", 1);
    std::int64_t h[1] = {3};
    auto s = e.shifted(h);
    CHECK(ev1(s, 0) == doctest::Approx(9.0));
    CHECK(ev1(s, -3) == doctest::Approx(0.0));
    // original untouched
    CHECK(ev1(e, 0) == doctest::Approx(0.0));
    // zero shift leaves evaluation unchanged
    std::int64_t z[1] = {0};
    CHECK(ev1(e.shifted(z), 5) == doctest::Approx(25.0));
}

TEST_CASE("sum and product combinators") {
    auto a = Expr::parse("x0", 1);
    auto b = Expr::parse("2", 1);
    CHECK(ev1(Expr::sum(a, b), 3) == doctest::Approx(5.0));
    CHECK(ev1(Expr::product(a, b), 3) == doctest::Approx(6.0));
}
