#include <doctest.h>

#include "bandlim/limits.hpp"

using namespace bandlim;

namespace {
SpacePtr seg(std::int64_t lo, std::int64_t hi) {
    return make_grid_space(1, {lo}, {hi}, GridMetric::l1);
}
int at(const SpacePtr& sp, std::int64_t x) {
    return *sp->index_of(std::vector<std::int64_t>{x});
}
double interior_gap(const BandOperator& A, const BandOperator& B, std::int64_t rad) {
    double worst = 0.0;
    const auto& sp = A.space();
    for (int x = 0; x < sp->size(); ++x)
        for (int y = 0; y < sp->size(); ++y) {
            bool inside = true;
            for (int a = 0; a < sp->dim(); ++a) {
                auto cx = sp->coords(x)[a], cy = sp->coords(y)[a];
                if (cx < -rad || cx > rad || cy < -rad || cy > rad) inside = false;
            }
            if (inside) worst = std::max(worst, std::abs(A.entry(x, y) - B.entry(x, y)));
        }
    return worst;
}
} // namespace

TEST_CASE("translate moves coefficients along the lattice") {
    auto sp = seg(-5, 5);
    auto A = BandOperator::from_offsets(sp, {{{0}, "x0"}});
    std::int64_t h[1] = {3};
    auto T = translate(A, h);
    // V_{-h} A V_h has diagonal a(x + h)
    CHECK(T.entry(at(sp, 0), at(sp, 0)) == doctest::Approx(3.0));
    CHECK(T.entry(at(sp, 2), at(sp, 2)) == doctest::Approx(5.0));
    CHECK(T.entry(at(sp, -5), at(sp, -5)) == doctest::Approx(-2.0));
}

TEST_CASE("translate without a symbolic source truncates and warns") {
    auto sp = seg(-5, 5);
    std::vector<std::tuple<int, int, double>> trips;
    for (int i = 0; i < sp->size(); ++i) trips.push_back({i, i, 1.0});
    auto A = BandOperator::from_entries(sp, trips);
    REQUIRE_FALSE(A.symbol());
    std::vector<std::string> warn;
    std::int64_t h[1] = {2};
    auto T = translate(A, h, &warn);
    CHECK(T.nnz() == 9);
    CHECK(warn.size() == 1);
}

TEST_CASE("limit of 2 + 1/(1+x0^2) along the positive ray is 2I, rich") {
    auto sp = seg(-100, 100);
    auto A = BandOperator::from_offsets(sp, {{{0}, "2 + 1/(1+x0^2)"}});
    auto r = limit_operator(A, DirectionSequence::make_ray({1}), 2000, 20000, 1e-6, 4);
    CHECK(r.rich);
    CHECK(r.cauchy_residual < 1e-6);
    const auto& ref = r.op.space();
    CHECK(ref->size() == 9);
    for (int i = 0; i < ref->size(); ++i)
        CHECK(r.op.entry(i, i) == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(r.op.nnz() == 9);
    CHECK(r.direction_label == "ray(1)");
}

TEST_CASE("translation-invariant operators are their own limit") {
    auto sp = seg(-60, 60);
    auto A = BandOperator::from_offsets(sp, {{{0}, "2"}, {{1}, "-1"}, {{-1}, "-1"}});
    auto r = limit_operator(A, DirectionSequence::make_ray({1}), 1000, 10000, 1e-9, 4);
    CHECK(r.rich);
    CHECK(r.cauchy_residual == doctest::Approx(0.0));
    auto ref = r.op.space();
    auto Aref = BandOperator::from_offsets(ref, {{{0}, "2"}, {{1}, "-1"}, {{-1}, "-1"}});
    CHECK(subtract(r.op, Aref).max_abs_entry() == doctest::Approx(0.0));
    // norm contractivity of the limit
    CHECK(r.op.op_norm(NormRegime::pinf) <= A.op_norm(NormRegime::pinf) + 1e-12);
}

TEST_CASE("oscillating coefficients along an alternating direction are not rich") {
    auto sp = seg(-100, 100);
    auto A = BandOperator::from_offsets(sp, {{{0}, "tanh(x0)"}});
    std::vector<std::vector<std::int64_t>> pts;
    for (std::int64_t m = 0; m < 60; ++m)
        pts.push_back({(m % 2 == 0 ? 1 : -1) * (m + 5)});
    auto dir = DirectionSequence::make_explicit(pts, "alternating");
    auto r = limit_operator(A, dir, 10, 59, 1e-6, 4);
    CHECK_FALSE(r.rich);
    CHECK(r.cauchy_residual > 1.9); // tanh flips between ~1 and ~-1
}

TEST_CASE("direction sequence validation") {
    CHECK_THROWS_AS(DirectionSequence::make_ray({0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(DirectionSequence::make_explicit({{1}}, "x"), std::invalid_argument);
    CHECK_THROWS_AS(
        DirectionSequence::make_explicit({{1}, {2}, {3}, {4}, {3}, {2}}, "shrinking"),
        std::invalid_argument);
    auto d = DirectionSequence::make_ray({2, -1});
    CHECK(d.label == "ray(2,-1)");
    CHECK(d.at(3) == std::vector<std::int64_t>{6, -3});
}

TEST_CASE("limit_operator requires a symbolic source and a grid") {
    auto sp = seg(-5, 5);
    auto A = BandOperator::from_entries(sp, {{0, 0, 1.0}});
    CHECK_THROWS_AS(limit_operator(A, DirectionSequence::make_ray({1}), 10, 100, 1e-6, 2),
                    std::invalid_argument);
}

TEST_CASE("spectrum sample deduplicates entrywise-equal limits") {
    auto sp = seg(-100, 100);
    SUBCASE("both rays of a symmetric potential give one member") {
        auto A = BandOperator::from_offsets(sp, {{{0}, "2 + 1/(1+x0^2)"}});
        auto spec = spectrum_sample(
            A, {DirectionSequence::make_ray({1}), DirectionSequence::make_ray({-1})},
            2000, 20000, 1e-6, 4);
        CHECK(spec.size() == 1);
    }
    SUBCASE("sign potential gives two members, 1 and 3") {
        auto A = BandOperator::from_offsets(sp, {{{0}, "2 + sign(x0)"}});
        auto spec = spectrum_sample(
            A, {DirectionSequence::make_ray({1}), DirectionSequence::make_ray({-1})},
            1000, 10000, 1e-6, 4);
        REQUIRE(spec.size() == 2);
        CHECK(spec[0].op.entry(0, 0) == doctest::Approx(3.0));
        CHECK(spec[1].op.entry(0, 0) == doctest::Approx(1.0));
    }
}

TEST_CASE("limit extraction is an algebra homomorphism on the interior") {
    auto sp = seg(-100, 100);
    auto A = BandOperator::from_offsets(sp, {{{0}, "2 + 1/(1+x0^2)"}});
    auto B = BandOperator::from_offsets(sp, {{{1}, "1 + 1/(1+abs(x0))"}});
    auto dir = DirectionSequence::make_ray({1});
    auto P = multiply(A, B);
    REQUIRE(P.symbol());
    auto lim_P = limit_operator(P, dir, 2000, 20000, 1e-5, 4).op;
    auto lim_A = limit_operator(A, dir, 2000, 20000, 1e-5, 4).op;
    auto lim_B = limit_operator(B, dir, 2000, 20000, 1e-5, 4).op;
    auto prod = multiply(lim_A, lim_B);
    CHECK(interior_gap(lim_P, prod, 2) < 1e-6);

    SUBCASE("adjoint duality on the interior") {
        auto lim_At = limit_operator(adjoint(A), dir, 2000, 20000, 1e-5, 4).op;
        CHECK(interior_gap(lim_At, adjoint(lim_A), 2) < 1e-6);
    }
    SUBCASE("sum") {
        auto Ssum = BandOperator::from_offsets(
            sp, {{{0}, "2 + 1/(1+x0^2)"}, {{1}, "1 + 1/(1+abs(x0))"}});
        auto lim_S = limit_operator(Ssum, dir, 2000, 20000, 1e-5, 4).op;
        CHECK(interior_gap(lim_S, add(lim_A, lim_B), 2) < 1e-6);
    }
}

TEST_CASE("tail sampling keeps the final three indices for the limit mean") {
    auto s = detail::tail_samples(0, 1000000, 64);
    REQUIRE(s.size() >= 3);
    CHECK(s[s.size() - 1] == 1000000);
    CHECK(s[s.size() - 2] == 999999);
    CHECK(s[s.size() - 3] == 999998);
    CHECK(s.front() == 0);
    auto small = detail::tail_samples(5, 9, 64);
    CHECK(small == std::vector<std::int64_t>{5, 6, 7, 8, 9});
    CHECK_THROWS_AS(detail::tail_samples(5, 6, 64), std::invalid_argument);
}
