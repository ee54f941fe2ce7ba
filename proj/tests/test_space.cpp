#include <doctest.h>

#include "bandlim/space.hpp"

using namespace bandlim;

TEST_CASE("grid window distances (1-D segment)") {
    auto sp = make_grid_space(1, {-5}, {5}, GridMetric::l1);
    CHECK(sp->size() == 11);
    auto i = *sp->index_of(std::vector<std::int64_t>{-2});
    auto j = *sp->index_of(std::vector<std::int64_t>{2});
    CHECK(sp->distance(i, j) == Rational(4));
    CHECK(sp->distance(i, i) == Rational(0));
    CHECK(sp->point_name(j) == "(2)");
}

TEST_CASE("2-D linf square: ball of radius 1 has 9 points") {
    auto sp = make_grid_space(2, {-3, -3}, {3, 3}, GridMetric::linf);
    int c = *sp->index_of(std::vector<std::int64_t>{0, 0});
    auto B = SupportSet::ball(sp, c, Rational(1));
    CHECK(B.count() == 9);
    // l1 metric on the same window gives the diamond with 5 points
    auto sp1 = make_grid_space(2, {-3, -3}, {3, 3}, GridMetric::l1);
    int c1 = *sp1->index_of(std::vector<std::int64_t>{0, 0});
    CHECK(SupportSet::ball(sp1, c1, Rational(1)).count() == 5);
}

TEST_CASE("singleton grid window") {
    auto sp = make_grid_space(1, {7}, {7}, GridMetric::l1);
    CHECK(sp->size() == 1);
    CHECK(sp->diameter() == Rational(0));
    CHECK(sp->geometry_profile(Rational(100)) == 1);
}

TEST_CASE("geometry profile on Z, r = 1 and 2, plus monotonicity") {
    auto sp = make_grid_space(1, {-10}, {10}, GridMetric::l1);
    CHECK(sp->geometry_profile(Rational(0)) == 1);
    CHECK(sp->geometry_profile(Rational(1)) == 3);
    CHECK(sp->geometry_profile(Rational(2)) == 5);
    int prev = 0;
    for (int r = 0; r <= 12; ++r) {
        int n = sp->geometry_profile(Rational(r));
        CHECK(n >= prev);
        prev = n;
    }
    // caps at window size
    CHECK(sp->geometry_profile(Rational(100)) == 21);
}

TEST_CASE("explicit-table space: happy path and metric axiom violations") {
    using R = Rational;
    SUBCASE("valid three-point space") {
        auto sp = Space::from_table({"a", "b", "c"},
                                    {{R(0), R(1), R(2)},
                                     {R(1), R(0), R(1)},
                                     {R(2), R(1), R(0)}});
        CHECK(sp->size() == 3);
        CHECK(sp->distance(0, 2) == R(2));
        CHECK(sp->point_name(1) == "b");
        CHECK(sp->diameter() == R(2));
        CHECK_FALSE(sp->is_grid());
    }
    SUBCASE("zero off-diagonal distance rejected") {
        CHECK_THROWS_AS(Space::from_table({"a", "b"}, {{R(0), R(0)}, {R(0), R(0)}}),
                        std::invalid_argument);
    }
    SUBCASE("asymmetric table rejected") {
        CHECK_THROWS_AS(Space::from_table({"a", "b"}, {{R(0), R(1)}, {R(2), R(0)}}),
                        std::invalid_argument);
    }
    SUBCASE("triangle inequality violation rejected") {
        CHECK_THROWS_AS(Space::from_table({"a", "b", "c"},
                                          {{R(0), R(1), R(5)},
                                           {R(1), R(0), R(1)},
                                           {R(5), R(1), R(0)}}),
                        std::invalid_argument);
    }
    SUBCASE("negative distance rejected") {
        CHECK_THROWS_AS(Space::from_table({"a", "b"}, {{R(0), R(-1)}, {R(-1), R(0)}}),
                        std::invalid_argument);
    }
    SUBCASE("fractional distances work") {
        auto sp = Space::from_table({"a", "b"},
                                    {{R(0), R(1, 2)}, {R(1, 2), R(0)}});
        CHECK(sp->distance(0, 1) == R(1, 2));
    }
}

TEST_CASE("grid constructor argument validation") {
    CHECK_THROWS_AS(make_grid_space(0, {}, {}, GridMetric::l1), std::invalid_argument);
    CHECK_THROWS_AS(make_grid_space(1, {3}, {1}, GridMetric::l1), std::invalid_argument);
    CHECK_THROWS_AS(make_grid_space(2, {0}, {1, 1}, GridMetric::l1), std::invalid_argument);
}

TEST_CASE("coords / index_of round trip") {
    auto sp = make_grid_space(2, {-2, 1}, {2, 4}, GridMetric::l1);
    for (int i = 0; i < sp->size(); ++i) {
        auto c = sp->coords(i);
        CHECK(*sp->index_of(c) == i);
    }
    CHECK_FALSE(sp->index_of(std::vector<std::int64_t>{3, 1}).has_value());
}

TEST_CASE("support set operations") {
    auto sp = make_grid_space(1, {-5}, {5}, GridMetric::l1);
    int c = *sp->index_of(std::vector<std::int64_t>{0});
    auto F = SupportSet::ball(sp, c, Rational(2));   // [-2,2]
    CHECK(F.count() == 5);
    CHECK(F.contains(*sp->index_of(std::vector<std::int64_t>{2})));
    CHECK_FALSE(F.contains(*sp->index_of(std::vector<std::int64_t>{3})));

    auto G = F.complement();
    CHECK(G.count() == 6);
    for (int i = 0; i < sp->size(); ++i) CHECK(F.contains(i) != G.contains(i));

    auto N = F.neighborhood(Rational(1));            // [-3,3]
    CHECK(N.count() == 7);
    CHECK(F.is_subset_of(N));
    CHECK_FALSE(N.is_subset_of(F));
    CHECK(F.diameter() == Rational(4));

    auto full = SupportSet::full(sp);
    CHECK(full.count() == sp->size());
    CHECK(full.complement().empty());
    CHECK(F == SupportSet::where(sp, [&](int i) {
        return !(sp->distance(c, i) > Rational(2));
    }));
}
