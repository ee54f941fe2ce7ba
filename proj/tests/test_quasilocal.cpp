#include <doctest.h>

#include <random>

#include "bandlim/quasilocal.hpp"

using namespace bandlim;

namespace {
SpacePtr seg(std::int64_t lo, std::int64_t hi) {
    return make_grid_space(1, {lo}, {hi}, GridMetric::l1);
}
int at(const SpacePtr& sp, std::int64_t x) {
    return *sp->index_of(std::vector<std::int64_t>{x});
}
BandOperator laplacian(const SpacePtr& sp) {
    return BandOperator::from_offsets(sp, {{{0}, "2"}, {{1}, "-1"}, {{-1}, "-1"}});
}
} // namespace

TEST_CASE("commutator entries: [A, f]_xy = A_xy (f(y) - f(x))") {
    auto sp = seg(-4, 4);
    auto S = BandOperator::from_offsets(sp, {{{1}, "1"}});
    std::vector<double> f(static_cast<std::size_t>(sp->size()));
    for (int i = 0; i < sp->size(); ++i)
        f[static_cast<std::size_t>(i)] = 0.1 * static_cast<double>(sp->coords(i)[0]);
    auto C = commutator(S, f);
    // entry (x+1, x): 1 * (f(x) - f(x+1)) = -0.1
    CHECK(C.entry(at(sp, 1), at(sp, 0)) == doctest::Approx(-0.1));
    CHECK(C.propagation() == S.propagation());
    // commuting with a constant gives zero
    CHECK(commutator(S, std::vector<double>(static_cast<std::size_t>(sp->size()), 0.7)).nnz() == 0);
    // diagonal operators commute with every function
    auto D = BandOperator::multiplication(sp, std::vector<double>(9, 2.0));
    CHECK(commutator(D, f).nnz() == 0);
}

TEST_CASE("ql modulus of the shift equals min(L, 2)") {
    auto sp = seg(-10, 10);
    auto S = BandOperator::from_offsets(sp, {{{1}, "1"}});
    for (double L : {0.05, 0.5, 1.0, 1.9}) {
        CHECK(ql_modulus(S, L, NormRegime::pinf) == doctest::Approx(L));
        CHECK(ql_modulus(S, L, NormRegime::p1) == doctest::Approx(L));
    }
    // saturation: |f| <= 1 caps the oscillation at 2
    CHECK(ql_modulus(S, 100.0, NormRegime::pinf) == doctest::Approx(2.0));
    CHECK(ql_modulus(S, 0.0, NormRegime::pinf) == doctest::Approx(0.0));
    CHECK_THROWS_AS(ql_modulus(S, -1.0, NormRegime::pinf), std::invalid_argument);
}

TEST_CASE("ql modulus never exceeds 2 ||A|| and is subadditive") {
    auto sp = seg(-10, 10);
    auto A = laplacian(sp);
    auto B = BandOperator::from_offsets(sp, {{{2}, "x0/10"}, {{0}, "1"}});
    for (double L : {0.1, 1.0, 10.0}) {
        CHECK(ql_modulus(A, L, NormRegime::pinf) <=
              2.0 * A.op_norm(NormRegime::pinf) + 1e-12);
        double lhs = ql_modulus(add(A, B), L, NormRegime::pinf);
        CHECK(lhs <= ql_modulus(A, L, NormRegime::pinf) +
                         ql_modulus(B, L, NormRegime::pinf) + 1e-12);
    }
    // monotone in L
    CHECK(ql_modulus(A, 0.5, NormRegime::pinf) <= ql_modulus(A, 1.0, NormRegime::pinf) + 1e-15);
}

TEST_CASE("modulus is the exact sup over admissible functions: sampling + extremizer") {
    auto sp = seg(-12, 12);
    auto A = BandOperator::from_offsets(sp, {{{0}, "1"}, {{1}, "x0/10"}, {{-2}, "-0.7"}});
    const double L = 0.4;
    const double mod = ql_modulus(A, L, NormRegime::pinf);
    std::mt19937 rng(42);
    for (int it = 0; it < 300; ++it) {
        auto f = random_lipschitz_function(sp, L, rng);
        LipschitzFunction lf(sp, f, L); // audits the constant
        CHECK(commutator(A, lf).op_norm(NormRegime::pinf) <= mod + 1e-12);
    }
    auto fstar = ql_extremizer(A, L, NormRegime::pinf);
    LipschitzFunction lf(sp, fstar, L);
    CHECK(commutator(A, lf).op_norm(NormRegime::pinf) == doctest::Approx(mod).epsilon(1e-9));

    // same story in the p1 regime
    const double mod1 = ql_modulus(A, L, NormRegime::p1);
    auto f1 = ql_extremizer(A, L, NormRegime::p1);
    CHECK(commutator(A, LipschitzFunction(sp, f1, L)).op_norm(NormRegime::p1) ==
          doctest::Approx(mod1).epsilon(1e-9));
}

TEST_CASE("Lipschitz function audit rejects bad declarations") {
    auto sp = seg(0, 3);
    CHECK_THROWS_AS(LipschitzFunction(sp, {0.0, 2.0, 0.0, 0.0}, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(LipschitzFunction(sp, {0.0, 1.0, 0.0, 0.0}, 0.1), std::invalid_argument);
    CHECK_NOTHROW(LipschitzFunction(sp, {0.0, 1.0, 0.0, 0.0}, 1.0));
}

TEST_CASE("certificate constant L = eps/(r M N) guarantees the modulus bound") {
    auto sp = seg(-50, 50);
    auto A = laplacian(sp);
    for (double eps : {0.1, 0.5, 1.0}) {
        double L = band_commutator_certificate(A, eps, NormRegime::pinf);
        CHECK(L == doctest::Approx(eps / (1.0 * 4.0 * 3.0)));
        CHECK(ql_modulus(A, L, NormRegime::pinf) <= eps + 1e-12);
    }
    // diagonal operators: any L works, sentinel +inf
    auto D = BandOperator::multiplication(sp, std::vector<double>(101, 3.0));
    CHECK(std::isinf(band_commutator_certificate(D, 0.1, NormRegime::pinf)));
    CHECK_THROWS_AS(band_commutator_certificate(A, 0.0, NormRegime::pinf),
                    std::invalid_argument);
}

TEST_CASE("Leibniz rule: [AB, f] = A[B, f] + [A, f]B") {
    auto sp = seg(-8, 8);
    auto A = laplacian(sp);
    auto B = BandOperator::from_offsets(sp, {{{1}, "x0/5"}, {{0}, "1"}});
    std::mt19937 rng(7);
    auto f = random_lipschitz_function(sp, 0.3, rng);
    auto lhs = commutator(multiply(A, B), f);
    auto rhs = add(multiply(A, commutator(B, f)), multiply(commutator(A, f), B));
    CHECK(subtract(lhs, rhs).max_abs_entry() == doctest::Approx(0.0).epsilon(1e-12));
}
