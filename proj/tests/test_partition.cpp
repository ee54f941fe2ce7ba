#include <doctest.h>

#include <sstream>

#include "bandlim/partition.hpp"

using namespace bandlim;

namespace {
SpacePtr seg(std::int64_t lo, std::int64_t hi) {
    return make_grid_space(1, {lo}, {hi}, GridMetric::l1);
}
BandOperator laplacian(const SpacePtr& sp) {
    return BandOperator::from_offsets(sp, {{{0}, "2"}, {{1}, "-1"}, {{-1}, "-1"}});
}
} // namespace

TEST_CASE("tent partition on [-100,100] meets the requested (1, 0.1)-variation") {
    auto sp = seg(-100, 100);
    auto pou = build_partition(sp, 1.0, 0.1);
    CHECK(pou.count() >= 2);
    CHECK(pou.multiplicity() <= 2);
    CHECK(variation(pou, 1.0) <= 0.1 + 1e-12);
    // tent overlap half-width S = 20, so tent slope is exactly 1/20 per step
    CHECK(variation(pou, 1.0) == doctest::Approx(0.1));
    CHECK(pou.support_diameter().to_double() <= 41.0);
}

TEST_CASE("eps = 2 admits the constant partition, even on explicit spaces") {
    using R = Rational;
    auto sp = Space::from_table({"a", "b"}, {{R(0), R(7)}, {R(7), R(0)}});
    auto pou = build_partition(sp, 3.0, 2.0);
    CHECK(pou.count() == 1);
    CHECK(pou.value(0, 0) == doctest::Approx(1.0));
    CHECK(variation(pou, 100.0) == doctest::Approx(0.0));
    // below eps = 2 the constructive path requires a grid
    CHECK_THROWS_AS(build_partition(sp, 3.0, 0.5), std::invalid_argument);
}

TEST_CASE("indicator partitions have the worst possible variation 2") {
    auto sp = seg(-5, 5);
    std::vector<std::pair<int, double>> left, right;
    for (int i = 0; i < sp->size(); ++i) {
        if (sp->coords(i)[0] <= 0) left.push_back({i, 1.0});
        else right.push_back({i, 1.0});
    }
    PartitionOfUnity pou(sp, {left, right});
    CHECK(variation(pou, 1.0) == doctest::Approx(2.0));
}

TEST_CASE("partition constructor enforces the pointwise sum and range") {
    auto sp = seg(0, 2);
    CHECK_THROWS_AS(PartitionOfUnity(sp, {{{0, 0.5}, {1, 1.0}, {2, 1.0}}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(PartitionOfUnity(sp, {{{0, 1.5}, {1, 1.0}, {2, 1.0}}}),
                    std::invalid_argument);
}

TEST_CASE("window too small for the requested variation is a hard error") {
    auto sp = seg(0, 5);
    CHECK_THROWS_AS(build_partition(sp, 1.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(build_partition(sp, 0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(build_partition(sp, 1.0, 2.5), std::invalid_argument);
}

TEST_CASE("dual family: 1 on the support, L-Lipschitz, halo 1/L") {
    auto sp = seg(-30, 30);
    auto pou = build_partition(sp, 1.0, 0.5);
    const double L = 0.5;
    auto dual = build_dual_family(pou, L);
    CHECK(dual.lipschitz == doctest::Approx(L));
    CHECK(dual.halo == doctest::Approx(2.0));
    for (std::size_t i = 0; i < pou.count(); ++i) {
        for (auto& [x, v] : pou.function(i)) CHECK(dual.value(i, x) == doctest::Approx(1.0));
        // support of psi_i inside the 1/L halo of supp phi_i
        auto halo = pou.support(i).neighborhood(Rational(2));
        CHECK(dual.support(i).is_subset_of(halo));
    }
    CHECK_THROWS_AS(build_dual_family(pou, 0.0), std::invalid_argument);
}

TEST_CASE("block assembly with identity blocks reproduces the identity") {
    auto sp = seg(-30, 30);
    auto pou = build_partition(sp, 1.0, 0.5);
    auto dual = build_dual_family(pou, 0.25);
    std::vector<BandOperator> blocks(pou.count(), BandOperator::identity(sp));
    for (NormRegime reg : {NormRegime::pinf, NormRegime::p1, NormRegime::p0}) {
        auto R = assemble_blocks(pou, dual, blocks, reg);
        CHECK(subtract(R, BandOperator::identity(sp)).max_abs_entry() ==
              doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("block assembly norm bounded by the max block norm") {
    auto sp = seg(-30, 30);
    auto pou = build_partition(sp, 1.0, 0.5);
    auto dual = build_dual_family(pou, 0.25);
    std::vector<BandOperator> blocks;
    double M = 0.0;
    for (std::size_t i = 0; i < pou.count(); ++i) {
        auto B = BandOperator::from_offsets(
            sp, {{{0}, "2"}, {{1}, std::to_string(0.3 * (static_cast<double>(i) + 1.0))}});
        M = std::max(M, B.op_norm(NormRegime::pinf));
        blocks.push_back(std::move(B));
    }
    auto R = assemble_blocks(pou, dual, blocks, NormRegime::pinf);
    CHECK(R.op_norm(NormRegime::pinf) <= M + 1e-9);
    auto R1 = assemble_blocks(pou, dual, blocks, NormRegime::p1);
    double M1 = 0.0;
    for (auto& B : blocks) M1 = std::max(M1, B.op_norm(NormRegime::p1));
    CHECK(R1.op_norm(NormRegime::p1) <= M1 + 1e-9);

    SUBCASE("skip set removes patches") {
        auto S = assemble_blocks(pou, dual, blocks, NormRegime::pinf, {0});
        // entries under phi_0's sole coverage vanish
        bool smaller = S.nnz() < R.nnz();
        CHECK(smaller);
    }
}

TEST_CASE("commutator assembly respects the eps*N*M*||A|| bound on all four routes") {
    auto sp = seg(-100, 100);
    auto A = laplacian(sp);
    auto pou = build_partition(sp, 1.0, 0.1);
    auto dual = build_dual_family(pou, 0.1); // L = eps / r
    std::vector<BandOperator> blocks(pou.count(), BandOperator::identity(sp));
    for (NormRegime reg : {NormRegime::pinf, NormRegime::p1}) {
        for (CommutatorSide side : {CommutatorSide::right, CommutatorSide::left}) {
            auto res = commutator_assembly(pou, dual, blocks, A, reg, side);
            CHECK(res.op.op_norm(reg) <= res.bound + 1e-9);
            CHECK(res.epsilon <= 0.1 + 1e-12);
            bool lipschitz = (side == CommutatorSide::right) != (reg == NormRegime::p1);
            CHECK(res.epsilon_source ==
                  (lipschitz ? "r * dual Lipschitz constant" : "measured (r,eps)-variation"));
        }
    }
}

TEST_CASE("cutdown identity: sum phi A psi + sum phi [psi, A] = A") {
    auto sp = seg(-30, 30);
    auto A = laplacian(sp);
    auto pou = build_partition(sp, 1.0, 0.5);
    auto dual = build_dual_family(pou, 0.5);
    std::vector<BandOperator> Ablocks(pou.count(), A);
    std::vector<BandOperator> Iblocks(pou.count(), BandOperator::identity(sp));
    auto X = assemble_blocks(pou, dual, Ablocks, NormRegime::pinf);
    auto Y = commutator_assembly(pou, dual, Iblocks, A, NormRegime::pinf,
                                 CommutatorSide::right).op;
    CHECK(subtract(add(X, Y), A).max_abs_entry() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("smoothing: exact on diagonals, contractive, convergent with rate r*N*||A||/n") {
    auto sp = seg(-20, 20);
    auto pou = build_partition(sp, 1.0, 0.5);
    auto D = BandOperator::from_offsets(sp, {{{0}, "1/(1+abs(x0))"}});
    auto A = laplacian(sp);
    const int N = sp->geometry_profile(A.propagation());
    const double anorm = A.op_norm(NormRegime::pinf);
    CHECK(subtract(smooth(D, 3, NormRegime::pinf, pou), D).max_abs_entry() ==
          doctest::Approx(0.0));
    double prev = std::numeric_limits<double>::infinity();
    for (int n : {1, 2, 4, 8, 16}) {
        auto Mn = smooth(A, n, NormRegime::pinf, pou);
        CHECK(Mn.op_norm(NormRegime::pinf) <= anorm + 1e-12);
        double dist = subtract(Mn, A).op_norm(NormRegime::pinf);
        CHECK(dist <= 1.0 * N * anorm / n + 1e-12);
        CHECK(dist <= prev + 1e-12);
        prev = dist;
    }
    CHECK_THROWS_AS(smooth(A, 0, NormRegime::pinf, pou), std::invalid_argument);
}

TEST_CASE("CSV exports carry one header and one line per nonzero value") {
    auto sp = seg(-30, 30);
    auto pou = build_partition(sp, 1.0, 0.5);
    auto dual = build_dual_family(pou, 0.5);
    std::ostringstream p, d;
    export_partition_csv(pou, p);
    export_dual_csv(dual, d);
    auto lines = [](const std::string& s) {
        std::size_t n = 0;
        for (char c : s)
            if (c == '\n') ++n;
        return n;
    };
    std::size_t pn = 0;
    for (std::size_t i = 0; i < pou.count(); ++i) pn += pou.function(i).size();
    std::size_t dn = 0;
    for (auto& f : dual.functions) dn += f.size();
    CHECK(lines(p.str()) == pn + 1);
    CHECK(lines(d.str()) == dn + 1);
    CHECK(p.str().substr(0, 18) == "index,point,value\n");
    CHECK(d.str().substr(0, 18) == "index,point,value\n");
}
