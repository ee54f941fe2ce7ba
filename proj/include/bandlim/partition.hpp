#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "bandlim/band_operator.hpp"
#include "bandlim/space.hpp"

namespace bandlim {

/// Metric 1-partition of unity {phi_i}: nonnegative functions summing to 1
/// pointwise, each of bounded support, with bounded multiplicity. The p=1
/// convention serves all three extreme regimes.
class PartitionOfUnity {
public:
    PartitionOfUnity(SpacePtr space, std::vector<std::vector<std::pair<int, double>>> functions)
        : space_(std::move(space)), functions_(std::move(functions)) {
        const int n = space_->size();
        std::vector<double> sums(n, 0.0);
        by_point_.assign(n, {});
        for (std::size_t i = 0; i < functions_.size(); ++i) {
            std::sort(functions_[i].begin(), functions_[i].end());
            for (auto& [x, v] : functions_[i]) {
                if (v < 0.0 || v > 1.0 + 1e-12)
                    throw std::invalid_argument("PartitionOfUnity: value outside [0,1]");
                if (v == 0.0) continue;
                sums[x] += v;
                by_point_[x].push_back({static_cast<int>(i), v});
            }
        }
        for (int x = 0; x < n; ++x)
            if (std::abs(sums[x] - 1.0) > 1e-12)
                throw std::invalid_argument("PartitionOfUnity: sum at point " +
                                            space_->point_name(x) + " is not 1");
    }

    const SpacePtr& space() const { return space_; }
    std::size_t count() const { return functions_.size(); }
    const std::vector<std::pair<int, double>>& function(std::size_t i) const { return functions_[i]; }
    const std::vector<std::pair<int, double>>& at_point(int x) const { return by_point_[x]; }

    double value(std::size_t i, int x) const {
        for (auto& [p, v] : functions_[i])
            if (p == x) return v;
        return 0.0;
    }

    int multiplicity() const {
        int m = 0;
        for (auto& pt : by_point_) m = std::max(m, static_cast<int>(pt.size()));
        return m;
    }

    Rational support_diameter() const {
        Rational d(0);
        for (auto& f : functions_) {
            for (std::size_t a = 0; a < f.size(); ++a)
                for (std::size_t b = a + 1; b < f.size(); ++b) {
                    Rational q = space_->distance(f[a].first, f[b].first);
                    if (d < q) d = q;
                }
        }
        return d;
    }

    SupportSet support(std::size_t i) const {
        SupportSet s(space_);
        for (auto& [x, v] : functions_[i]) s.insert(x);
        return s;
    }

private:
    SpacePtr space_;
    std::vector<std::vector<std::pair<int, double>>> functions_;   // i -> sparse values
    std::vector<std::vector<std::pair<int, double>>> by_point_;    // x -> (i, value)
};

/// Dual family {psi_i}: psi_i = 1 on supp(phi_i), L-Lipschitz, supported in
/// the R-halo of supp(phi_i) with R = 1/L.
struct DualFamily {
    SpacePtr space;
    std::vector<std::vector<std::pair<int, double>>> functions;
    double lipschitz = 0.0;
    double halo = 0.0;

    double value(std::size_t i, int x) const {
        for (auto& [p, v] : functions[i])
            if (p == x) return v;
        return 0.0;
    }

    SupportSet support(std::size_t i) const {
        SupportSet s(space);
        for (auto& [x, v] : functions[i]) s.insert(x);
        return s;
    }
};

/// Exact max over pairs d(x,y) <= r of sum_i |phi_i(x) - phi_i(y)|.
inline double variation(const PartitionOfUnity& pou, double r) {
    const auto& sp = pou.space();
    const int n = sp->size();
    double worst = 0.0;
    for (int x = 0; x < n; ++x) {
        for (int y = x + 1; y < n; ++y) {
            if (sp->distance(x, y).to_double() > r) continue;
            double s = 0.0;
            const auto& fx = pou.at_point(x);
            const auto& fy = pou.at_point(y);
            std::size_t i = 0, j = 0;
            while (i < fx.size() || j < fy.size()) {
                if (j == fy.size() || (i < fx.size() && fx[i].first < fy[j].first))
                    s += std::abs(fx[i++].second);
                else if (i == fx.size() || fy[j].first < fx[i].first)
                    s += std::abs(fy[j++].second);
                else {
                    s += std::abs(fx[i].second - fy[j].second);
                    ++i; ++j;
                }
            }
            worst = std::max(worst, s);
        }
    }
    return worst;
}

/// Builds a partition with measured (r,eps)-variation on a grid window using
/// per-axis overlapping tents of half-overlap width S = ceil(2 r dim / eps),
/// tensored across axes. eps = 2 admits the single constant function on any
/// space. The certificate is re-measured, not trusted from the formula.
inline PartitionOfUnity build_partition(SpacePtr space, double r, double eps) {
    if (r <= 0.0) throw std::invalid_argument("build_partition: r must be positive");
    if (eps <= 0.0 || eps > 2.0) throw std::invalid_argument("build_partition: eps must be in (0,2]");
    if (eps == 2.0) {
        std::vector<std::pair<int, double>> all;
        for (int i = 0; i < space->size(); ++i) all.push_back({i, 1.0});
        return PartitionOfUnity(space, {all});
    }
    if (!space->is_grid())
        throw std::invalid_argument("build_partition: constructive path requires a grid window "
                                    "(explicit spaces only admit eps = 2)");
    const int dim = space->dim();
    const std::int64_t S =
        static_cast<std::int64_t>(std::ceil(2.0 * r * static_cast<double>(dim) / eps));
    // Per-axis tents; boundary tents plateau at 1 outside the first/last center.
    std::vector<std::vector<std::vector<double>>> axis_fns(dim); // axis -> tent -> value per coord
    for (int a = 0; a < dim; ++a) {
        const std::int64_t lo = space->lo()[a], hi = space->hi()[a];
        const std::int64_t len = hi - lo;
        if (len < S)
            throw std::invalid_argument(
                "build_partition: window too small to host one full tent on axis " +
                std::to_string(a) + "; need length >= " + std::to_string(S) +
                " (have " + std::to_string(len) + ")");
        const std::int64_t J = (len + S - 1) / S; // tents at lo + j*S, j = 0..J
        for (std::int64_t j = 0; j <= J; ++j) {
            const std::int64_t c = lo + j * S;
            std::vector<double> vals(static_cast<std::size_t>(len + 1), 0.0);
            for (std::int64_t x = lo; x <= hi; ++x) {
                double v;
                if (j == 0 && x <= c) v = 1.0;
                else if (j == J && x >= c) v = 1.0;
                else v = std::max(0.0, 1.0 - std::abs(static_cast<double>(x - c)) /
                                                 static_cast<double>(S));
                vals[static_cast<std::size_t>(x - lo)] = v;
            }
            axis_fns[a].push_back(std::move(vals));
        }
    }
    // Tensor across axes.
    std::vector<std::size_t> idx(dim, 0);
    std::vector<std::vector<std::pair<int, double>>> fns;
    for (;;) {
        std::vector<std::pair<int, double>> f;
        for (int p = 0; p < space->size(); ++p) {
            auto c = space->coords(p);
            double v = 1.0;
            for (int a = 0; a < dim; ++a)
                v *= axis_fns[a][idx[a]][static_cast<std::size_t>(c[a] - space->lo()[a])];
            if (v != 0.0) f.push_back({p, v});
        }
        if (!f.empty()) fns.push_back(std::move(f));
        int a = dim - 1;
        while (a >= 0 && ++idx[a] == axis_fns[a].size()) idx[a--] = 0;
        if (a < 0) break;
    }
    PartitionOfUnity pou(space, std::move(fns));
    double measured = variation(pou, r);
    // rounding headroom: tent values are multiples of 1/S, not exact in binary
    if (measured > eps * (1.0 + 1e-12) + 1e-15)
        throw std::logic_error("build_partition: measured variation " + std::to_string(measured) +
                               " exceeds requested eps " + std::to_string(eps));
    return pou;
}

/// psi_i(x) = max(0, 1 - L d(x, supp phi_i)); halo R = 1/L. Invariants are
/// re-verified before returning.
inline DualFamily build_dual_family(const PartitionOfUnity& pou, double L) {
    if (L <= 0.0) throw std::invalid_argument("build_dual_family: L must be positive");
    const auto& sp = pou.space();
    const int n = sp->size();
    DualFamily dual;
    dual.space = sp;
    dual.lipschitz = L;
    dual.halo = 1.0 / L;
    for (std::size_t i = 0; i < pou.count(); ++i) {
        const auto& supp = pou.function(i);
        std::vector<std::pair<int, double>> f;
        for (int x = 0; x < n; ++x) {
            double dmin = std::numeric_limits<double>::infinity();
            for (auto& [y, v] : supp)
                dmin = std::min(dmin, sp->distance(x, y).to_double());
            double val = std::max(0.0, 1.0 - L * dmin);
            if (val > 0.0) f.push_back({x, val});
        }
        dual.functions.push_back(std::move(f));
        for (auto& [y, v] : supp)
            if (std::abs(dual.value(i, y) - 1.0) > 1e-12)
                throw std::logic_error("build_dual_family: psi != 1 on supp(phi)");
    }
    // Lipschitz audit: |psi(x) - psi(y)| <= L d(x,y). Pairs with both points
    // outside supp(psi_i) are trivially fine, so anchor one point inside.
    for (std::size_t i = 0; i < dual.functions.size(); ++i) {
        std::vector<double> dense(n, 0.0);
        for (auto& [x, v] : dual.functions[i]) dense[x] = v;
        for (auto& [x, v] : dual.functions[i])
            for (int y = 0; y < n; ++y)
                if (std::abs(v - dense[y]) > L * sp->distance(x, y).to_double() + 1e-12)
                    throw std::logic_error("build_dual_family: Lipschitz audit failed");
    }
    return dual;
}

namespace detail {
inline std::vector<double> dense_values(const std::vector<std::pair<int, double>>& sparse, int n) {
    std::vector<double> d(n, 0.0);
    for (auto& [x, v] : sparse) d[x] = v;
    return d;
}
} // namespace detail

/// Block assembly of Lemma-style cutdowns: sum_i phi_i B_i psi_i for pinf/p0,
/// sum_i psi_i B_i phi_i for p1. Norm of the result is at most sup_i ||B_i||.
inline BandOperator assemble_blocks(const PartitionOfUnity& pou, const DualFamily& dual,
                                    const std::vector<BandOperator>& blocks, NormRegime regime,
                                    const std::set<std::size_t>& skip = {}) {
    if (dual.functions.size() != pou.count() || blocks.size() != pou.count())
        throw std::invalid_argument("assemble_blocks: index set mismatch");
    const auto& sp = pou.space();
    const int n = sp->size();
    std::vector<std::tuple<int, int, double>> trips;
    for (std::size_t i = 0; i < pou.count(); ++i) {
        if (skip.count(i)) continue;
        if (blocks[i].space() != sp)
            throw std::invalid_argument("assemble_blocks: block on a different space");
        auto left = detail::dense_values(
            regime == NormRegime::p1 ? dual.functions[i] : pou.function(i), n);
        auto right = detail::dense_values(
            regime == NormRegime::p1 ? pou.function(i) : dual.functions[i], n);
        blocks[i].for_each_entry([&](int x, int y, double v) {
            double w = left[x] * v * right[y];
            if (w != 0.0) trips.push_back({x, y, w});
        });
    }
    return BandOperator::from_entries(sp, trips);
}

enum class CommutatorSide { right, left };

struct CommutatorAssemblyResult {
    BandOperator op;
    double epsilon;       // derived from the supplied certificate
    double bound;         // epsilon * N * M * ||A||
    std::string epsilon_source;
};

/// Commutator assembly: for side = right, sum_i phi_i B_i [psi_i, A]
/// (pinf/p0) or sum_i psi_i B_i [phi_i, A] (p1); left mirrors with the
/// commutator in front. The derived epsilon is r*L for Lipschitz hypotheses
/// and the measured variation otherwise, and the result's norm is at most
/// epsilon * N * M * ||A|| with N the ball bound at prop(A).
inline CommutatorAssemblyResult commutator_assembly(const PartitionOfUnity& pou,
                                                    const DualFamily& dual,
                                                    const std::vector<BandOperator>& blocks,
                                                    const BandOperator& A, NormRegime regime,
                                                    CommutatorSide side,
                                                    const std::set<std::size_t>& skip = {}) {
    if (dual.functions.size() != pou.count() || blocks.size() != pou.count())
        throw std::invalid_argument("commutator_assembly: index set mismatch");
    const auto& sp = pou.space();
    if (A.space() != sp)
        throw std::invalid_argument("commutator_assembly: A on a different space");
    const int n = sp->size();
    const double r = A.propagation().to_double();

    // Which certificate applies (side/regime case table):
    //   right, pinf/p0: psi is (eps/r)-Lipschitz      -> eps = r * L
    //   right, p1:      phi has (r,eps)-variation     -> eps = measured variation
    //   left,  pinf/p0: phi has (r,eps)-variation     -> eps = measured variation
    //   left,  p1:      psi is (eps/r)-Lipschitz      -> eps = r * L
    bool lipschitz_route = (side == CommutatorSide::right) != (regime == NormRegime::p1);
    CommutatorAssemblyResult res{BandOperator::zero(sp), 0.0, 0.0, ""};
    if (lipschitz_route) {
        res.epsilon = r * dual.lipschitz;
        res.epsilon_source = "r * dual Lipschitz constant";
    } else {
        res.epsilon = variation(pou, std::max(r, 0.0));
        res.epsilon_source = "measured (r,eps)-variation";
    }

    std::vector<std::tuple<int, int, double>> trips;
    for (std::size_t i = 0; i < pou.count(); ++i) {
        if (skip.count(i)) continue;
        bool commutator_uses_psi = (regime != NormRegime::p1);
        auto comm_fn = detail::dense_values(
            commutator_uses_psi ? dual.functions[i] : pou.function(i), n);
        auto outer_fn = detail::dense_values(
            commutator_uses_psi ? pou.function(i) : dual.functions[i], n);
        // [g, A]_{xy} = (g(x) - g(y)) A_{xy}
        std::vector<std::tuple<int, int, double>> comm;
        A.for_each_entry([&](int x, int y, double v) {
            double w = (comm_fn[x] - comm_fn[y]) * v;
            if (w != 0.0) comm.push_back({x, y, w});
        });
        auto C = BandOperator::from_entries(sp, comm);
        BandOperator term = side == CommutatorSide::right
                                ? multiply(blocks[i], C)
                                : multiply(C, blocks[i]);
        // outer multiplication on the left (right side) or right (left side)
        term.for_each_entry([&](int x, int y, double v) {
            double w = side == CommutatorSide::right ? outer_fn[x] * v : v * outer_fn[y];
            if (w != 0.0) trips.push_back({x, y, w});
        });
    }
    res.op = BandOperator::from_entries(sp, trips);
    double M = 0.0;
    for (std::size_t i = 0; i < blocks.size(); ++i)
        if (!skip.count(i)) M = std::max(M, blocks[i].op_norm(regime));
    int N = sp->geometry_profile(A.propagation());
    res.bound = res.epsilon * static_cast<double>(N) * M * A.op_norm(regime);
    return res;
}

/// Smoothing operator M_n(A) = sum_i phi_i A psi_i^{(n)} (pinf/p0) or
/// sum_i psi_i^{(n)} A phi_i (p1) with psi^{(n)} the (1/n)-Lipschitz dual.
/// Entrywise this is A_xy scaled by a weight in [0,1], so M_n is contractive;
/// M_n(A) -> A in norm as n grows.
inline BandOperator smooth(const BandOperator& A, int n, NormRegime regime,
                           const PartitionOfUnity& pou) {
    if (n < 1) throw std::invalid_argument("smooth: n must be >= 1");
    if (A.space() != pou.space())
        throw std::invalid_argument("smooth: partition on a different space");
    auto dual = build_dual_family(pou, 1.0 / static_cast<double>(n));
    const int np = A.space()->size();
    std::vector<std::vector<double>> phis, psis;
    for (std::size_t i = 0; i < pou.count(); ++i) {
        phis.push_back(detail::dense_values(pou.function(i), np));
        psis.push_back(detail::dense_values(dual.functions[i], np));
    }
    std::vector<std::tuple<int, int, double>> trips;
    A.for_each_entry([&](int x, int y, double v) {
        double w = 0.0;
        for (std::size_t i = 0; i < phis.size(); ++i) {
            if (regime == NormRegime::p1) w += psis[i][x] * phis[i][y];
            else w += phis[i][x] * psis[i][y];
        }
        if (w != 0.0) trips.push_back({x, y, v * std::min(w, 1.0)});
    });
    return BandOperator::from_entries(A.space(), trips);
}

/// CSV export (index, point, value) for inspection.
inline void export_partition_csv(const PartitionOfUnity& pou, std::ostream& os) {
    os << "index,point,value\n";
    for (std::size_t i = 0; i < pou.count(); ++i)
        for (auto& [x, v] : pou.function(i)) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            os << i << "," << pou.space()->point_name(x) << "," << buf << "\n";
        }
}

inline void export_dual_csv(const DualFamily& dual, std::ostream& os) {
    os << "index,point,value\n";
    for (std::size_t i = 0; i < dual.functions.size(); ++i)
        for (auto& [x, v] : dual.functions[i]) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            os << i << "," << dual.space->point_name(x) << "," << buf << "\n";
        }
}

} // namespace bandlim
