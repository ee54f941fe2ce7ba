#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "bandlim/band_operator.hpp"
#include "bandlim/simplex.hpp"

namespace bandlim {

enum class LowerNormMethod { lp_exact, inverse_norm, sampled };

inline const char* method_name(LowerNormMethod m) {
    switch (m) {
        case LowerNormMethod::lp_exact: return "lp-exact";
        case LowerNormMethod::inverse_norm: return "inverse-norm";
        case LowerNormMethod::sampled: return "sampled";
    }
    return "?";
}

/// nu(A|_F) = inf over unit vectors supported in F of ||Av||; columns are
/// restricted to F, all rows kept. The certificate is the extremizing vector
/// (sparse over F) when available.
struct LowerNormResult {
    double value = 0.0;
    NormRegime regime = NormRegime::pinf;
    std::optional<double> support_constraint;
    LowerNormMethod method = LowerNormMethod::lp_exact;
    std::vector<std::pair<int, double>> certificate;
};

/// s = 8 r M N / delta: composing the uniform commutant certificate
/// L = (delta/4)/(r M N) with the localization choice s = 2/L.
inline double localization_radius(double delta, double M, double r, int N) {
    if (delta <= 0.0 || M <= 0.0 || r <= 0.0 || N <= 0)
        throw std::invalid_argument("localization_radius: all arguments must be positive");
    return 8.0 * r * M * static_cast<double>(N) / delta;
}

namespace detail {

struct RestrictedColumns {
    std::vector<int> fpoints;                          // F as ordered point list
    std::vector<int> col_of;                           // space point -> F column or -1
    std::vector<std::pair<int, std::vector<double>>> rows; // (space row, dense coeffs over F)
};

inline RestrictedColumns restrict_columns(const BandOperator& A, const SupportSet& F) {
    RestrictedColumns rc;
    rc.fpoints = F.points();
    rc.col_of.assign(A.space()->size(), -1);
    for (std::size_t i = 0; i < rc.fpoints.size(); ++i)
        rc.col_of[rc.fpoints[i]] = static_cast<int>(i);
    std::vector<std::vector<double>> dense(A.space()->size());
    std::vector<char> active(A.space()->size(), 0);
    A.for_each_entry([&](int x, int y, double v) {
        int c = rc.col_of[y];
        if (c < 0) return;
        if (!active[x]) {
            active[x] = 1;
            dense[x].assign(rc.fpoints.size(), 0.0);
        }
        dense[x][static_cast<std::size_t>(c)] += v;
    });
    for (int x = 0; x < A.space()->size(); ++x)
        if (active[x]) rc.rows.push_back({x, std::move(dense[x])});
    return rc;
}

inline bool rows_within(const RestrictedColumns& rc, const SupportSet& F) {
    for (auto& [x, row] : rc.rows)
        if (!F.contains(x)) return false;
    return true;
}

// Exact nu for pinf by |F| facet LPs: on the facet v_j = 1 of the unit cube,
// minimize t subject to |(Av)_x| <= t and |v_i| <= 1. Sign symmetry covers
// the v_j = -1 facets.
inline LowerNormResult facet_lp_pinf(const RestrictedColumns& rc) {
    const std::size_t k = rc.fpoints.size();
    LowerNormResult best;
    best.regime = NormRegime::pinf;
    best.method = LowerNormMethod::lp_exact;
    best.value = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
        // variables: y_i = v_i + 1 in [0,2] (i < k), t = var k
        std::vector<double> c(k + 1, 0.0);
        c[k] = 1.0;
        std::vector<std::vector<double>> A;
        std::vector<double> b;
        std::vector<char> type;
        for (auto& [x, row] : rc.rows) {
            double rs = 0.0;
            for (double v : row) rs += v;
            std::vector<double> pos(k + 1, 0.0), neg(k + 1, 0.0);
            for (std::size_t i = 0; i < k; ++i) { pos[i] = row[i]; neg[i] = -row[i]; }
            pos[k] = -1.0;
            neg[k] = -1.0;
            A.push_back(std::move(pos)); b.push_back(rs);  type.push_back('L');
            A.push_back(std::move(neg)); b.push_back(-rs); type.push_back('L');
        }
        for (std::size_t i = 0; i < k; ++i) {
            std::vector<double> r(k + 1, 0.0);
            r[i] = 1.0;
            A.push_back(std::move(r)); b.push_back(2.0); type.push_back('L');
        }
        {
            std::vector<double> r(k + 1, 0.0);
            r[j] = 1.0;
            A.push_back(std::move(r)); b.push_back(2.0); type.push_back('E');
        }
        auto lp = SimplexSolver::solve(c, A, b, type);
        if (!lp.feasible || !lp.bounded)
            throw std::logic_error("facet_lp_pinf: LP must be feasible and bounded");
        if (lp.objective < best.value) {
            best.value = std::max(lp.objective, 0.0);
            best.certificate.clear();
            for (std::size_t i = 0; i < k; ++i) {
                double v = lp.x[i] - 1.0;
                if (v != 0.0) best.certificate.push_back({rc.fpoints[i], v});
            }
        }
    }
    if (rc.rows.empty()) { best.value = 0.0; best.certificate = {{rc.fpoints[0], 1.0}}; }
    return best;
}

// Exact nu for p1 by per-orthant LPs (2^(|F|-1) by sign symmetry).
inline LowerNormResult orthant_lp_p1(const RestrictedColumns& rc) {
    const std::size_t k = rc.fpoints.size();
    const std::size_t nrows = rc.rows.size();
    LowerNormResult best;
    best.regime = NormRegime::p1;
    best.method = LowerNormMethod::lp_exact;
    best.value = std::numeric_limits<double>::infinity();
    if (nrows == 0) {
        best.value = 0.0;
        best.certificate = {{rc.fpoints[0], 1.0}};
        return best;
    }
    const std::size_t orthants = k == 1 ? 1 : (std::size_t{1} << (k - 1));
    for (std::size_t mask = 0; mask < orthants; ++mask) {
        std::vector<double> sigma(k, 1.0);
        for (std::size_t i = 1; i < k; ++i)
            if (mask & (std::size_t{1} << (i - 1))) sigma[i] = -1.0;
        // variables: w_i = sigma_i v_i >= 0 (i < k), u_x >= 0 (row slabs)
        const std::size_t nv = k + nrows;
        std::vector<double> c(nv, 0.0);
        for (std::size_t K = 0; K < nrows; ++K) c[k + K] = 1.0;
        std::vector<std::vector<double>> A;
        std::vector<double> b;
        std::vector<char> type;
        for (std::size_t K = 0; K < nrows; ++K) {
            std::vector<double> pos(nv, 0.0), neg(nv, 0.0);
            for (std::size_t i = 0; i < k; ++i) {
                pos[i] = sigma[i] * rc.rows[K].second[i];
                neg[i] = -pos[i];
            }
            pos[k + K] = -1.0;
            neg[k + K] = -1.0;
            A.push_back(std::move(pos)); b.push_back(0.0); type.push_back('L');
            A.push_back(std::move(neg)); b.push_back(0.0); type.push_back('L');
        }
        {
            std::vector<double> r(nv, 0.0);
            for (std::size_t i = 0; i < k; ++i) r[i] = 1.0;
            A.push_back(std::move(r)); b.push_back(1.0); type.push_back('E');
        }
        auto lp = SimplexSolver::solve(c, A, b, type);
        if (!lp.feasible || !lp.bounded)
            throw std::logic_error("orthant_lp_p1: LP must be feasible and bounded");
        if (lp.objective < best.value) {
            best.value = std::max(lp.objective, 0.0);
            best.certificate.clear();
            for (std::size_t i = 0; i < k; ++i) {
                double v = sigma[i] * lp.x[i];
                if (v != 0.0) best.certificate.push_back({rc.fpoints[i], v});
            }
        }
    }
    return best;
}

// Certified-as-upper-bound random search, used when exact p1 enumeration is
// out of reach.
inline LowerNormResult sampled_p1(const BandOperator& A, const RestrictedColumns& rc,
                                  unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t k = rc.fpoints.size();
    const int n = A.space()->size();
    LowerNormResult best;
    best.regime = NormRegime::p1;
    best.method = LowerNormMethod::sampled;
    best.value = std::numeric_limits<double>::infinity();
    auto eval = [&](const std::vector<double>& vF) {
        std::vector<double> v(n, 0.0);
        double l1 = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            v[rc.fpoints[i]] = vF[i];
            l1 += std::abs(vF[i]);
        }
        if (l1 == 0.0) return;
        auto av = A.apply(v);
        double r = 0.0;
        for (double x : av) r += std::abs(x);
        r /= l1;
        if (r < best.value) {
            best.value = r;
            best.certificate.clear();
            for (std::size_t i = 0; i < k; ++i)
                if (vF[i] != 0.0) best.certificate.push_back({rc.fpoints[i], vF[i] / l1});
        }
    };
    for (std::size_t i = 0; i < k; ++i) {
        std::vector<double> e(k, 0.0);
        e[i] = 1.0;
        eval(e);
    }
    std::vector<double> vF(k);
    for (int it = 0; it < 4000; ++it) {
        for (auto& x : vF) x = u(rng);
        if (it % 2) {
            // sparse candidates
            for (std::size_t i = 0; i < k; ++i)
                if (u(rng) > 0.0) vF[i] = 0.0;
        }
        eval(vF);
    }
    return best;
}

// Certified-as-upper-bound random search for pinf/p0, used when the facet-LP
// count makes the exact route too expensive.
inline LowerNormResult sampled_pinf(const BandOperator& A, const RestrictedColumns& rc,
                                    unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t k = rc.fpoints.size();
    const int n = A.space()->size();
    LowerNormResult best;
    best.regime = NormRegime::pinf;
    best.method = LowerNormMethod::sampled;
    best.value = std::numeric_limits<double>::infinity();
    auto eval = [&](const std::vector<double>& vF) {
        double linf = 0.0;
        for (double x : vF) linf = std::max(linf, std::abs(x));
        if (linf == 0.0) return;
        std::vector<double> v(n, 0.0);
        for (std::size_t i = 0; i < k; ++i) v[rc.fpoints[i]] = vF[i];
        auto av = A.apply(v);
        double r = 0.0;
        for (double x : av) r = std::max(r, std::abs(x));
        r /= linf;
        if (r < best.value) {
            best.value = r;
            best.certificate.clear();
            for (std::size_t i = 0; i < k; ++i)
                if (vF[i] != 0.0) best.certificate.push_back({rc.fpoints[i], vF[i] / linf});
        }
    };
    for (std::size_t i = 0; i < k; ++i) {
        std::vector<double> e(k, 0.0);
        e[i] = 1.0;
        eval(e);
    }
    std::vector<double> vF(k);
    for (int it = 0; it < 4000; ++it) {
        for (auto& x : vF) x = u(rng);
        if (it % 2) {
            // sparse candidates
            for (std::size_t i = 0; i < k; ++i)
                if (u(rng) > 0.0) vF[i] = 0.0;
        }
        eval(vF);
    }
    // Inverse-iteration candidates: near-kernel vectors of the square block
    // A|_{FxF} are the natural minimizers for band operators, and random
    // vectors essentially never find them.
    {
        const auto ki = static_cast<Eigen::Index>(k);
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(ki, ki);
        for (auto& [x, row] : rc.rows) {
            int rr = rc.col_of[x];
            if (rr < 0) continue;
            for (std::size_t i = 0; i < k; ++i) M(rr, static_cast<Eigen::Index>(i)) = row[i];
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
        lu.setThreshold(1e-12);
        if (!lu.isInvertible()) {
            Eigen::MatrixXd ker = lu.kernel();
            for (Eigen::Index c = 0; c < ker.cols() && c < 4; ++c) {
                for (std::size_t i = 0; i < k; ++i) vF[i] = ker(static_cast<Eigen::Index>(i), c);
                eval(vF);
            }
        } else {
            Eigen::VectorXd w(ki);
            for (int t = 0; t < 16; ++t) {
                for (Eigen::Index i = 0; i < ki; ++i) w(i) = u(rng);
                for (int step = 0; step < 3; ++step) {
                    w = lu.solve(w);
                    double nrm = w.lpNorm<Eigen::Infinity>();
                    if (!(nrm > 0.0) || !w.allFinite()) break;
                    w /= nrm;
                    for (std::size_t i = 0; i < k; ++i) vF[i] = w(static_cast<Eigen::Index>(i));
                    eval(vF);
                }
            }
        }
    }
    return best;
}

} // namespace detail

/// Square-system shortcut: when every nonzero row of A|_F lies inside F the
/// restriction is a square matrix and nu = 1 / ||(A|_F)^{-1}||. Returns
/// nullopt when the hypothesis fails; a singular matrix yields nu = 0 with a
/// kernel certificate.
inline std::optional<LowerNormResult> lower_norm_square(const BandOperator& A,
                                                        const SupportSet& F, NormRegime regime) {
    auto rc = detail::restrict_columns(A, F);
    if (!detail::rows_within(rc, F)) return std::nullopt;
    const std::size_t k = rc.fpoints.size();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k),
                                              static_cast<Eigen::Index>(k));
    for (auto& [x, row] : rc.rows) {
        int rr = rc.col_of[x];
        for (std::size_t i = 0; i < k; ++i) M(rr, static_cast<Eigen::Index>(i)) = row[i];
    }
    LowerNormResult res;
    res.regime = regime;
    res.method = LowerNormMethod::inverse_norm;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) {
        res.value = 0.0;
        Eigen::MatrixXd ker = lu.kernel();
        Eigen::VectorXd v = ker.col(0);
        double nrm = regime == NormRegime::p1 ? v.lpNorm<1>() : v.lpNorm<Eigen::Infinity>();
        for (std::size_t i = 0; i < k; ++i)
            if (v(static_cast<Eigen::Index>(i)) != 0.0)
                res.certificate.push_back({rc.fpoints[i], v(static_cast<Eigen::Index>(i)) / nrm});
        return res;
    }
    Eigen::MatrixXd B = lu.inverse();
    // Norm of the inverse and a witness vector w with ||Bw|| = ||B||.
    double bn = 0.0;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    if (regime == NormRegime::p1) {
        Eigen::Index jstar = 0;
        for (Eigen::Index j = 0; j < B.cols(); ++j) {
            double s = B.col(j).lpNorm<1>();
            if (s > bn) { bn = s; jstar = j; }
        }
        w(jstar) = 1.0;
    } else {
        Eigen::Index istar = 0;
        for (Eigen::Index i = 0; i < B.rows(); ++i) {
            double s = B.row(i).lpNorm<1>();
            if (s > bn) { bn = s; istar = i; }
        }
        for (Eigen::Index j = 0; j < B.cols(); ++j)
            w(j) = B(istar, j) >= 0.0 ? 1.0 : -1.0;
    }
    res.value = 1.0 / bn;
    Eigen::VectorXd v = B * w; // ||v|| = ||B||, A v = w with ||w|| = 1
    double nrm = regime == NormRegime::p1 ? v.lpNorm<1>() : v.lpNorm<Eigen::Infinity>();
    for (std::size_t i = 0; i < k; ++i)
        if (v(static_cast<Eigen::Index>(i)) != 0.0)
            res.certificate.push_back({rc.fpoints[i], v(static_cast<Eigen::Index>(i)) / nrm});
    return res;
}

/// Exact lower norm by linear programming (facet LPs for pinf/p0 up to
/// |F| <= 128, orthant LPs for p1 up to |F| <= 16, sampled fallbacks beyond).
inline LowerNormResult lower_norm_lp(const BandOperator& A, const SupportSet& F,
                                     NormRegime regime, bool allow_sampled = true,
                                     unsigned seed = 1) {
    if (F.empty()) throw std::invalid_argument("lower_norm: F must be nonempty");
    auto rc = detail::restrict_columns(A, F);
    if (regime == NormRegime::p1) {
        if (rc.fpoints.size() > 16) {
            if (!allow_sampled)
                throw std::invalid_argument(
                    "lower_norm: exact p1 enumeration is capped at |F| <= 16 and sampling is "
                    "disabled");
            return detail::sampled_p1(A, rc, seed);
        }
        return detail::orthant_lp_p1(rc);
    }
    if (rc.fpoints.size() > 128) {
        if (!allow_sampled)
            throw std::invalid_argument(
                "lower_norm: exact pinf facet LPs are capped at |F| <= 128 and sampling is "
                "disabled");
        auto r = detail::sampled_pinf(A, rc, seed);
        r.regime = regime;
        return r;
    }
    auto r = detail::facet_lp_pinf(rc);
    r.regime = regime;
    return r;
}

namespace detail {

/// Exact fast path: if A restricted to columns F is diagonal (each column's
/// sole nonzero sits on the diagonal), nu = min |a_x| over F in every regime.
inline std::optional<LowerNormResult> diagonal_shortcut(const BandOperator& A,
                                                        const SupportSet& F, NormRegime regime) {
    double best = std::numeric_limits<double>::infinity();
    int best_pt = -1;
    bool diagonal = true;
    std::vector<double> col(A.space()->size(), 0.0);
    A.for_each_entry([&](int x, int y, double v) {
        if (!F.contains(y)) return;
        if (x != y) diagonal = false;
        else col[y] = v;
    });
    if (!diagonal) return std::nullopt;
    for (int y : F.points())
        if (std::abs(col[y]) < best) { best = std::abs(col[y]); best_pt = y; }
    LowerNormResult res;
    res.value = best;
    res.regime = regime;
    res.method = LowerNormMethod::inverse_norm;
    res.certificate = {{best_pt, 1.0}};
    return res;
}

} // namespace detail

/// Lower norm dispatcher: diagonal and square inverse-norm shortcuts first,
/// otherwise the LP (or sampled) path.
inline LowerNormResult lower_norm(const BandOperator& A, const SupportSet& F, NormRegime regime,
                                  bool allow_sampled = true, unsigned seed = 1) {
    if (F.empty()) throw std::invalid_argument("lower_norm: F must be nonempty");
    if (auto d = detail::diagonal_shortcut(A, F, regime)) return *d;
    if (F.count() <= 800)
        if (auto sq = lower_norm_square(A, F, regime)) return *sq;
    return lower_norm_lp(A, F, regime, allow_sampled, seed);
}

/// nu_s: infimum over unit vectors supported in F with support diameter at
/// most s, computed as the min of lower norms over metric balls of radius
/// s/2 intersected with F.
inline LowerNormResult restricted_lower_norm(const BandOperator& A, const SupportSet& F, double s,
                                             NormRegime regime, bool allow_sampled = true,
                                             unsigned seed = 1) {
    if (F.empty()) throw std::invalid_argument("restricted_lower_norm: F must be nonempty");
    const auto& sp = A.space();
    auto fp = F.points();
    std::set<std::vector<int>> seen;
    LowerNormResult best;
    best.regime = regime;
    best.value = std::numeric_limits<double>::infinity();
    for (int c : fp) {
        SupportSet S = SupportSet::where(sp, [&](int i) {
            return F.contains(i) && sp->distance(c, i).to_double() <= s / 2.0 + 1e-12;
        });
        if (S.count() == F.count()) {
            // The constraint is vacuous: F itself is admissible and dominates.
            auto r = lower_norm(A, F, regime, allow_sampled, seed);
            r.support_constraint = s;
            return r;
        }
        auto pts = S.points();
        if (!seen.insert(pts).second) continue;
        auto r = lower_norm(A, S, regime, allow_sampled, seed);
        if (r.value < best.value) {
            best = r;
            best.regime = regime;
        }
    }
    best.support_constraint = s;
    return best;
}

} // namespace bandlim
