#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "bandlim/band_operator.hpp"
#include "bandlim/limits.hpp"
#include "bandlim/lower_norm.hpp"
#include "bandlim/partition.hpp"
#include "bandlim/quasilocal.hpp"

namespace bandlim {

/// Patchwise one-sided inverses over the supports V_i of a dual family:
/// B_i A P_{V_i} = P_{V_i} = P_{V_i} A C_i for i outside the exceptional
/// set K. Obtained from buffered-window truncation inverses.
struct LocalParametrixSet {
    std::vector<SupportSet> patches;          // V_i
    std::vector<BandOperator> left_inverses;  // B_i (zero operator for i in K)
    std::vector<BandOperator> right_inverses; // C_i
    std::set<std::size_t> exceptional;        // K
    double norm_bound = 0.0;                  // max over i not in K of max(||B_i||, ||C_i||)
    std::vector<std::int64_t> buffer_used;    // -1 for exceptional patches
};

namespace detail {

/// Dense restriction of A to rows and columns in W (by point list order).
inline Eigen::MatrixXd dense_restriction(const BandOperator& A, const std::vector<int>& w) {
    std::vector<int> pos(A.space()->size(), -1);
    for (std::size_t i = 0; i < w.size(); ++i) pos[w[i]] = static_cast<int>(i);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(w.size()),
                                              static_cast<Eigen::Index>(w.size()));
    A.for_each_entry([&](int x, int y, double v) {
        if (pos[x] >= 0 && pos[y] >= 0) M(pos[x], pos[y]) = v;
    });
    return M;
}

inline double dense_norm(const Eigen::MatrixXd& M, NormRegime regime) {
    double m = 0.0;
    if (regime == NormRegime::p1) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) m = std::max(m, M.col(j).lpNorm<1>());
    } else {
        for (Eigen::Index i = 0; i < M.rows(); ++i) m = std::max(m, M.row(i).lpNorm<1>());
    }
    return m;
}

inline BandOperator embed(SpacePtr sp, const std::vector<int>& w, const Eigen::MatrixXd& M,
                          const std::vector<char>* col_mask = nullptr) {
    std::vector<std::tuple<int, int, double>> trips;
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t j = 0; j < w.size(); ++j) {
            if (col_mask && !(*col_mask)[w[j]]) continue;
            double v = M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (v != 0.0) trips.push_back({w[i], w[j], v});
        }
    return BandOperator::from_entries(std::move(sp), trips);
}

/// Window midpoint (grid spaces); point 0 otherwise.
inline int center_point(const SpacePtr& sp) {
    if (!sp->is_grid()) return 0;
    std::vector<std::int64_t> c(sp->dim());
    for (int a = 0; a < sp->dim(); ++a) {
        std::int64_t lo = sp->lo()[a], hi = sp->hi()[a];
        c[a] = lo + (hi - lo) / 2;
    }
    return *sp->index_of(c);
}

} // namespace detail

/// Buffered-window local parametrices: per patch V_i, the smallest buffer
/// b <= max_buffer with A_W = P_W A P_W invertible and ||A_W^{-1}|| <= M_target
/// (W = N_b(V_i)) yields B_i = (A_W)^{-1} P_W and C_i = P_W (A_W)^{-1} P_{V_i}.
/// The patch identities B_i A P_{V_i} = P_{V_i} = P_{V_i} A C_i hold because
/// V_i is a subset of W; they are re-verified entrywise to 1e-9. Patches
/// failing at max_buffer enter the exceptional set K.
inline LocalParametrixSet local_parametrices(const BandOperator& A, const DualFamily& dual,
                                             double M_target, double max_buffer,
                                             NormRegime regime) {
    if (M_target <= 0.0 || max_buffer <= 0.0)
        throw std::invalid_argument("local_parametrices: M_target and max_buffer must be positive");
    const auto& sp = A.space();
    if (dual.space != sp)
        throw std::invalid_argument("local_parametrices: dual family on a different space");
    LocalParametrixSet out;
    std::vector<char> covered(sp->size(), 0);
    for (std::size_t i = 0; i < dual.functions.size(); ++i) {
        SupportSet V = dual.support(i);
        for (int p : V.points()) covered[p] = 1;
        out.patches.push_back(std::move(V));
    }
    for (int x = 0; x < sp->size(); ++x)
        if (!covered[x])
            throw std::invalid_argument("local_parametrices: patches do not cover the space");

    for (std::size_t i = 0; i < out.patches.size(); ++i) {
        const SupportSet& V = out.patches[i];
        std::vector<char> vmask(sp->size(), 0);
        for (int p : V.points()) vmask[p] = 1;
        bool accepted = false;
        for (std::int64_t b = 0; b <= static_cast<std::int64_t>(max_buffer); ++b) {
            SupportSet W = b == 0 ? V : V.neighborhood(Rational(b));
            auto w = W.points();
            Eigen::MatrixXd AW = detail::dense_restriction(A, w);
            Eigen::FullPivLU<Eigen::MatrixXd> lu(AW);
            lu.setThreshold(1e-12);
            if (!lu.isInvertible()) continue;
            Eigen::MatrixXd inv = lu.inverse();
            if (detail::dense_norm(inv, regime) > M_target) continue;
            BandOperator B = detail::embed(sp, w, inv);
            BandOperator C = detail::embed(sp, w, inv, &vmask);
            // Re-verify the patch identities entrywise (against P_V).
            auto check = [&](const BandOperator& lhs) {
                double worst = 0.0;
                std::vector<char> diag_seen(sp->size(), 0);
                lhs.for_each_entry([&](int x, int y, double v) {
                    if (x == y && vmask[x]) {
                        diag_seen[x] = 1;
                        worst = std::max(worst, std::abs(v - 1.0));
                    } else {
                        worst = std::max(worst, std::abs(v));
                    }
                });
                for (int p : V.points())
                    if (!diag_seen[p]) worst = std::max(worst, 1.0);
                return worst;
            };
            BandOperator BAP = multiply(B, A);
            {   // mask columns to V: B A P_V
                std::vector<std::tuple<int, int, double>> t;
                BAP.for_each_entry([&](int x, int y, double v) {
                    if (vmask[y]) t.push_back({x, y, v});
                });
                BAP = BandOperator::from_entries(sp, t);
            }
            BandOperator PAC = multiply(A, C);
            {   // mask rows to V: P_V A C
                std::vector<std::tuple<int, int, double>> t;
                PAC.for_each_entry([&](int x, int y, double v) {
                    if (vmask[x]) t.push_back({x, y, v});
                });
                PAC = BandOperator::from_entries(sp, t);
            }
            if (check(BAP) > 1e-9 || check(PAC) > 1e-9)
                throw std::logic_error("local_parametrices: patch identity verification failed");
            out.norm_bound = std::max(out.norm_bound,
                                      std::max(B.op_norm(regime), C.op_norm(regime)));
            out.left_inverses.push_back(std::move(B));
            out.right_inverses.push_back(std::move(C));
            out.buffer_used.push_back(b);
            accepted = true;
            break;
        }
        if (!accepted) {
            out.exceptional.insert(i);
            out.left_inverses.push_back(BandOperator::zero(sp));
            out.right_inverses.push_back(BandOperator::zero(sp));
            out.buffer_used.push_back(-1);
        }
    }
    if (out.exceptional.size() == out.patches.size())
        throw std::runtime_error("local_parametrices: no invertible patches; operator nowhere "
                                 "locally invertible at scale max_buffer");
    return out;
}

/// Constant offset coefficients {c_k} of A, read off the stored entries:
/// every entry at lattice offset k must agree within tol. Returns nullopt
/// when some offset carries non-constant values.
inline std::optional<std::vector<std::pair<std::vector<std::int64_t>, double>>>
constant_offsets(const BandOperator& A, double tol = 1e-12) {
    const auto& sp = A.space();
    if (!sp->is_grid()) return std::nullopt;
    std::map<std::vector<std::int64_t>, std::pair<double, double>> range; // offset -> (min,max)
    A.for_each_entry([&](int x, int y, double v) {
        auto cx = sp->coords(x);
        auto cy = sp->coords(y);
        std::vector<std::int64_t> k(sp->dim());
        for (int a = 0; a < sp->dim(); ++a) k[a] = cx[a] - cy[a];
        auto it = range.find(k);
        if (it == range.end()) range.emplace(std::move(k), std::pair{v, v});
        else {
            it->second.first = std::min(it->second.first, v);
            it->second.second = std::max(it->second.second, v);
        }
    });
    std::vector<std::pair<std::vector<std::int64_t>, double>> out;
    for (auto& [k, mm] : range) {
        if (mm.second - mm.first > tol) return std::nullopt;
        out.push_back({k, 0.5 * (mm.first + mm.second)});
    }
    return out;
}

struct LaurentRecord {
    bool invertible = false;
    double symbol_min = 0.0;      // grid minimum of |p(z)| over the torus
    double slack = 0.0;           // symbol_min minus the Lipschitz grid bound
    double inverse_norm_p1 = std::numeric_limits<double>::infinity();
    double inverse_norm_pinf = std::numeric_limits<double>::infinity();
};

/// Invertibility of the bi-infinite Laurent operator with constant offsets
/// {c_k}: the symbol p(z) = sum c_k z^k is scanned on a torus grid with a
/// Lipschitz slack certificate (grid min minus step times sum |k||c_k|).
/// When certified invertible, the l1/linf inverse norms are sum |d_j| over
/// the Fourier coefficients d_j of 1/p, accumulated over growing coefficient
/// boxes until successive values differ by < 1e-6.
inline LaurentRecord laurent_invertibility(
    const std::vector<std::pair<std::vector<std::int64_t>, double>>& coeffs, int dim) {
    using namespace std::complex_literals;
    if (dim < 1) throw std::invalid_argument("laurent_invertibility: dim must be >= 1");
    const std::int64_t G = dim == 1 ? 16384 : dim == 2 ? 128 : 32;
    std::int64_t npts = 1;
    for (int a = 0; a < dim; ++a) npts *= G;

    LaurentRecord rec;
    double lip = 0.0;
    for (auto& [k, c] : coeffs) {
        std::int64_t l1 = 0;
        for (auto ka : k) l1 += ka < 0 ? -ka : ka;
        lip += static_cast<double>(l1) * std::abs(c);
    }
    const double two_pi = 2.0 * std::numbers::pi;
    std::vector<std::complex<double>> q(static_cast<std::size_t>(npts));
    std::vector<std::vector<double>> theta(static_cast<std::size_t>(npts));
    double gmin = std::numeric_limits<double>::infinity();
    for (std::int64_t t = 0; t < npts; ++t) {
        std::vector<double> th(dim);
        std::int64_t rem = t;
        for (int a = dim - 1; a >= 0; --a) {
            th[a] = two_pi * static_cast<double>(rem % G) / static_cast<double>(G);
            rem /= G;
        }
        std::complex<double> p = 0.0;
        for (auto& [k, c] : coeffs) {
            double phase = 0.0;
            for (int a = 0; a < dim; ++a) phase += static_cast<double>(k[a]) * th[a];
            p += c * std::exp(1.0i * phase);
        }
        gmin = std::min(gmin, std::abs(p));
        q[static_cast<std::size_t>(t)] = p;
        theta[static_cast<std::size_t>(t)] = std::move(th);
    }
    rec.symbol_min = gmin;
    rec.slack = gmin - lip * std::numbers::pi * static_cast<double>(dim) / static_cast<double>(G);
    if (gmin <= 1e-12) { rec.invertible = false; return rec; }
    if (rec.slack <= 0.0)
        throw std::runtime_error("laurent_invertibility: inconclusive, refine grid");
    rec.invertible = true;

    for (auto& v : q) v = 1.0 / v;
    auto box_mass = [&](std::int64_t J_lo, std::int64_t J_hi) {
        // sum of |d_j| over offsets with J_lo < ||j||_inf <= J_hi
        double total = 0.0;
        std::vector<std::int64_t> j(dim, -J_hi);
        for (;;) {
            std::int64_t linf = 0;
            for (auto ja : j) linf = std::max(linf, ja < 0 ? -ja : ja);
            if (linf > J_lo) {
                std::complex<double> d = 0.0;
                for (std::int64_t t = 0; t < npts; ++t) {
                    double phase = 0.0;
                    for (int a = 0; a < dim; ++a)
                        phase += static_cast<double>(j[a]) * theta[static_cast<std::size_t>(t)][a];
                    d += q[static_cast<std::size_t>(t)] * std::exp(-1.0i * phase);
                }
                total += std::abs(d) / static_cast<double>(npts);
            }
            int a = dim - 1;
            while (a >= 0 && ++j[a] > J_hi) j[a--] = -J_hi;
            if (a < 0) break;
        }
        return total;
    };
    double total = box_mass(-1, 8);
    for (std::int64_t J = 8; 2 * J <= G / 2 - 1; J *= 2) {
        double shell = box_mass(J, 2 * J);
        total += shell;
        if (shell < 1e-6) break;
    }
    rec.inverse_norm_p1 = rec.inverse_norm_pinf = total;
    return rec;
}

inline LaurentRecord laurent_invertibility(const BandOperator& L, double constancy_tol = 1e-12) {
    auto coeffs = constant_offsets(L, constancy_tol);
    if (!coeffs)
        throw std::invalid_argument("laurent_invertibility: operator does not have constant "
                                    "offset coefficients at the requested tolerance");
    return laurent_invertibility(*coeffs, L.space()->dim());
}

/// Per-limit-operator invertibility record feeding the parametrix and the
/// main-theorem verdict.
struct LimitVerdict {
    std::string direction;
    bool rich = false;
    bool constant_coefficients = false;
    bool conclusive = false;      // false: analysis could not certify either way
    bool invertible = false;
    std::string method;           // "laurent-certified" | "nu-stabilization-heuristic"
    double inverse_norm = std::numeric_limits<double>::infinity();
    double symbol_min = 0.0;      // laurent route only
    double nu = 0.0;              // lower norm on the reference-window interior
};

/// Heuristic invertibility for non-constant limit operators: lower norms of
/// A and its adjoint over growing centered truncations; invertible-looking
/// when the stabilized value stays above threshold. Never a certificate.
inline std::pair<bool, double> nu_stabilization(const BandOperator& A, NormRegime regime,
                                                double threshold = 1e-6) {
    const auto& sp = A.space();
    const int center = detail::center_point(sp);
    auto tail_nu = [&](const BandOperator& B, NormRegime reg) {
        double last = std::numeric_limits<double>::infinity();
        Rational rad = sp->diameter();
        for (int k = 1;; ++k) {
            SupportSet F = SupportSet::ball(sp, center, Rational(k));
            double v = lower_norm(B, F, reg).value;
            if (std::abs(v - last) < 1e-6 || Rational(k) > rad) return v;
            last = v;
        }
    };
    NormRegime dual = regime == NormRegime::p1 ? NormRegime::pinf : NormRegime::p1;
    double nu = tail_nu(A, regime);
    double nu_adj = tail_nu(adjoint(A), dual);
    double m = std::min(nu, nu_adj);
    return {m > threshold, m > 0.0 ? 1.0 / m : std::numeric_limits<double>::infinity()};
}

struct ResidualCurvePoint {
    std::int64_t radius = 0;
    double left_aq = 0.0, left_qa = 0.0, right_aq = 0.0, right_qa = 0.0;
};

/// Two-sided parametrix for a band operator whose sampled limit operators
/// are invertible with sup inverse norm M (Prop band-para construction).
struct ParametrixResult {
    BandOperator A_L, A_R;
    BandOperator residual_left;   // A_L A - I
    BandOperator residual_right;  // A A_R - I
    double epsilon = 0.0;
    double M = 0.0;               // supplied sup inverse norm
    int N = 1;                    // ball bound at prop(A)
    double A_norm = 0.0;
    double T0_left_norm = 0.0, T0_right_norm = 0.0;
    double AL_norm = 0.0, AR_norm = 0.0;
    double local_norm_bound = 0.0;
    std::set<std::size_t> exceptional_left, exceptional_right;
    SupportSet exceptional_support;
    std::vector<ResidualCurvePoint> curve;
    double final_defect = 0.0;    // max residual defect at the largest tested F
};

namespace detail {

/// (I + T)^{-1} by Neumann series, truncated when the term norm < 1e-12.
/// Caller must have asserted ||T|| <= 1/2.
inline BandOperator neumann_inverse(const BandOperator& T, NormRegime regime) {
    auto I = BandOperator::identity(T.space());
    BandOperator acc = I, term = I;
    for (int k = 1; k <= 200; ++k) {
        term = multiply(term, scale(T, -1.0));
        if (term.op_norm(regime) < 1e-12) break;
        acc = add(acc, term);
    }
    return acc;
}

struct OneSided {
    BandOperator A_L;        // left parametrix: A_L A = I - (I+T0)^{-1} sum_K phi_i
    double T0_norm = 0.0;
    double local_bound = 0.0;
    std::set<std::size_t> exceptional;
    SupportSet exceptional_phi_support;
    double halo = 0.0;
    double r_eff = 1.0;
};

inline OneSided left_parametrix(const BandOperator& A, double M, NormRegime regime,
                                double max_buffer) {
    const auto& sp = A.space();
    const double A_norm = A.op_norm(regime);
    if (A_norm == 0.0) throw std::invalid_argument("assemble_parametrix: zero operator");
    const double r = A.propagation().to_double();
    const double r_eff = std::max(r, 1.0);   // diagonal operators still need a partition scale
    const int N = sp->geometry_profile(A.propagation());
    double eps = 1.0 / (2.0 * M * static_cast<double>(N) * A_norm);
    eps = std::min(eps, 2.0);

    PartitionOfUnity pou = [&] {
        try {
            return build_partition(sp, r_eff, eps);
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(std::string("assemble_parametrix: window too small for the "
                                                 "required partition scale (") + e.what() + ")");
        }
    }();
    DualFamily dual = build_dual_family(pou, eps / r_eff);
    LocalParametrixSet lps = local_parametrices(A, dual, M + 1e-9, max_buffer, regime);

    BandOperator D = assemble_blocks(pou, dual, lps.left_inverses, regime, lps.exceptional);
    auto T0res = commutator_assembly(pou, dual, lps.left_inverses, A, regime,
                                     CommutatorSide::right, lps.exceptional);
    OneSided out{BandOperator::zero(sp), T0res.op.op_norm(regime), lps.norm_bound,
                 lps.exceptional, SupportSet(sp), 1.0 / dual.lipschitz, r_eff};
    if (out.T0_norm > 0.5)
        throw std::runtime_error(
            "assemble_parametrix: ||T0|| = " + std::to_string(out.T0_norm) +
            " > 1/2; the window cannot host a fine enough partition (needs per-axis length >= " +
            std::to_string(static_cast<std::int64_t>(
                std::ceil(2.0 * r_eff * static_cast<double>(sp->dim()) / eps))) + ")");
    BandOperator inv = neumann_inverse(T0res.op, regime);
    out.A_L = multiply(inv, D);
    for (std::size_t i : lps.exceptional)
        for (auto& [x, v] : pou.function(i)) out.exceptional_phi_support.insert(x);
    return out;
}

} // namespace detail

/// Prop band-para construction: epsilon = 1/(2 M N ||A||), a partition with
/// (prop, epsilon)-variation and (epsilon/prop)-Lipschitz dual, buffered local
/// parametrices, T0 with ||T0|| <= 1/2, and Neumann inversion. The right
/// parametrix is the adjoint of the left parametrix of the adjoint problem in
/// the dual norm regime.
inline ParametrixResult assemble_parametrix(const BandOperator& A, double M, NormRegime regime,
                                            double max_buffer = 16.0) {
    if (M <= 0.0 || !std::isfinite(M))
        throw std::invalid_argument("assemble_parametrix: M must be positive and finite");
    const auto& sp = A.space();
    NormRegime dual_regime = regime == NormRegime::p1 ? NormRegime::pinf : NormRegime::p1;

    auto left = detail::left_parametrix(A, M, regime, max_buffer);
    auto rightT = detail::left_parametrix(adjoint(A), M, dual_regime, max_buffer);

    auto I = BandOperator::identity(sp);
    ParametrixResult res{
        left.A_L, adjoint(rightT.A_L),
        BandOperator::zero(sp), BandOperator::zero(sp),
        std::min(1.0 / (2.0 * M * sp->geometry_profile(A.propagation()) * A.op_norm(regime)), 2.0),
        M, sp->geometry_profile(A.propagation()), A.op_norm(regime),
        left.T0_norm, rightT.T0_norm, 0.0, 0.0,
        std::max(left.local_bound, rightT.local_bound),
        left.exceptional, rightT.exceptional, SupportSet(sp), {}, 0.0};
    res.residual_left = subtract(multiply(res.A_L, A), I);
    res.residual_right = subtract(multiply(A, res.A_R), I);
    res.AL_norm = res.A_L.op_norm(regime);
    res.AR_norm = res.A_R.op_norm(regime);
    for (int p : left.exceptional_phi_support.points()) res.exceptional_support.insert(p);
    for (int p : rightT.exceptional_phi_support.points()) res.exceptional_support.insert(p);

    // Residual P-compactness defect along nested F: centered balls joined
    // with a haloed neighborhood of the exceptional support.
    const int center = detail::center_point(sp);
    std::int64_t rmax = 0;
    if (sp->is_grid()) {
        rmax = std::numeric_limits<std::int64_t>::max();
        for (int a = 0; a < sp->dim(); ++a)
            rmax = std::min(rmax, (sp->hi()[a] - sp->lo()[a]) / 2);
    } else {
        rmax = static_cast<std::int64_t>(std::ceil(sp->diameter().to_double()));
    }
    const Rational margin(static_cast<std::int64_t>(
        std::ceil(std::max(left.halo, rightT.halo) + left.r_eff)));
    SupportSet haloK = res.exceptional_support.empty()
                           ? res.exceptional_support
                           : res.exceptional_support.neighborhood(margin);
    std::vector<std::int64_t> radii;
    for (std::int64_t k = 2; k < rmax; k *= 2) radii.push_back(k);
    radii.push_back(rmax);
    for (std::int64_t k : radii) {
        SupportSet F = SupportSet::ball(sp, center, Rational(k));
        for (int p : haloK.points()) F.insert(p);
        auto dl = res.residual_left.pclass_defect(F, std::nullopt, regime);
        auto dr = res.residual_right.pclass_defect(F, std::nullopt, regime);
        res.curve.push_back({k, dl.aq, dl.qa, dr.aq, dr.qa});
    }
    const auto& lastpt = res.curve.back();
    res.final_defect = std::max(std::max(lastpt.left_aq, lastpt.left_qa),
                                std::max(lastpt.right_aq, lastpt.right_qa));
    return res;
}

/// Wrapper honoring the precondition: refuses unless every sampled limit
/// operator has been found invertible; M = max inverse norm over the sample.
inline ParametrixResult assemble_parametrix(const BandOperator& A,
                                            const std::vector<LimitVerdict>& spectrum,
                                            NormRegime regime, double max_buffer = 16.0) {
    if (spectrum.empty())
        throw std::invalid_argument("assemble_parametrix: empty sampled spectrum");
    double M = 0.0;
    for (const auto& v : spectrum) {
        if (!v.conclusive || !v.invertible)
            throw std::invalid_argument("assemble_parametrix: limit operator along direction '" +
                                        v.direction + "' is not known invertible; refusing");
        M = std::max(M, v.inverse_norm);
    }
    return assemble_parametrix(A, M, regime, max_buffer);
}

struct SpectrumInfimum {
    double inf_value = 0.0;
    std::size_t attaining_index = 0;
    std::vector<double> values;               // nu per spectrum member
    std::vector<double> localized_values;     // nu_s at s = localization_radius(delta, ...)
    double delta = 0.0;
};

/// Desk-scale shadow of the attainment theorem: the minimum of the lower
/// norms over the sampled limit operators, with the Cor nu-local cross-check
/// nu <= nu_s <= nu + delta at s = localization_radius(delta, ...) recorded.
inline SpectrumInfimum spectrum_lower_norm_infimum(const std::vector<LimitOperatorResult>& spectrum,
                                                   NormRegime regime, double delta = 0.4) {
    if (spectrum.empty())
        throw std::invalid_argument("spectrum_lower_norm_infimum: empty spectrum");
    SpectrumInfimum out;
    out.delta = delta;
    out.inf_value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        const BandOperator& B = spectrum[i].op;
        const auto& sp = B.space();
        const int center = detail::center_point(sp);
        Rational inner = sp->diameter();
        // keep the columns away from the window boundary by prop(B)
        std::int64_t shrink = static_cast<std::int64_t>(std::ceil(B.propagation().to_double()));
        Rational frad = Rational(std::max<std::int64_t>(
            static_cast<std::int64_t>(inner.to_double() / 2.0) - shrink, 0));
        SupportSet F = SupportSet::ball(sp, center, frad);
        double nu = lower_norm(B, F, regime).value;
        double r_eff = std::max(B.propagation().to_double(), 1.0);
        int N = sp->geometry_profile(Rational(static_cast<std::int64_t>(std::ceil(r_eff))));
        double Mn = std::max(B.op_norm(regime), 1e-12);
        double s = localization_radius(delta, Mn, r_eff, N);
        double nus = restricted_lower_norm(B, F, s, regime).value;
        out.values.push_back(nu);
        out.localized_values.push_back(nus);
        if (nu < out.inf_value) {
            out.inf_value = nu;
            out.attaining_index = i;
        }
    }
    return out;
}

struct FredholmOptions {
    NormRegime regime = NormRegime::pinf;
    std::vector<DirectionSequence> directions;
    std::int64_t tail_lo = 1000, tail_hi = 10000;
    double richness_tol = 1e-6;
    std::int64_t refwin_radius = 4;
    double residual_tol = 1e-6;
    double delta = 0.4;
    double max_buffer = 16.0;
    std::vector<std::int64_t> nu_curve_radii; // empty: geometric ladder chosen automatically
    bool allow_sampled = true;
    unsigned seed = 1;
};

struct NuCurvePoint {
    std::int64_t radius = 0;
    double value = 0.0;
    std::string method;
};

struct FredholmReport {
    std::vector<LimitOperatorResult> spectrum;
    std::vector<LimitVerdict> verdicts;
    bool all_rich = false;
    bool all_invertible = false;
    bool any_certified_noninvertible = false;
    double M = 0.0;                            // sup inverse norms over the sample
    std::optional<ParametrixResult> parametrix;
    std::optional<SpectrumInfimum> infimum;
    bool eq16_checked = false;
    bool eq16_ok = false;
    double eq16_margin = 0.0;                  // min over limits of nu - 1/||A_R||
    std::vector<NuCurvePoint> nu_curve;
    std::string verdict;                       // consistent-with-Fredholm |
                                               // not-consistent-with-Fredholm | inconclusive
    std::vector<std::string> caveats;
};

/// Main-theorem consistency pipeline: sampled spectrum, per-limit
/// invertibility (certified for constant coefficients, heuristic otherwise),
/// parametrix construction when everything is invertible, the EQ16 lower
/// bound check, and a finite-section nu-curve. Inconclusive analyses yield
/// "inconclusive", never a fabricated verdict.
inline FredholmReport fredholm_verdict(const BandOperator& A, const FredholmOptions& opt) {
    if (!A.symbol())
        throw std::invalid_argument("fredholm_verdict: operator needs a symbolic coefficient "
                                    "source (build it with band_from_offsets)");
    if (opt.directions.empty())
        throw std::invalid_argument("fredholm_verdict: no directions configured");
    FredholmReport rep;
    rep.caveats.push_back("spectrum is sampled along configured directions only");
    rep.caveats.push_back("richness certified only on the tested tail [" +
                          std::to_string(opt.tail_lo) + "," + std::to_string(opt.tail_hi) +
                          "] at tolerance " + std::to_string(opt.richness_tol));
    rep.spectrum = spectrum_sample(A, opt.directions, opt.tail_lo, opt.tail_hi, opt.richness_tol,
                                   opt.refwin_radius);
    rep.all_rich = true;
    for (auto& r : rep.spectrum) rep.all_rich = rep.all_rich && r.rich;
    if (!rep.all_rich)
        rep.caveats.push_back("some directions are not rich at the tested tolerance");

    rep.all_invertible = true;
    bool any_inconclusive = false;
    for (const auto& r : rep.spectrum) {
        LimitVerdict v;
        v.direction = r.direction_label;
        v.rich = r.rich;
        const auto& sp = r.op.space();
        double ctol = std::max(1e-12, 10.0 * r.cauchy_residual);
        auto coeffs = constant_offsets(r.op, ctol);
        v.constant_coefficients = coeffs.has_value();
        if (coeffs) {
            try {
                auto rec = laurent_invertibility(*coeffs, sp->dim());
                v.conclusive = true;
                v.invertible = rec.invertible;
                v.method = "laurent-certified";
                v.symbol_min = rec.symbol_min;
                v.inverse_norm = opt.regime == NormRegime::p1 ? rec.inverse_norm_p1
                                                              : rec.inverse_norm_pinf;
            } catch (const std::runtime_error&) {
                v.conclusive = false;
                v.method = "laurent-inconclusive";
                rep.caveats.push_back("symbol certification inconclusive along " + v.direction);
            }
        } else {
            auto [inv, invnorm] = nu_stabilization(r.op, opt.regime);
            v.conclusive = true;   // heuristic, flagged via method
            v.invertible = inv;
            v.inverse_norm = invnorm;
            v.method = "nu-stabilization-heuristic";
            rep.caveats.push_back("invertibility along " + v.direction +
                                  " is heuristic (nu-stabilization), not certified");
        }
        {
            const int center = detail::center_point(sp);
            std::int64_t shrink = static_cast<std::int64_t>(std::ceil(r.op.propagation().to_double()));
            std::int64_t frad = std::max<std::int64_t>(opt.refwin_radius - shrink, 0);
            SupportSet F = SupportSet::ball(sp, center, Rational(frad));
            v.nu = lower_norm(r.op, F, opt.regime, opt.allow_sampled, opt.seed).value;
        }
        if (!v.conclusive) any_inconclusive = true;
        if (v.conclusive && !v.invertible) rep.any_certified_noninvertible = true;
        rep.all_invertible = rep.all_invertible && v.conclusive && v.invertible;
        rep.M = std::max(rep.M, v.inverse_norm);
        rep.verdicts.push_back(std::move(v));
    }

    if (!rep.spectrum.empty())
        rep.infimum = spectrum_lower_norm_infimum(rep.spectrum, opt.regime, opt.delta);

    if (rep.all_invertible && std::isfinite(rep.M) && rep.M > 0.0) {
        try {
            rep.parametrix = assemble_parametrix(A, rep.M, opt.regime, opt.max_buffer);
        } catch (const std::exception& e) {
            rep.caveats.push_back(std::string("parametrix construction failed: ") + e.what());
        }
    }

    if (rep.parametrix && rep.parametrix->AR_norm > 0.0) {
        rep.eq16_checked = true;
        rep.eq16_ok = true;
        rep.eq16_margin = std::numeric_limits<double>::infinity();
        double bound = 1.0 / rep.parametrix->AR_norm;
        for (const auto& v : rep.verdicts) {
            double margin = v.nu - bound;
            rep.eq16_margin = std::min(rep.eq16_margin, margin);
            if (margin < -1e-6) rep.eq16_ok = false;
        }
    }

    // Finite-section nu-curve over centered truncations of A itself.
    {
        const auto& sp = A.space();
        const int center = detail::center_point(sp);
        std::vector<std::int64_t> radii = opt.nu_curve_radii;
        if (radii.empty()) {
            std::int64_t rmax = static_cast<std::int64_t>(sp->diameter().to_double() / 2.0) -
                                static_cast<std::int64_t>(std::ceil(A.propagation().to_double()));
            for (std::int64_t k = 2; k < rmax && radii.size() < 6; k *= 2) radii.push_back(k);
            if (rmax > 0 && (radii.empty() || radii.back() != rmax)) radii.push_back(rmax);
        }
        for (std::int64_t k : radii) {
            SupportSet F = SupportSet::ball(sp, center, Rational(k));
            if (F.empty()) continue;
            auto ln = lower_norm(A, F, opt.regime, opt.allow_sampled, opt.seed);
            rep.nu_curve.push_back({k, ln.value, method_name(ln.method)});
        }
        rep.caveats.push_back("window-boundary effects: finite-section values carry a margin of "
                              "2x propagation near the edges");
    }

    if (rep.any_certified_noninvertible ||
        (!rep.all_invertible && !any_inconclusive && rep.all_rich)) {
        rep.verdict = "not-consistent-with-Fredholm";
    } else if (rep.all_rich && rep.all_invertible && rep.parametrix &&
               rep.parametrix->final_defect < opt.residual_tol) {
        rep.verdict = "consistent-with-Fredholm";
    } else {
        rep.verdict = "inconclusive";
        if (rep.parametrix && rep.parametrix->final_defect >= opt.residual_tol)
            rep.caveats.push_back("parametrix residual defect did not fall below tolerance on "
                                  "the largest tested F");
    }
    return rep;
}

} // namespace bandlim
