#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace bandlim {

/// Outcome of a linear program in standard form.
struct LpResult {
    bool feasible = false;
    bool bounded = true;
    double objective = 0.0;
    std::vector<double> x;
};

/// Dense two-phase simplex for
///     minimize c.x  subject to  A x (<=|=) b,  x >= 0.
/// Row types: 'L' for <=, 'E' for =. Sized for the small/medium LPs produced
/// by the lower-norm formulations (hundreds of rows and variables).
///
/// The tableau iterations only identify a candidate basis; the returned
/// solution is recomputed from the original data by factorizing the basis
/// matrix, so accumulated pivot error never reaches the caller. If the
/// refactorized reduced costs show the basis is not optimal after all, the
/// tableau is rebuilt from the factorization and iteration resumes.
class SimplexSolver {
public:
    static LpResult solve(const std::vector<double>& c,
                          const std::vector<std::vector<double>>& A,
                          const std::vector<double>& b,
                          const std::vector<char>& rowtype) {
        const std::size_t m = A.size();
        const std::size_t n = c.size();
        if (b.size() != m || rowtype.size() != m)
            throw std::invalid_argument("SimplexSolver: inconsistent problem sizes");

        // Append slack columns for <= rows, then normalize rhs >= 0 and add
        // artificials where the slack cannot serve as the starting basis.
        std::size_t nslack = 0;
        for (char t : rowtype)
            if (t == 'L') ++nslack;
        std::size_t width = n + nslack;

        std::vector<std::vector<double>> T(m, std::vector<double>(width, 0.0));
        std::vector<double> rhs(b);
        std::size_t sl = 0;
        std::vector<std::size_t> slack_col(m, SIZE_MAX);
        for (std::size_t i = 0; i < m; ++i) {
            if (A[i].size() != n) throw std::invalid_argument("SimplexSolver: ragged matrix");
            for (std::size_t j = 0; j < n; ++j) T[i][j] = A[i][j];
            if (rowtype[i] == 'L') {
                slack_col[i] = n + sl;
                T[i][n + sl++] = 1.0;
            } else if (rowtype[i] != 'E') {
                throw std::invalid_argument("SimplexSolver: row type must be 'L' or 'E'");
            }
            if (rhs[i] < 0.0) {
                rhs[i] = -rhs[i];
                for (auto& v : T[i]) v = -v;
            }
        }

        std::vector<std::size_t> basis(m, SIZE_MAX);
        std::vector<std::size_t> art_rows;
        for (std::size_t i = 0; i < m; ++i) {
            if (slack_col[i] != SIZE_MAX && T[i][slack_col[i]] > 0.5)
                basis[i] = slack_col[i];
            else
                art_rows.push_back(i);
        }
        std::size_t nart = art_rows.size();
        for (auto& row : T) row.resize(width + nart, 0.0);
        for (std::size_t k = 0; k < nart; ++k) {
            T[art_rows[k]][width + k] = 1.0;
            basis[art_rows[k]] = width + k;
        }
        const std::size_t total = width + nart;

        // Pristine copy of the augmented system, for basis refactorization.
        const std::vector<std::vector<double>> A0(T);
        const std::vector<double> b0(rhs);

        LpResult res;
        if (nart > 0) {
            std::vector<double> phase1(total, 0.0);
            for (std::size_t k = 0; k < nart; ++k) phase1[width + k] = 1.0;
            if (!optimize(T, rhs, basis, phase1, total)) {
                // Phase 1 is bounded below by 0; unbounded here means a bug.
                throw std::logic_error("SimplexSolver: phase 1 unbounded");
            }
            double infeas = 0.0;
            for (std::size_t i = 0; i < m; ++i)
                if (basis[i] >= width) infeas += rhs[i];
            if (infeas > 1e-7) return res; // infeasible
            // Drive leftover artificials out of the basis.
            for (std::size_t i = 0; i < m; ++i) {
                if (basis[i] < width) continue;
                std::size_t piv = SIZE_MAX;
                for (std::size_t j = 0; j < width; ++j)
                    if (std::abs(T[i][j]) > 1e-9) { piv = j; break; }
                if (piv != SIZE_MAX) pivot(T, rhs, basis, i, piv, total);
                // A fully zero row is redundant; its artificial stays basic at 0.
            }
        }

        std::vector<double> cost(total, 0.0);
        for (std::size_t j = 0; j < n; ++j) cost[j] = c[j];
        if (!optimize(T, rhs, basis, cost, width)) {
            res.feasible = true;
            res.bounded = false;
            return res;
        }

        // Refactorize the claimed-optimal basis against the original data and
        // resume iterating if the exact reduced costs disagree.
        Eigen::VectorXd xB;
        for (int round = 0; round < 30; ++round) {
            Eigen::MatrixXd B(m, m);
            Eigen::VectorXd cB(m), bv(m);
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t r = 0; r < m; ++r) B(r, i) = A0[r][basis[i]];
                cB(i) = basis[i] < total ? cost[basis[i]] : 0.0;
                bv(i) = b0[i];
            }
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
            xB = lu.solve(bv);
            if (!xB.allFinite()) break; // singular basis (redundant rows): keep tableau state
            Eigen::VectorXd y = lu.transpose().solve(cB);
            double worst_red = 0.0;
            for (std::size_t j = 0; j < width; ++j) {
                double rj = cost[j];
                for (std::size_t r = 0; r < m; ++r) rj -= y(r) * A0[r][j];
                worst_red = std::min(worst_red, rj);
            }
            const double worst_x = m ? xB.minCoeff() : 0.0;
            if (worst_red >= -1e-9 && worst_x >= -1e-10) break; // genuinely optimal
            // Rebuild the tableau in basis form from the factorization and
            // resume from the verified state: a dual simplex pass if the
            // basis drifted primal infeasible, the primal simplex otherwise.
            Eigen::MatrixXd M(m, total);
            for (std::size_t r = 0; r < m; ++r)
                for (std::size_t j = 0; j < total; ++j) M(r, j) = A0[r][j];
            Eigen::MatrixXd Tm = lu.solve(M);
            for (std::size_t r = 0; r < m; ++r) {
                for (std::size_t j = 0; j < total; ++j) T[r][j] = Tm(r, j);
                rhs[r] = xB(r);
            }
            if (worst_red >= -1e-9) {
                if (!dual_optimize(T, rhs, basis, cost, width)) break; // best effort
            } else {
                for (auto& v : rhs) v = std::max(v, 0.0);
                if (!optimize(T, rhs, basis, cost, width)) {
                    res.feasible = true;
                    res.bounded = false;
                    return res;
                }
            }
        }

        {
            // The repair passes may have moved the basis since xB was computed.
            Eigen::MatrixXd B(m, m);
            Eigen::VectorXd bv(m);
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t r = 0; r < m; ++r) B(r, i) = A0[r][basis[i]];
                bv(i) = b0[i];
            }
            xB = Eigen::PartialPivLU<Eigen::MatrixXd>(B).solve(bv);
            if (!xB.allFinite())
                for (std::size_t i = 0; i < m; ++i) xB(i) = rhs[i]; // singular: tableau values
        }
        res.feasible = true;
        res.bounded = true;
        res.x.assign(n, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            if (basis[i] < n) res.x[basis[i]] = std::max(xB(i), 0.0);
        double obj = 0.0;
        for (std::size_t j = 0; j < n; ++j) obj += c[j] * res.x[j];
        res.objective = obj;
        return res;
    }

private:
    static void pivot(std::vector<std::vector<double>>& T, std::vector<double>& rhs,
                      std::vector<std::size_t>& basis, std::size_t pr, std::size_t pc,
                      std::size_t total) {
        const double pv = T[pr][pc];
        for (std::size_t j = 0; j < total; ++j) T[pr][j] /= pv;
        rhs[pr] /= pv;
        for (std::size_t i = 0; i < T.size(); ++i) {
            if (i == pr) continue;
            double f = T[i][pc];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < total; ++j) T[i][j] -= f * T[pr][j];
            rhs[i] -= f * rhs[pr];
        }
        basis[pr] = pc;
    }

    /// Dual simplex: restores primal feasibility of a dual-feasible basis
    /// (negative rhs entries, nonnegative reduced costs). Returns false if a
    /// negative row has no negative entry, i.e. the program is infeasible.
    static bool dual_optimize(std::vector<std::vector<double>>& T, std::vector<double>& rhs,
                              std::vector<std::size_t>& basis, const std::vector<double>& cost,
                              std::size_t ncols) {
        const std::size_t m = T.size();
        const std::size_t total = T.empty() ? 0 : T[0].size();
        std::vector<double> red(cost);
        red.resize(total, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            double cb = basis[i] < cost.size() ? cost[basis[i]] : 0.0;
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j < total; ++j) red[j] -= cb * T[i][j];
        }
        for (std::size_t iters = 0; iters < 10000; ++iters) {
            std::size_t pr = SIZE_MAX;
            double most_neg = -1e-10;
            for (std::size_t i = 0; i < m; ++i)
                if (rhs[i] < most_neg) { most_neg = rhs[i]; pr = i; }
            if (pr == SIZE_MAX) return true; // primal feasible again
            std::size_t pc = SIZE_MAX;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < ncols; ++j) {
                if (T[pr][j] >= -1e-9) continue;
                double ratio = std::max(red[j], 0.0) / -T[pr][j];
                if (ratio < best_ratio - 1e-12 ||
                    (ratio < best_ratio + 1e-12 &&
                     (pc == SIZE_MAX || T[pr][j] < T[pr][pc]))) {
                    best_ratio = ratio;
                    pc = j;
                }
            }
            if (pc == SIZE_MAX) return false; // no way to fix this row
            pivot(T, rhs, basis, pr, pc, total);
            double f = red[pc];
            for (std::size_t j = 0; j < total; ++j) red[j] -= f * T[pr][j];
        }
        throw std::runtime_error("SimplexSolver: dual simplex iteration limit");
    }

    /// Runs the simplex on the current basis minimizing `cost` over the first
    /// `ncols` columns. Returns false if unbounded. Dantzig pricing with a
    /// Bland fallback after a stall budget to rule out cycling.
    ///
    /// The ratio test only admits pivot elements above eps_piv: degenerate
    /// rows accumulate noise-scale entries whose noise/noise ratios can win
    /// the ratio test, and pivoting on such an entry destroys the tableau.
    /// Among rows whose ratios tie within tolerance, the largest pivot
    /// element is preferred for the same reason.
    static bool optimize(std::vector<std::vector<double>>& T, std::vector<double>& rhs,
                         std::vector<std::size_t>& basis, const std::vector<double>& cost,
                         std::size_t ncols) {
        const std::size_t m = T.size();
        const std::size_t total = T.empty() ? 0 : T[0].size();
        std::vector<double> red(cost);
        red.resize(total, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            double cb = basis[i] < cost.size() ? cost[basis[i]] : 0.0;
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j < total; ++j) red[j] -= cb * T[i][j];
        }
        const double tol = 1e-10;
        const double eps_piv = 1e-7;
        std::size_t iters = 0;
        const std::size_t bland_after = 5000 + 50 * m;
        for (;;) {
            if (++iters > 200000) throw std::runtime_error("SimplexSolver: iteration limit");
            if (iters % 64 == 0) {
                // Refresh the reduced-cost row from the tableau to cap drift.
                red.assign(cost.begin(), cost.end());
                red.resize(total, 0.0);
                for (std::size_t i = 0; i < m; ++i) {
                    double cb = basis[i] < cost.size() ? cost[basis[i]] : 0.0;
                    if (cb == 0.0) continue;
                    for (std::size_t j = 0; j < total; ++j) red[j] -= cb * T[i][j];
                }
            }
            std::size_t pc = SIZE_MAX;
            const bool bland = iters >= bland_after;
            if (!bland) {
                double best = -tol;
                for (std::size_t j = 0; j < ncols; ++j)
                    if (red[j] < best) { best = red[j]; pc = j; }
            } else {
                for (std::size_t j = 0; j < ncols; ++j)
                    if (red[j] < -tol) { pc = j; break; }
            }
            if (pc == SIZE_MAX) return true; // optimal
            std::size_t pr = SIZE_MAX;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m; ++i) {
                if (T[i][pc] <= eps_piv) continue;
                double ratio = std::max(rhs[i], 0.0) / T[i][pc];
                if (ratio < best_ratio) { best_ratio = ratio; pr = i; }
            }
            if (pr == SIZE_MAX) return false; // unbounded
            // Second pass over near-tied rows: Bland mode picks the smallest
            // leaving basis index, otherwise favor the largest pivot element.
            const double window = best_ratio + 1e-9 * (1.0 + best_ratio);
            for (std::size_t i = 0; i < m; ++i) {
                if (i == pr || T[i][pc] <= eps_piv) continue;
                double ratio = std::max(rhs[i], 0.0) / T[i][pc];
                if (ratio > window) continue;
                if (bland ? basis[i] < basis[pr] : T[i][pc] > T[pr][pc]) pr = i;
            }
            pivot(T, rhs, basis, pr, pc, total);
            double f = red[pc];
            for (std::size_t j = 0; j < total; ++j) red[j] -= f * T[pr][j];
        }
    }
};

} // namespace bandlim
