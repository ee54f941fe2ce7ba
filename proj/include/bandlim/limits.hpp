#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bandlim/band_operator.hpp"

namespace bandlim {

/// Computable proxy for a boundary direction on Z^N: either a ray h_m = m*u
/// for a fixed nonzero integer vector u, or an explicit sequence h_m with
/// ||h_m|| -> infinity.
struct DirectionSequence {
    std::vector<std::int64_t> ray;                       // empty if explicit
    std::vector<std::vector<std::int64_t>> explicit_pts; // used if ray empty
    std::string label;

    static DirectionSequence make_ray(std::vector<std::int64_t> u, std::string name = "") {
        bool nonzero = false;
        for (auto c : u) nonzero = nonzero || c != 0;
        if (!nonzero) throw std::invalid_argument("DirectionSequence: zero ray direction");
        DirectionSequence d;
        d.ray = std::move(u);
        if (name.empty()) {
            name = "ray(";
            for (std::size_t i = 0; i < d.ray.size(); ++i)
                name += std::to_string(d.ray[i]) + (i + 1 < d.ray.size() ? "," : "");
            name += ")";
        }
        d.label = std::move(name);
        return d;
    }

    static DirectionSequence make_explicit(std::vector<std::vector<std::int64_t>> pts,
                                           std::string name) {
        if (pts.size() < 3)
            throw std::invalid_argument("DirectionSequence: explicit sequence needs >= 3 points");
        // ||h_m|| must eventually strictly increase; check the recorded tail.
        auto norm1 = [](const std::vector<std::int64_t>& v) {
            std::int64_t s = 0;
            for (auto c : v) s += c < 0 ? -c : c;
            return s;
        };
        for (std::size_t m = pts.size() / 2; m + 1 < pts.size(); ++m)
            if (norm1(pts[m + 1]) <= norm1(pts[m]))
                throw std::invalid_argument("DirectionSequence: ||h_m|| must tend to infinity");
        DirectionSequence d;
        d.explicit_pts = std::move(pts);
        d.label = std::move(name);
        return d;
    }

    std::vector<std::int64_t> at(std::int64_t m) const {
        if (!ray.empty()) {
            std::vector<std::int64_t> h(ray);
            for (auto& c : h) c *= m;
            return h;
        }
        if (m < 0 || m >= static_cast<std::int64_t>(explicit_pts.size()))
            throw std::out_of_range("DirectionSequence: index beyond explicit sequence");
        return explicit_pts[static_cast<std::size_t>(m)];
    }

    std::int64_t max_index() const {
        return ray.empty() ? static_cast<std::int64_t>(explicit_pts.size()) - 1
                           : std::numeric_limits<std::int64_t>::max();
    }
};

/// Limit operator candidate extracted along one direction. `rich` certifies
/// the Cauchy criterion only on the tested tail, at the given tolerance.
struct LimitOperatorResult {
    BandOperator op;
    bool rich = false;
    double cauchy_residual = 0.0;
    std::string direction_label;
    std::int64_t tail_lo = 0, tail_hi = 0;
};

/// Translate V_{-h} A V_h restricted to A's window: the entry of A at
/// (x+h, y+h) is placed at (x, y). Uses the symbolic source when available
/// (so coefficients beyond the stored window are evaluable); otherwise
/// shifts stored entries, flagging out-of-window truncation.
inline BandOperator translate(const BandOperator& A, std::span<const std::int64_t> h,
                              std::vector<std::string>* warnings = nullptr) {
    const auto& sp = A.space();
    if (!sp->is_grid())
        throw std::invalid_argument("translate: explicit-table spaces have no ambient translation");
    if (A.symbol()) return BandOperator::materialize(sp, A.symbol()->translated(h), warnings);
    std::vector<std::tuple<int, int, double>> trips;
    bool truncated = false;
    A.for_each_entry([&](int x, int y, double v) {
        auto cx = sp->coords(x);
        auto cy = sp->coords(y);
        for (int a = 0; a < sp->dim(); ++a) { cx[a] -= h[a]; cy[a] -= h[a]; }
        auto nx = sp->index_of(cx);
        auto ny = sp->index_of(cy);
        if (nx && ny) trips.push_back({*nx, *ny, v});
        else truncated = true;
    });
    if (truncated && warnings)
        warnings->push_back("translate: entries shifted out of the window were truncated");
    return BandOperator::from_entries(sp, trips);
}

namespace detail {
inline std::vector<std::int64_t> tail_samples(std::int64_t lo, std::int64_t hi, int budget = 64) {
    if (hi - lo + 1 < 3) throw std::invalid_argument("limit_operator: tail needs >= 3 indices");
    std::vector<std::int64_t> s;
    if (hi - lo + 1 <= budget) {
        for (std::int64_t m = lo; m <= hi; ++m) s.push_back(m);
        return s;
    }
    for (int i = 0; i < budget; ++i)
        s.push_back(lo + (hi - 3 - lo) * i / (budget - 1));
    s.push_back(hi - 2);
    s.push_back(hi - 1);
    s.push_back(hi);
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}
} // namespace detail

/// Entrywise limit of translates along a direction, evaluated on a centered
/// reference window. The limit entry is the mean of the final three tested
/// translates; the residual is the max entry oscillation over the tested
/// tail. rich = (residual <= tol), never silently accepted otherwise.
inline LimitOperatorResult limit_operator(const BandOperator& A, const DirectionSequence& dir,
                                          std::int64_t tail_lo, std::int64_t tail_hi, double tol,
                                          std::int64_t refwin_radius) {
    const auto& sp = A.space();
    if (!sp->is_grid()) throw std::invalid_argument("limit_operator: grid windows only");
    if (!A.symbol())
        throw std::invalid_argument(
            "limit_operator: operator has no symbolic coefficient source; build it with "
            "band_from_offsets");
    tail_hi = std::min(tail_hi, dir.max_index());
    auto samples = detail::tail_samples(tail_lo, tail_hi);

    const int dim = sp->dim();
    std::vector<std::int64_t> rlo(dim, -refwin_radius), rhi(dim, refwin_radius);
    auto ref = make_grid_space(dim, rlo, rhi, sp->grid_metric());

    // Per term, per reference point: oscillation across the tail and the
    // mean of the last three translates.
    struct Cell { double mn, mx, last3sum; int last3n; };
    const auto& terms = A.symbol()->terms();
    std::vector<std::vector<Cell>> cells(terms.size());
    for (auto& c : cells)
        c.assign(static_cast<std::size_t>(ref->size()),
                 {std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity(), 0.0, 0});
    for (std::size_t si = 0; si < samples.size(); ++si) {
        auto h = dir.at(samples[si]);
        bool last3 = si + 3 >= samples.size();
        for (std::size_t t = 0; t < terms.size(); ++t) {
            for (int y = 0; y < ref->size(); ++y) {
                auto c = ref->coords(y);
                std::vector<std::int64_t> pt(c);
                for (int a = 0; a < dim; ++a) pt[a] += h[a];
                double v = terms[t].coefficient.eval(pt);
                auto& cell = cells[t][static_cast<std::size_t>(y)];
                cell.mn = std::min(cell.mn, v);
                cell.mx = std::max(cell.mx, v);
                if (last3) { cell.last3sum += v; ++cell.last3n; }
            }
        }
    }

    double residual = 0.0;
    std::vector<std::tuple<int, int, double>> trips;
    for (std::size_t t = 0; t < terms.size(); ++t) {
        for (int y = 0; y < ref->size(); ++y) {
            auto c = ref->coords(y);
            std::vector<std::int64_t> xc(c);
            for (int a = 0; a < dim; ++a) xc[a] += terms[t].offset[a];
            auto x = ref->index_of(xc);
            if (!x) continue;
            const auto& cell = cells[t][static_cast<std::size_t>(y)];
            residual = std::max(residual, cell.mx - cell.mn);
            double v = cell.last3sum / static_cast<double>(cell.last3n);
            if (v != 0.0) trips.push_back({*x, y, v});
        }
    }

    LimitOperatorResult res{BandOperator::from_entries(ref, trips), residual <= tol, residual,
                            dir.label, tail_lo, tail_hi};
    // Keep a symbolic source for the limit: the mean coefficients are
    // constant along each diagonal only when the entries say so; richer
    // structure is recovered from the materialized entries downstream.
    return res;
}

/// Sampled operator spectrum: limit operators over a battery of directions,
/// deduplicated entrywise within tol.
inline std::vector<LimitOperatorResult> spectrum_sample(const BandOperator& A,
                                                        const std::vector<DirectionSequence>& dirs,
                                                        std::int64_t tail_lo, std::int64_t tail_hi,
                                                        double tol, std::int64_t refwin_radius) {
    std::vector<LimitOperatorResult> out;
    for (const auto& d : dirs) {
        auto r = limit_operator(A, d, tail_lo, tail_hi, tol, refwin_radius);
        bool dup = false;
        for (const auto& prev : out) {
            double diff = 0.0;
            auto delta = subtract(prev.op, r.op);
            delta.for_each_entry([&](int, int, double v) { diff = std::max(diff, std::abs(v)); });
            if (diff <= tol && prev.rich == r.rich) { dup = true; break; }
        }
        if (!dup) out.push_back(std::move(r));
    }
    return out;
}

} // namespace bandlim
