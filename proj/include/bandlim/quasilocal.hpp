#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "bandlim/band_operator.hpp"

namespace bandlim {

/// A bounded real function on the space with |f| <= 1 and a declared
/// Lipschitz constant, both audited at construction.
struct LipschitzFunction {
    std::vector<double> values;
    double lipschitz;

    LipschitzFunction(SpacePtr space, std::vector<double> vals, double L)
        : values(std::move(vals)), lipschitz(L) {
        const int n = space->size();
        if (static_cast<int>(values.size()) != n)
            throw std::invalid_argument("LipschitzFunction: size mismatch");
        for (double v : values)
            if (std::abs(v) > 1.0 + 1e-12)
                throw std::invalid_argument("LipschitzFunction: |f| > 1");
        for (int x = 0; x < n; ++x)
            for (int y = x + 1; y < n; ++y)
                if (std::abs(values[x] - values[y]) >
                    L * space->distance(x, y).to_double() + 1e-9)
                    throw std::invalid_argument("LipschitzFunction: Lipschitz audit failed");
    }
};

/// [A, f] for a bounded function f: entries A_xy (f(y) - f(x)).
/// Propagation does not increase.
inline BandOperator commutator(const BandOperator& A, const std::vector<double>& f) {
    if (static_cast<int>(f.size()) != A.space()->size())
        throw std::invalid_argument("commutator: function on a different space");
    std::vector<std::tuple<int, int, double>> trips;
    A.for_each_entry([&](int x, int y, double v) {
        double w = v * (f[y] - f[x]);
        if (w != 0.0) trips.push_back({x, y, w});
    });
    return BandOperator::from_entries(A.space(), trips);
}

inline BandOperator commutator(const BandOperator& A, const LipschitzFunction& f) {
    return commutator(A, f.values);
}

/// Quasi-locality modulus: sup over L-Lipschitz f with |f| <= 1 of ||[A,f]||.
/// For real scalar entries this has the closed form
///   pinf/p0: max_x sum_y |A_xy| min(L d(x,y), 2)
///   p1:      max_y sum_x |A_xy| min(L d(x,y), 2)
/// attained by f*(z) = min(L d(z, x*), 2) - 1 at the argmax row/column x*.
inline double ql_modulus(const BandOperator& A, double L, NormRegime regime) {
    if (L < 0.0) throw std::invalid_argument("ql_modulus: L must be >= 0");
    const auto& sp = A.space();
    std::vector<detail::KahanSum> acc(sp->size());
    A.for_each_entry([&](int x, int y, double v) {
        double w = std::abs(v) * std::min(L * sp->distance(x, y).to_double(), 2.0);
        acc[regime == NormRegime::p1 ? y : x].add(w);
    });
    double m = 0.0;
    for (auto& s : acc) m = std::max(m, s.value());
    return m;
}

/// The extremizing function for ql_modulus at the argmax row/column:
/// f*(z) = min(L d(z, x*), 2) - 1.
inline std::vector<double> ql_extremizer(const BandOperator& A, double L, NormRegime regime) {
    const auto& sp = A.space();
    std::vector<detail::KahanSum> acc(sp->size());
    A.for_each_entry([&](int x, int y, double v) {
        double w = std::abs(v) * std::min(L * sp->distance(x, y).to_double(), 2.0);
        acc[regime == NormRegime::p1 ? y : x].add(w);
    });
    int star = 0;
    double best = -1.0;
    for (int i = 0; i < sp->size(); ++i)
        if (acc[i].value() > best) { best = acc[i].value(); star = i; }
    std::vector<double> f(sp->size());
    for (int z = 0; z < sp->size(); ++z)
        f[z] = std::min(L * sp->distance(z, star).to_double(), 2.0) - 1.0;
    return f;
}

/// Smallest-certificate constant of the uniform commutant bound:
/// L = eps / (r M N) guarantees ql_modulus(A, L) <= eps for band A with
/// propagation r, norm M and ball bound N. Diagonal operators (r = 0)
/// return +inf: any L works.
inline double band_commutator_certificate(const BandOperator& A, double eps, NormRegime regime) {
    if (eps <= 0.0) throw std::invalid_argument("band_commutator_certificate: eps must be > 0");
    const double r = A.propagation().to_double();
    if (r == 0.0) return std::numeric_limits<double>::infinity();
    const double M = A.op_norm(regime);
    const int N = A.space()->geometry_profile(A.propagation());
    const double L = eps / (r * M * static_cast<double>(N));
    if (ql_modulus(A, L, regime) > eps + 1e-12)
        throw std::logic_error("band_commutator_certificate: guarantee re-verification failed");
    return L;
}

/// Random L-Lipschitz function in the unit ball, for sampling oracles:
/// the McShane regularization f(x) = clamp(min_y (g(y) + L d(x,y))) of random
/// values g is L-Lipschitz.
inline std::vector<double> random_lipschitz_function(const SpacePtr& sp, double L,
                                                     std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int n = sp->size();
    std::vector<double> g(n), f(n);
    for (auto& v : g) v = u(rng);
    for (int x = 0; x < n; ++x) {
        double m = std::numeric_limits<double>::infinity();
        for (int y = 0; y < n; ++y)
            m = std::min(m, g[y] + L * sp->distance(x, y).to_double());
        f[x] = std::clamp(m, -1.0, 1.0);
    }
    return f;
}

} // namespace bandlim
