#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bandlim/rational.hpp"

namespace bandlim {

enum class GridMetric { l1, linf };

/// A strongly discrete metric space of bounded geometry: either an explicit
/// finite space given by a distance table, or a finite window of the integer
/// lattice with its l1 or linf grid metric. Grid windows remember their
/// ambient embedding, so translation by an integer vector is meaningful.
///
/// Immutable after construction; all queries are const and thread-safe.
class Space {
public:
    enum class Kind { explicit_table, grid_window };

    static std::shared_ptr<const Space> grid(int dim,
                                             std::vector<std::int64_t> lo,
                                             std::vector<std::int64_t> hi,
                                             GridMetric metric) {
        if (dim <= 0) throw std::invalid_argument("make_grid_space: dim must be positive");
        if (static_cast<int>(lo.size()) != dim || static_cast<int>(hi.size()) != dim)
            throw std::invalid_argument("make_grid_space: lo/hi length does not match dim");
        for (int a = 0; a < dim; ++a)
            if (lo[a] > hi[a]) throw std::invalid_argument("make_grid_space: empty window (lo > hi)");
        auto s = std::shared_ptr<Space>(new Space());
        s->kind_ = Kind::grid_window;
        s->dim_ = dim;
        s->lo_ = std::move(lo);
        s->hi_ = std::move(hi);
        s->metric_ = metric;
        s->size_ = 1;
        s->strides_.assign(dim, 1);
        for (int a = dim - 1; a >= 0; --a) {
            s->strides_[a] = s->size_;
            s->size_ *= static_cast<int>(s->hi_[a] - s->lo_[a] + 1);
        }
        return s;
    }

    /// Explicit-table space. Validates all metric axioms at construction.
    static std::shared_ptr<const Space> from_table(std::vector<std::string> ids,
                                                   std::vector<std::vector<Rational>> dist) {
        auto s = std::shared_ptr<Space>(new Space());
        s->kind_ = Kind::explicit_table;
        s->dim_ = 0;
        s->size_ = static_cast<int>(ids.size());
        s->ids_ = std::move(ids);
        s->table_ = std::move(dist);
        if (s->size_ == 0) throw std::invalid_argument("Space::from_table: empty space");
        if (static_cast<int>(s->table_.size()) != s->size_)
            throw std::invalid_argument("Space::from_table: table size mismatch");
        for (auto& row : s->table_)
            if (static_cast<int>(row.size()) != s->size_)
                throw std::invalid_argument("Space::from_table: table row size mismatch");
        const int n = s->size_;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const Rational& d = s->table_[i][j];
                if (d < Rational(0)) throw std::invalid_argument("metric axiom: negative distance");
                if ((d == Rational(0)) != (i == j))
                    throw std::invalid_argument("metric axiom: d(x,y)=0 iff x=y violated");
                if (!(d == s->table_[j][i]))
                    throw std::invalid_argument("metric axiom: symmetry violated");
            }
        }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    if (s->table_[i][k] > s->table_[i][j] + s->table_[j][k])
                        throw std::invalid_argument("metric axiom: triangle inequality violated");
        return s;
    }

    Kind kind() const { return kind_; }
    bool is_grid() const { return kind_ == Kind::grid_window; }
    int size() const { return size_; }
    int dim() const { return dim_; }
    GridMetric grid_metric() const { return metric_; }
    const std::vector<std::int64_t>& lo() const { return lo_; }
    const std::vector<std::int64_t>& hi() const { return hi_; }

    /// Ambient lattice coordinates of a point (grid spaces only).
    std::vector<std::int64_t> coords(int idx) const {
        require_grid("coords");
        std::vector<std::int64_t> c(dim_);
        for (int a = 0; a < dim_; ++a) {
            c[a] = lo_[a] + (idx / strides_[a]) % (hi_[a] - lo_[a] + 1);
        }
        return c;
    }

    std::optional<int> index_of(std::span<const std::int64_t> c) const {
        require_grid("index_of");
        int idx = 0;
        for (int a = 0; a < dim_; ++a) {
            if (c[a] < lo_[a] || c[a] > hi_[a]) return std::nullopt;
            idx += static_cast<int>(c[a] - lo_[a]) * strides_[a];
        }
        return idx;
    }

    Rational distance(int i, int j) const {
        if (kind_ == Kind::explicit_table) return table_[i][j];
        std::int64_t acc = 0;
        for (int a = 0; a < dim_; ++a) {
            std::int64_t ci = lo_[a] + (i / strides_[a]) % (hi_[a] - lo_[a] + 1);
            std::int64_t cj = lo_[a] + (j / strides_[a]) % (hi_[a] - lo_[a] + 1);
            std::int64_t d = ci > cj ? ci - cj : cj - ci;
            if (metric_ == GridMetric::l1) acc += d;
            else acc = std::max(acc, d);
        }
        return Rational(acc);
    }

    /// Grid metric applied to an ambient offset vector.
    Rational offset_length(std::span<const std::int64_t> k) const {
        require_grid("offset_length");
        std::int64_t acc = 0;
        for (int a = 0; a < dim_; ++a) {
            std::int64_t d = k[a] < 0 ? -k[a] : k[a];
            if (metric_ == GridMetric::l1) acc += d;
            else acc = std::max(acc, d);
        }
        return Rational(acc);
    }

    /// Max closed-ball cardinality at radius r: N = max_x #B(x,r). Cached.
    int geometry_profile(const Rational& r) const {
        if (r < Rational(0)) throw std::invalid_argument("geometry_profile: r must be >= 0");
        {
            std::lock_guard lock(cache_mutex_);
            if (auto it = profile_cache_.find(r); it != profile_cache_.end()) return it->second;
        }
        int best = 0;
        for (int i = 0; i < size_; ++i) {
            int cnt = 0;
            for (int j = 0; j < size_; ++j)
                if (!(distance(i, j) > r)) ++cnt;
            best = std::max(best, cnt);
        }
        std::lock_guard lock(cache_mutex_);
        profile_cache_.emplace(r, best);
        return best;
    }

    Rational diameter() const {
        Rational d(0);
        for (int i = 0; i < size_; ++i)
            for (int j = i + 1; j < size_; ++j)
                d = std::max(d, distance(i, j), [](const Rational& a, const Rational& b) { return a < b; });
        return d;
    }

    std::string point_name(int idx) const {
        if (kind_ == Kind::explicit_table) return ids_[idx];
        auto c = coords(idx);
        std::string s = "(";
        for (int a = 0; a < dim_; ++a) s += std::to_string(c[a]) + (a + 1 < dim_ ? "," : "");
        return s + ")";
    }

private:
    Space() = default;
    void require_grid(const char* op) const {
        if (kind_ != Kind::grid_window)
            throw std::logic_error(std::string(op) + ": only supported for grid windows");
    }

    Kind kind_ = Kind::grid_window;
    int dim_ = 0;
    int size_ = 0;
    GridMetric metric_ = GridMetric::l1;
    std::vector<std::int64_t> lo_, hi_;
    std::vector<int> strides_;
    std::vector<std::string> ids_;
    std::vector<std::vector<Rational>> table_;

    mutable std::mutex cache_mutex_;
    mutable std::map<Rational, int> profile_cache_;
};

using SpacePtr = std::shared_ptr<const Space>;

/// Grid windows are interned: identical (dim, lo, hi, metric) requests share
/// one Space instance, so operators built over equal windows in different
/// places (e.g. limit operators on the same reference window) are composable.
inline SpacePtr make_grid_space(int dim, std::vector<std::int64_t> lo,
                                std::vector<std::int64_t> hi, GridMetric metric) {
    static std::map<std::string, SpacePtr> cache;
    static std::mutex mu;
    std::string key = std::to_string(dim) + (metric == GridMetric::l1 ? ":1" : ":i");
    for (auto c : lo) key += "," + std::to_string(c);
    key += ";";
    for (auto c : hi) key += "," + std::to_string(c);
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto sp = Space::grid(dim, std::move(lo), std::move(hi), metric);
    cache.emplace(std::move(key), sp);
    return sp;
}

/// Subset of a Space's points with bit-set semantics; houses the cutoff
/// projections P_F and Q_F = I - P_F used throughout.
class SupportSet {
public:
    SupportSet() = default;
    explicit SupportSet(SpacePtr space, bool full = false)
        : space_(std::move(space)), mask_(space_->size(), full ? 1 : 0),
          count_(full ? space_->size() : 0) {}

    static SupportSet full(SpacePtr space) { return SupportSet(std::move(space), true); }

    template <class Pred>
    static SupportSet where(SpacePtr space, Pred&& pred) {
        SupportSet f(space);
        for (int i = 0; i < space->size(); ++i)
            if (pred(i)) f.insert(i);
        return f;
    }

    /// Closed metric ball B(center, r) as a support set.
    static SupportSet ball(SpacePtr space, int center, const Rational& r) {
        return where(space, [&](int i) { return !(space->distance(center, i) > r); });
    }

    const SpacePtr& space() const { return space_; }
    int count() const { return count_; }
    bool empty() const { return count_ == 0; }
    bool contains(int i) const { return mask_[i] != 0; }

    void insert(int i) {
        if (!mask_[i]) { mask_[i] = 1; ++count_; }
    }

    SupportSet complement() const {
        SupportSet f(space_);
        for (int i = 0; i < space_->size(); ++i)
            if (!mask_[i]) f.insert(i);
        return f;
    }

    /// Closed R-neighborhood N_R(F).
    SupportSet neighborhood(const Rational& R) const {
        SupportSet f(space_);
        auto pts = points();
        for (int i = 0; i < space_->size(); ++i) {
            if (mask_[i]) { f.insert(i); continue; }
            for (int j : pts) {
                if (!(space_->distance(i, j) > R)) { f.insert(i); break; }
            }
        }
        return f;
    }

    std::vector<int> points() const {
        std::vector<int> p;
        p.reserve(count_);
        for (int i = 0; i < space_->size(); ++i)
            if (mask_[i]) p.push_back(i);
        return p;
    }

    Rational diameter() const {
        Rational d(0);
        auto p = points();
        for (std::size_t a = 0; a < p.size(); ++a)
            for (std::size_t b = a + 1; b < p.size(); ++b) {
                Rational q = space_->distance(p[a], p[b]);
                if (d < q) d = q;
            }
        return d;
    }

    bool is_subset_of(const SupportSet& other) const {
        for (int i = 0; i < space_->size(); ++i)
            if (mask_[i] && !other.mask_[i]) return false;
        return true;
    }

    friend bool operator==(const SupportSet& a, const SupportSet& b) {
        return a.mask_ == b.mask_;
    }

private:
    SpacePtr space_;
    std::vector<char> mask_;
    int count_ = 0;
};

} // namespace bandlim
