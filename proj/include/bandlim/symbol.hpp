#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "bandlim/expr.hpp"

namespace bandlim {

/// Offset/coefficient form of a band operator on the integer lattice:
/// entry A_{x+k, x} = a_k(x) for finitely many offsets k. The coefficient
/// expressions are evaluable at any lattice point, which is what makes
/// translates far beyond the stored window computable.
class SymbolicBand {
public:
    struct Term {
        std::vector<std::int64_t> offset;
        Expr coefficient;
    };

    SymbolicBand(int dim, std::vector<Term> terms)
        : dim_(dim), terms_(std::move(terms)) {}

    int dim() const { return dim_; }
    const std::vector<Term>& terms() const { return terms_; }

    /// Coefficients of the translate V_{-h} A V_h: a_k(x + h).
    std::shared_ptr<const SymbolicBand> translated(std::span<const std::int64_t> h) const {
        std::vector<Term> out;
        out.reserve(terms_.size());
        for (const auto& t : terms_)
            out.push_back({t.offset, t.coefficient.shifted(h)});
        return std::make_shared<const SymbolicBand>(dim_, std::move(out));
    }

    /// Transpose: (A^T)_{x+j,x} = a_{-j}(x+j).
    std::shared_ptr<const SymbolicBand> adjoint() const {
        std::vector<Term> out;
        out.reserve(terms_.size());
        for (const auto& t : terms_) {
            std::vector<std::int64_t> j(dim_);
            for (int a = 0; a < dim_; ++a) j[a] = -t.offset[a];
            out.push_back({j, t.coefficient.shifted(t.offset)});
        }
        return std::make_shared<const SymbolicBand>(dim_, std::move(out));
    }

    /// Product at the coefficient level:
    /// (AB)_{x+j,x} = sum over k1+k2=j of a_{k1}(x+k2) b_{k2}(x).
    static std::shared_ptr<const SymbolicBand> product(const SymbolicBand& A,
                                                       const SymbolicBand& B) {
        std::map<std::vector<std::int64_t>, Expr> acc;
        for (const auto& ta : A.terms_) {
            for (const auto& tb : B.terms_) {
                std::vector<std::int64_t> j(A.dim_);
                for (int a = 0; a < A.dim_; ++a) j[a] = ta.offset[a] + tb.offset[a];
                Expr piece = Expr::product(ta.coefficient.shifted(tb.offset), tb.coefficient);
                auto it = acc.find(j);
                if (it == acc.end()) acc.emplace(j, piece);
                else it->second = Expr::sum(it->second, piece);
            }
        }
        std::vector<Term> out;
        out.reserve(acc.size());
        for (auto& [k, e] : acc) out.push_back({k, e});
        return std::make_shared<const SymbolicBand>(A.dim_, std::move(out));
    }

private:
    int dim_;
    std::vector<Term> terms_;
};

using SymbolicBandPtr = std::shared_ptr<const SymbolicBand>;

} // namespace bandlim
