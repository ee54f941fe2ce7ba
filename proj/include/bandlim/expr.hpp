#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bandlim {

/// Parse/evaluation error with a source location (byte offset in the input).
struct ExprError : std::runtime_error {
    ExprError(const std::string& msg, std::size_t pos)
        : std::runtime_error(msg + " (at position " + std::to_string(pos) + ")"), position(pos) {}
    std::size_t position;
};

/// Coefficient expressions over lattice coordinates x0..x{dim-1}.
///
/// Grammar (left-associative, standard precedence):
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := '-' factor | power
///   power  := atom ('^' integer)?
///   atom   := number | 'x'<k> | fn '(' expr (',' expr)? ')' | '(' expr ')'
/// Functions: abs, sign, exp, tanh, min, max. The grammar is total: no
/// user-defined functions, evaluation failures (division by zero) are
/// reported with the evaluation point.
class Expr {
public:
    enum class Op {
        constant, variable,
        add, sub, mul, div, pow,
        neg, abs, sign, exp, tanh,
        min, max
    };

    struct Node {
        Op op;
        double value = 0.0;       // constant
        int index = 0;            // variable index, or integer exponent for pow
        std::size_t pos = 0;      // source position (0 for synthesized nodes)
        std::vector<std::shared_ptr<const Node>> args;
    };
    using NodePtr = std::shared_ptr<const Node>;

    Expr() = default;

    static Expr parse(const std::string& text, int dim) {
        Parser p{text, dim, 0};
        Expr e;
        e.root_ = p.parse_expr();
        p.skip_ws();
        if (p.pos != text.size()) throw ExprError("unexpected trailing input", p.pos);
        e.text_ = text;
        return e;
    }

    static Expr constant(double v) {
        Expr e;
        e.root_ = make(Op::constant, v);
        return e;
    }

    bool valid() const { return root_ != nullptr; }
    const std::string& text() const { return text_; }

    double eval(std::span<const std::int64_t> point) const {
        return eval_node(*root_, point);
    }

    std::size_t node_count() const { return count(*root_); }

    /// Expression with every variable x_a replaced by x_a + shift[a].
    Expr shifted(std::span<const std::int64_t> shift) const {
        Expr e;
        e.root_ = shift_node(root_, shift);
        e.text_ = text_;
        return e;
    }

    static Expr sum(const Expr& a, const Expr& b) { return combine(Op::add, a, b); }
    static Expr product(const Expr& a, const Expr& b) { return combine(Op::mul, a, b); }

private:
    static NodePtr make(Op op, double v = 0.0, int idx = 0,
                        std::vector<NodePtr> args = {}, std::size_t pos = 0) {
        auto n = std::make_shared<Node>();
        n->op = op;
        n->value = v;
        n->index = idx;
        n->pos = pos;
        n->args = std::move(args);
        return n;
    }

    static Expr combine(Op op, const Expr& a, const Expr& b) {
        Expr e;
        e.root_ = make(op, 0.0, 0, {a.root_, b.root_});
        e.text_ = "(" + a.text_ + (op == Op::add ? ")+(" : ")*(") + b.text_ + ")";
        return e;
    }

    static double eval_node(const Node& n, std::span<const std::int64_t> x) {
        switch (n.op) {
            case Op::constant: return n.value;
            case Op::variable: return static_cast<double>(x[n.index]);
            case Op::add: return eval_node(*n.args[0], x) + eval_node(*n.args[1], x);
            case Op::sub: return eval_node(*n.args[0], x) - eval_node(*n.args[1], x);
            case Op::mul: return eval_node(*n.args[0], x) * eval_node(*n.args[1], x);
            case Op::div: {
                double d = eval_node(*n.args[1], x);
                if (d == 0.0) throw ExprError("division by zero during evaluation", n.pos);
                return eval_node(*n.args[0], x) / d;
            }
            case Op::pow: {
                double b = eval_node(*n.args[0], x);
                int k = n.index;
                double r = 1.0;
                bool inv = k < 0;
                for (int i = 0; i < (inv ? -k : k); ++i) r *= b;
                if (inv) {
                    if (r == 0.0) throw ExprError("division by zero during evaluation", n.pos);
                    r = 1.0 / r;
                }
                return r;
            }
            case Op::neg: return -eval_node(*n.args[0], x);
            case Op::abs: return std::abs(eval_node(*n.args[0], x));
            case Op::sign: {
                double v = eval_node(*n.args[0], x);
                return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
            }
            case Op::exp: return std::exp(eval_node(*n.args[0], x));
            case Op::tanh: return std::tanh(eval_node(*n.args[0], x));
            case Op::min: return std::min(eval_node(*n.args[0], x), eval_node(*n.args[1], x));
            case Op::max: return std::max(eval_node(*n.args[0], x), eval_node(*n.args[1], x));
        }
        throw std::logic_error("Expr: unknown op");
    }

    static std::size_t count(const Node& n) {
        std::size_t c = 1;
        for (auto& a : n.args) c += count(*a);
        return c;
    }

    static NodePtr shift_node(const NodePtr& n, std::span<const std::int64_t> shift) {
        if (n->op == Op::variable) {
            if (shift[n->index] == 0) return n;
            return make(Op::add, 0.0, 0,
                        {n, make(Op::constant, static_cast<double>(shift[n->index]))});
        }
        if (n->args.empty()) return n;
        std::vector<NodePtr> args;
        args.reserve(n->args.size());
        bool changed = false;
        for (auto& a : n->args) {
            args.push_back(shift_node(a, shift));
            changed = changed || args.back() != a;
        }
        if (!changed) return n;
        return make(n->op, n->value, n->index, std::move(args), n->pos);
    }

    struct Parser {
        const std::string& s;
        int dim;
        std::size_t pos;

        void skip_ws() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        bool eat(char c) {
            skip_ws();
            if (pos < s.size() && s[pos] == c) { ++pos; return true; }
            return false;
        }

        NodePtr parse_expr() {
            NodePtr left = parse_term();
            for (;;) {
                skip_ws();
                if (eat('+')) left = make(Op::add, 0, 0, {left, parse_term()}, pos);
                else if (eat('-')) left = make(Op::sub, 0, 0, {left, parse_term()}, pos);
                else return left;
            }
        }

        NodePtr parse_term() {
            NodePtr left = parse_factor();
            for (;;) {
                skip_ws();
                if (eat('*')) left = make(Op::mul, 0, 0, {left, parse_factor()}, pos);
                else if (eat('/')) left = make(Op::div, 0, 0, {left, parse_factor()}, pos);
                else return left;
            }
        }

        NodePtr parse_factor() {
            skip_ws();
            if (eat('-')) return make(Op::neg, 0, 0, {parse_factor()}, pos);
            return parse_power();
        }

        NodePtr parse_power() {
            NodePtr base = parse_atom();
            skip_ws();
            if (eat('^')) {
                skip_ws();
                std::size_t p0 = pos;
                bool neg = eat('-');
                std::size_t start = pos;
                while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
                if (pos == start) throw ExprError("expected integer exponent after '^'", p0);
                int k = std::stoi(s.substr(start, pos - start));
                return make(Op::pow, 0, neg ? -k : k, {base}, p0);
            }
            return base;
        }

        NodePtr parse_atom() {
            skip_ws();
            if (pos >= s.size()) throw ExprError("unexpected end of expression", pos);
            std::size_t p0 = pos;
            char c = s[pos];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                std::size_t consumed = 0;
                double v = std::stod(s.substr(pos), &consumed);
                pos += consumed;
                return make(Op::constant, v, 0, {}, p0);
            }
            if (c == '(') {
                ++pos;
                NodePtr e = parse_expr();
                if (!eat(')')) throw ExprError("expected ')'", pos);
                return e;
            }
            if (std::isalpha(static_cast<unsigned char>(c))) {
                std::size_t start = pos;
                while (pos < s.size() &&
                       (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
                    ++pos;
                std::string name = s.substr(start, pos - start);
                if (name.size() >= 2 && name[0] == 'x' &&
                    std::isdigit(static_cast<unsigned char>(name[1]))) {
                    int idx = std::stoi(name.substr(1));
                    if (idx < 0 || idx >= dim)
                        throw ExprError("variable " + name + " out of range for dimension " +
                                            std::to_string(dim), p0);
                    return make(Op::variable, 0, idx, {}, p0);
                }
                Op op;
                int arity = 1;
                if (name == "abs") op = Op::abs;
                else if (name == "sign") op = Op::sign;
                else if (name == "exp") op = Op::exp;
                else if (name == "tanh") op = Op::tanh;
                else if (name == "min") { op = Op::min; arity = 2; }
                else if (name == "max") { op = Op::max; arity = 2; }
                else throw ExprError("unknown identifier '" + name + "'", p0);
                if (!eat('(')) throw ExprError("expected '(' after " + name, pos);
                std::vector<NodePtr> args;
                args.push_back(parse_expr());
                if (arity == 2) {
                    if (!eat(',')) throw ExprError("expected ',' in " + name, pos);
                    args.push_back(parse_expr());
                }
                if (!eat(')')) throw ExprError("expected ')'", pos);
                return make(op, 0, 0, std::move(args), p0);
            }
            throw ExprError(std::string("unexpected character '") + c + "'", pos);
        }
    };

    NodePtr root_;
    std::string text_;
};

} // namespace bandlim
