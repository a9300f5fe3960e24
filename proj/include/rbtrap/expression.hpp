#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rbtrap/errors.hpp"

namespace rbtrap::expr {

enum class NodeKind {
    Number, VarX, VarY,
    Add, Sub, Mul, Div, Pow, Neg,
    Sin, Cos, Exp, Sqrt, Abs, Cosq,
};

struct Node {
    NodeKind kind;
    double value = 0.0;
    std::unique_ptr<const Node> a;
    std::unique_ptr<const Node> b;
};

namespace detail {

struct Token {
    enum class Kind { Number, Ident, Op, LParen, RParen, Comma, End } kind;
    std::string text;
    double value = 0.0;
    std::size_t pos = 0;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
        const std::size_t start = i_;
        if (i_ >= src_.size()) return {Token::Kind::End, "", 0.0, start};
        const char c = src_[i_];
        // U+2212 (minus sign) is accepted as '-'
        if (static_cast<unsigned char>(c) == 0xE2 && i_ + 2 < src_.size() &&
            static_cast<unsigned char>(src_[i_ + 1]) == 0x88 &&
            static_cast<unsigned char>(src_[i_ + 2]) == 0x92) {
            i_ += 3;
            return {Token::Kind::Op, "-", 0.0, start};
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(std::string(src_.substr(i_)), &used);
            } catch (const std::exception&) {
                throw SyntaxError("malformed number at position " + std::to_string(start),
                                  start, "number");
            }
            i_ += used;
            return {Token::Kind::Number, std::string(src_.substr(start, used)), v, start};
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i_;
            while (j < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_'))
                ++j;
            Token t{Token::Kind::Ident, std::string(src_.substr(i_, j - i_)), 0.0, start};
            i_ = j;
            return t;
        }
        ++i_;
        switch (c) {
            case '+': case '-': case '*': case '/': case '^':
                return {Token::Kind::Op, std::string(1, c), 0.0, start};
            case '(': return {Token::Kind::LParen, "(", 0.0, start};
            case ')': return {Token::Kind::RParen, ")", 0.0, start};
            case ',': return {Token::Kind::Comma, ",", 0.0, start};
            default:
                throw SyntaxError(std::string("unexpected character '") + c +
                                  "' at position " + std::to_string(start),
                                  start, "operator, parenthesis, number, or name");
        }
    }

private:
    std::string_view src_;
    std::size_t i_ = 0;
};

using NodePtr = std::unique_ptr<const Node>;

inline NodePtr make(NodeKind k, NodePtr a = nullptr, NodePtr b = nullptr, double v = 0.0) {
    auto n = std::make_unique<Node>();
    n->kind = k;
    n->value = v;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

class Parser {
public:
    explicit Parser(std::string_view src) : lex_(src) { advance(); }

    NodePtr parse() {
        NodePtr e = sum();
        expect(Token::Kind::End, "end of expression");
        return e;
    }

private:
    void advance() { cur_ = lex_.next(); }

    void expect(Token::Kind k, const char* what) {
        if (cur_.kind != k)
            throw SyntaxError("expected " + std::string(what) + " at position " +
                              std::to_string(cur_.pos), cur_.pos, what);
        advance();
    }

    bool accept_op(const char* op) {
        if (cur_.kind == Token::Kind::Op && cur_.text == op) {
            advance();
            return true;
        }
        return false;
    }

    NodePtr sum() {
        NodePtr e = product();
        for (;;) {
            if (accept_op("+")) e = make(NodeKind::Add, std::move(e), product());
            else if (accept_op("-")) e = make(NodeKind::Sub, std::move(e), product());
            else return e;
        }
    }

    NodePtr product() {
        NodePtr e = unary();
        for (;;) {
            if (accept_op("*")) e = make(NodeKind::Mul, std::move(e), unary());
            else if (accept_op("/")) e = make(NodeKind::Div, std::move(e), unary());
            else return e;
        }
    }

    NodePtr unary() {
        if (accept_op("-")) return make(NodeKind::Neg, unary());
        if (accept_op("+")) return unary();
        return power();
    }

    // '^' binds tighter than unary minus and associates to the right.
    NodePtr power() {
        NodePtr base = primary();
        if (accept_op("^")) return make(NodeKind::Pow, std::move(base), unary());
        return base;
    }

    NodePtr primary() {
        if (cur_.kind == Token::Kind::Number) {
            const double v = cur_.value;
            advance();
            return make(NodeKind::Number, nullptr, nullptr, v);
        }
        if (cur_.kind == Token::Kind::LParen) {
            advance();
            NodePtr e = sum();
            expect(Token::Kind::RParen, "')'");
            return e;
        }
        if (cur_.kind == Token::Kind::Ident) {
            const std::string name = cur_.text;
            const std::size_t pos = cur_.pos;
            advance();
            if (cur_.kind == Token::Kind::LParen) {
                advance();
                std::vector<NodePtr> args;
                args.push_back(sum());
                while (cur_.kind == Token::Kind::Comma) {
                    advance();
                    args.push_back(sum());
                }
                expect(Token::Kind::RParen, "')'");
                return call(name, pos, std::move(args));
            }
            if (name == "x") return make(NodeKind::VarX);
            if (name == "y") return make(NodeKind::VarY);
            if (name == "pi") return make(NodeKind::Number, nullptr, nullptr, M_PI);
            throw UnknownIdentifier("unknown name '" + name + "' at position " +
                                    std::to_string(pos), pos);
        }
        throw SyntaxError("expected a value at position " + std::to_string(cur_.pos),
                          cur_.pos, "number, name, or '('");
    }

    NodePtr call(const std::string& name, std::size_t pos, std::vector<NodePtr> args) {
        const auto arity = [&](std::size_t n, NodeKind k) {
            if (args.size() != n)
                throw SyntaxError("'" + name + "' takes " + std::to_string(n) +
                                  (n == 1 ? " argument" : " arguments"), pos, "argument list");
            NodePtr b = n == 2 ? std::move(args[1]) : nullptr;
            return make(k, std::move(args[0]), std::move(b));
        };
        if (name == "sin") return arity(1, NodeKind::Sin);
        if (name == "cos") return arity(1, NodeKind::Cos);
        if (name == "exp") return arity(1, NodeKind::Exp);
        if (name == "sqrt") return arity(1, NodeKind::Sqrt);
        if (name == "abs") return arity(1, NodeKind::Abs);
        if (name == "cosq") return arity(2, NodeKind::Cosq);
        throw UnknownIdentifier("unknown function '" + name + "' at position " +
                                std::to_string(pos), pos);
    }

    Lexer lex_;
    Token cur_;
};

inline std::string print(const Node& n);

inline std::string print_binary(const Node& n, const char* op) {
    return "(" + print(*n.a) + op + print(*n.b) + ")";
}

inline std::string print(const Node& n) {
    switch (n.kind) {
        case NodeKind::Number: {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", n.value);
            return buf;
        }
        case NodeKind::VarX: return "x";
        case NodeKind::VarY: return "y";
        case NodeKind::Add: return print_binary(n, " + ");
        case NodeKind::Sub: return print_binary(n, " - ");
        case NodeKind::Mul: return print_binary(n, " * ");
        case NodeKind::Div: return print_binary(n, " / ");
        case NodeKind::Pow: return print_binary(n, " ^ ");
        case NodeKind::Neg: return "(-" + print(*n.a) + ")";
        case NodeKind::Sin: return "sin(" + print(*n.a) + ")";
        case NodeKind::Cos: return "cos(" + print(*n.a) + ")";
        case NodeKind::Exp: return "exp(" + print(*n.a) + ")";
        case NodeKind::Sqrt: return "sqrt(" + print(*n.a) + ")";
        case NodeKind::Abs: return "abs(" + print(*n.a) + ")";
        case NodeKind::Cosq: return "cosq(" + print(*n.a) + ", " + print(*n.b) + ")";
    }
    return "?";
}

inline double eval(const Node& n, double x, double y) {
    switch (n.kind) {
        case NodeKind::Number: return n.value;
        case NodeKind::VarX: return x;
        case NodeKind::VarY: return y;
        case NodeKind::Add: return eval(*n.a, x, y) + eval(*n.b, x, y);
        case NodeKind::Sub: return eval(*n.a, x, y) - eval(*n.b, x, y);
        case NodeKind::Mul: return eval(*n.a, x, y) * eval(*n.b, x, y);
        case NodeKind::Div: {
            const double den = eval(*n.b, x, y);
            const double v = eval(*n.a, x, y) / den;
            if (!std::isfinite(v))
                throw DomainError("division yields a non-finite value in " + print(n));
            return v;
        }
        case NodeKind::Pow: {
            const double base = eval(*n.a, x, y);
            const double e = eval(*n.b, x, y);
            if (base < 0.0 && e != std::floor(e))
                throw DomainError("negative base with fractional exponent in " + print(n));
            const double v = std::pow(base, e);
            if (!std::isfinite(v))
                throw DomainError("power yields a non-finite value in " + print(n));
            return v;
        }
        case NodeKind::Neg: return -eval(*n.a, x, y);
        case NodeKind::Sin: return std::sin(eval(*n.a, x, y));
        case NodeKind::Cos: return std::cos(eval(*n.a, x, y));
        case NodeKind::Exp: {
            const double v = std::exp(eval(*n.a, x, y));
            if (!std::isfinite(v))
                throw DomainError("exp overflows in " + print(n));
            return v;
        }
        case NodeKind::Sqrt: {
            const double arg = eval(*n.a, x, y);
            if (arg < 0.0)
                throw DomainError("sqrt of negative value in " + print(n));
            return std::sqrt(arg);
        }
        case NodeKind::Abs: return std::fabs(eval(*n.a, x, y));
        case NodeKind::Cosq: {
            const double arg = eval(*n.a, x, y);
            const double radius = eval(*n.b, x, y);
            if (!(radius > 0.0))
                throw DomainError("cosq radius must be positive in " + print(n));
            if (std::fabs(arg) >= radius) return 0.0;
            const double c = std::cos(0.5 * M_PI * arg / radius);
            return c * c;
        }
    }
    throw DomainError("malformed expression node");
}

} // namespace detail

// Immutable parsed expression in x and y.
class ExpressionTree {
public:
    static ExpressionTree parse(std::string_view source) {
        detail::Parser p(source);
        return ExpressionTree(std::shared_ptr<const Node>(p.parse().release()));
    }

    double evaluate(double x, double y) const {
        const double v = detail::eval(*root_, x, y);
        if (!std::isfinite(v))
            throw DomainError("expression yields a non-finite value");
        return v;
    }

    std::string str() const { return detail::print(*root_); }

private:
    explicit ExpressionTree(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
    std::shared_ptr<const Node> root_;
};

struct ProfileReport {
    double support_violation = 0.0;   // max |f| sampled on R < |x| <= 2R
    double periodicity_defect = 0.0;  // max |f(x,0) - f(x,2pi)| and d/dy analog
    int mean_sign = 0;                // sign of the sampled mean, 0 within tol
};

// Diagnoses a candidate profile; reports, never rejects.
inline ProfileReport validate_profile(const ExpressionTree& f, double R,
                                      int n_samples = 64, double tol = 1e-12) {
    if (!(R > 0.0)) throw ValidationError("support radius must be positive");
    if (n_samples < 16) throw ValidationError("need at least 16 samples");
    ProfileReport rep;
    const double two_pi = 2.0 * M_PI;
    double mean = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        const double ti = (static_cast<double>(i) + 0.5) / static_cast<double>(n_samples);
        const double x_out = R + ti * R;
        for (int j = 0; j < n_samples; ++j) {
            const double yj = two_pi * static_cast<double>(j) / static_cast<double>(n_samples);
            rep.support_violation = std::max(rep.support_violation,
                                             std::fabs(f.evaluate(x_out, yj)));
            rep.support_violation = std::max(rep.support_violation,
                                             std::fabs(f.evaluate(-x_out, yj)));
        }
        const double xi = -R + ti * 2.0 * R;
        rep.periodicity_defect = std::max(rep.periodicity_defect,
                                          std::fabs(f.evaluate(xi, two_pi) - f.evaluate(xi, 0.0)));
        // centered slopes; the O(h^2) truncation terms agree for periodic f and cancel
        const double h = 0.1;
        const double s0 = (f.evaluate(xi, h) - f.evaluate(xi, -h)) / (2.0 * h);
        const double s1 = (f.evaluate(xi, two_pi + h) - f.evaluate(xi, two_pi - h)) / (2.0 * h);
        rep.periodicity_defect = std::max(rep.periodicity_defect, std::fabs(s1 - s0));
        for (int j = 0; j < n_samples; ++j) {
            const double yj = two_pi * static_cast<double>(j) / static_cast<double>(n_samples);
            mean += f.evaluate(xi, yj);
        }
    }
    mean /= static_cast<double>(n_samples) * static_cast<double>(n_samples);
    rep.mean_sign = std::fabs(mean) <= tol ? 0 : (mean > 0.0 ? 1 : -1);
    return rep;
}

} // namespace rbtrap::expr
