#include "pcap/profile_expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <utility>

#include "pcap/errors.hpp"

namespace pcap {

ProfileExpr make_const(double v) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Constant;
    n->value = v;
    return n;
}

ProfileExpr make_var() {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Variable;
    return n;
}

ProfileExpr make_unary(NodeKind kind, ProfileExpr a) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->a = std::move(a);
    return n;
}

ProfileExpr make_binary(NodeKind kind, ProfileExpr a, ProfileExpr b) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

// ---------------------------------------------------------------------------
// Parser: plain recursive descent over the grammar in the header.

namespace {

class Parser {
public:
    explicit Parser(const std::string& text) : text_(text) {}

    ProfileExpr run() {
        ProfileExpr e = expr();
        skip_ws();
        if (pos_ != text_.size())
            throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    const std::string& text_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() &&
               std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    bool consume(char c) {
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!consume(c))
            throw ParseError(std::string("expected '") + c + "'", pos_);
    }

    ProfileExpr expr() {
        ProfileExpr e = term();
        for (;;) {
            if (consume('+'))
                e = make_binary(NodeKind::Add, e, term());
            else if (consume('-'))
                e = make_binary(NodeKind::Sub, e, term());
            else
                return e;
        }
    }

    ProfileExpr term() {
        ProfileExpr e = unary();
        for (;;) {
            if (consume('*'))
                e = make_binary(NodeKind::Mul, e, unary());
            else if (consume('/'))
                e = make_binary(NodeKind::Div, e, unary());
            else
                return e;
        }
    }

    ProfileExpr unary() {
        if (consume('-')) return make_unary(NodeKind::Neg, unary());
        return power();
    }

    ProfileExpr power() {
        ProfileExpr base = atom();
        // '^' binds tighter than unary minus on its left, looser on its
        // right: -t^2 is -(t^2), t^-2 is t^(-2).
        if (consume('^')) return make_binary(NodeKind::Pow, base, unary());
        return base;
    }

    ProfileExpr atom() {
        char c = peek();
        if (c == '(') {
            ++pos_;
            ProfileExpr e = expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return name();
        throw ParseError("expected a number, 't', a function call, or '('",
                         pos_);
    }

    ProfileExpr number() {
        const char* begin = text_.c_str() + pos_;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) throw ParseError("malformed number", pos_);
        pos_ += static_cast<std::size_t>(end - begin);
        return make_const(v);
    }

    ProfileExpr name() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               std::isalpha(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        std::string id = text_.substr(start, pos_ - start);
        if (id == "t") return make_var();

        NodeKind kind;
        if (id == "exp")
            kind = NodeKind::Exp;
        else if (id == "log")
            kind = NodeKind::Log;
        else if (id == "sqrt")
            kind = NodeKind::Sqrt;
        else if (id == "sinh")
            kind = NodeKind::Sinh;
        else if (id == "cosh")
            kind = NodeKind::Cosh;
        else if (id == "pow")
            kind = NodeKind::Pow;
        else
            throw ParseError("unknown identifier '" + id + "'", start);

        expect('(');
        ProfileExpr first = expr();
        if (kind == NodeKind::Pow) {
            expect(',');
            ProfileExpr second = expr();
            expect(')');
            return make_binary(NodeKind::Pow, first, second);
        }
        expect(')');
        return make_unary(kind, first);
    }
};

}  // namespace

ProfileExpr parse_profile(const std::string& text) {
    return Parser(text).run();
}

// ---------------------------------------------------------------------------
// Evaluation.

namespace {

double eval_node(const Node& n, double t);

double eval_child(const ProfileExpr& e, double t) { return eval_node(*e, t); }

double eval_node(const Node& n, double t) {
    switch (n.kind) {
        case NodeKind::Constant:
            return n.value;
        case NodeKind::Variable:
            return t;
        case NodeKind::Add:
            return eval_child(n.a, t) + eval_child(n.b, t);
        case NodeKind::Sub:
            return eval_child(n.a, t) - eval_child(n.b, t);
        case NodeKind::Mul:
            return eval_child(n.a, t) * eval_child(n.b, t);
        case NodeKind::Div:
            return eval_child(n.a, t) / eval_child(n.b, t);
        case NodeKind::Pow:
            return std::pow(eval_child(n.a, t), eval_child(n.b, t));
        case NodeKind::Neg:
            return -eval_child(n.a, t);
        case NodeKind::Exp:
            return std::exp(eval_child(n.a, t));
        case NodeKind::Log: {
            double v = eval_child(n.a, t);
            if (!(v > 0.0)) throw EvalError("log of a non-positive value");
            return std::log(v);
        }
        case NodeKind::Sqrt: {
            double v = eval_child(n.a, t);
            if (v < 0.0) throw EvalError("sqrt of a negative value");
            return std::sqrt(v);
        }
        case NodeKind::Sinh:
            return std::sinh(eval_child(n.a, t));
        case NodeKind::Cosh:
            return std::cosh(eval_child(n.a, t));
    }
    throw EvalError("corrupt expression node");
}

constexpr double kLn2 = 0.69314718055994530942;

// log of the plain value, used wherever no structural shortcut applies.
double log_of_eval(const Node& n, double t) {
    double v = eval_node(n, t);
    if (!(v > 0.0)) throw EvalError("log of a non-positive value");
    if (!std::isfinite(v)) throw EvalError("value overflowed before log");
    return std::log(v);
}

double eval_log_node(const Node& n, double t) {
    switch (n.kind) {
        case NodeKind::Constant:
            if (!(n.value > 0.0))
                throw EvalError("log of a non-positive value");
            return std::log(n.value);
        case NodeKind::Variable:
            if (!(t > 0.0)) throw EvalError("log of a non-positive value");
            return std::log(t);
        case NodeKind::Exp:
            // log(exp(u)) = u, however extreme u is.
            return eval_child(n.a, t);
        case NodeKind::Pow: {
            // log(a^b) = b*log(a) when a > 0; a <= 0 (e.g. (-2)^2) falls
            // back to the plain value.
            double b = eval_child(n.b, t);
            try {
                return b * eval_log_node(*n.a, t);
            } catch (const EvalError&) {
                return log_of_eval(n, t);
            }
        }
        case NodeKind::Mul:
            try {
                return eval_log_node(*n.a, t) + eval_log_node(*n.b, t);
            } catch (const EvalError&) {
                // Both factors may be negative with a positive product.
                return log_of_eval(n, t);
            }
        case NodeKind::Div:
            try {
                return eval_log_node(*n.a, t) - eval_log_node(*n.b, t);
            } catch (const EvalError&) {
                return log_of_eval(n, t);
            }
        case NodeKind::Sqrt:
            try {
                return 0.5 * eval_log_node(*n.a, t);
            } catch (const EvalError&) {
                return log_of_eval(n, t);
            }
        case NodeKind::Sinh: {
            // sinh overflows for arguments beyond ~710 while log(sinh x) is
            // simply x - log 2 + log(1 - e^{-2x}).
            double x = eval_child(n.a, t);
            if (!(x > 0.0)) throw EvalError("log of a non-positive value");
            if (x > 20.0) return x - kLn2 + std::log1p(-std::exp(-2.0 * x));
            return std::log(std::sinh(x));
        }
        case NodeKind::Cosh: {
            double x = std::fabs(eval_child(n.a, t));
            if (x > 20.0) return x - kLn2 + std::log1p(std::exp(-2.0 * x));
            return std::log(std::cosh(x));
        }
        default:
            return log_of_eval(n, t);
    }
}

}  // namespace

double eval(const ProfileExpr& e, double t) {
    double v = eval_node(*e, t);
    if (std::isnan(v)) throw EvalError("expression evaluated to NaN");
    if (!std::isfinite(v)) throw EvalError("expression overflowed");
    return v;
}

double eval_log(const ProfileExpr& e, double t) {
    double v = eval_log_node(*e, t);
    if (std::isnan(v)) throw EvalError("log-value is NaN");
    if (v == std::numeric_limits<double>::infinity())
        throw EvalError("log-value overflowed");
    return v;
}

// ---------------------------------------------------------------------------
// Printing. Each operator prints its right operand at one level above its
// own precedence, so the printed text reparses to the identical tree.

namespace {

int precedence(NodeKind k) {
    switch (k) {
        case NodeKind::Add:
        case NodeKind::Sub:
            return 1;
        case NodeKind::Mul:
        case NodeKind::Div:
            return 2;
        case NodeKind::Neg:
            return 3;
        case NodeKind::Pow:
            return 4;
        default:
            return 5;  // atoms and function calls
    }
}

std::string fmt_const(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void print_node(const Node& n, int need, std::string& out) {
    int prec = precedence(n.kind);
    bool parens = prec < need;
    if (parens) out += '(';
    switch (n.kind) {
        case NodeKind::Constant:
            out += fmt_const(n.value);
            break;
        case NodeKind::Variable:
            out += 't';
            break;
        case NodeKind::Add:
            print_node(*n.a, prec, out);
            out += '+';
            print_node(*n.b, prec + 1, out);
            break;
        case NodeKind::Sub:
            print_node(*n.a, prec, out);
            out += '-';
            print_node(*n.b, prec + 1, out);
            break;
        case NodeKind::Mul:
            print_node(*n.a, prec, out);
            out += '*';
            print_node(*n.b, prec + 1, out);
            break;
        case NodeKind::Div:
            print_node(*n.a, prec, out);
            out += '/';
            print_node(*n.b, prec + 1, out);
            break;
        case NodeKind::Pow:
            print_node(*n.a, prec + 1, out);
            out += '^';
            print_node(*n.b, prec, out);
            break;
        case NodeKind::Neg:
            out += '-';
            print_node(*n.a, prec, out);
            break;
        case NodeKind::Exp:
        case NodeKind::Log:
        case NodeKind::Sqrt:
        case NodeKind::Sinh:
        case NodeKind::Cosh: {
            const char* name = n.kind == NodeKind::Exp    ? "exp"
                               : n.kind == NodeKind::Log  ? "log"
                               : n.kind == NodeKind::Sqrt ? "sqrt"
                               : n.kind == NodeKind::Sinh ? "sinh"
                                                          : "cosh";
            out += name;
            out += '(';
            print_node(*n.a, 0, out);
            out += ')';
            break;
        }
    }
    if (parens) out += ')';
}

}  // namespace

std::string to_string(const ProfileExpr& e) {
    std::string out;
    print_node(*e, 0, out);
    return out;
}

}  // namespace pcap
