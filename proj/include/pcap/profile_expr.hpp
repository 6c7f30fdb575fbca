#pragma once

#include <memory>
#include <string>

#include "pcap/errors.hpp"

namespace pcap {

// Radial profile expressions: closed-form positive functions of the single
// variable t (metric profiles, warps, fiber-volume data). Trees are immutable
// and shared; evaluation is pure, so expressions are safe to use from any
// number of threads at once.

enum class NodeKind {
    Constant,
    Variable,  // t
    Add,
    Sub,
    Mul,
    Div,
    Pow,  // both the '^' operator and the two-argument pow() function
    Neg,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
};

struct Node;
using ProfileExpr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind;
    double value = 0.0;  // Constant only
    ProfileExpr a;       // first child (unary and binary)
    ProfileExpr b;       // second child (binary only)
};

ProfileExpr make_const(double v);
ProfileExpr make_var();
ProfileExpr make_unary(NodeKind kind, ProfileExpr a);
ProfileExpr make_binary(NodeKind kind, ProfileExpr a, ProfileExpr b);

// Parses the expression grammar:
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?          (right-associative)
//   atom   := number | 't' | name '(' expr [',' expr] ')' | '(' expr ')'
// Functions: exp, log, sqrt, sinh, cosh, pow. Throws ParseError with the
// offset of the first offending character.
ProfileExpr parse_profile(const std::string& text);

// Plain evaluation. Throws EvalError when the result is not finite or a
// domain rule is broken (log/sqrt of a negative, division by zero, ...).
double eval(const ProfileExpr& e, double t);

// log(eval(e, t)) computed without forming eval(e, t) where that would over-
// or underflow: propagates structurally through exp, ^, *, /, sqrt, sinh and
// cosh nodes and falls back to log of the plain value elsewhere. Throws
// EvalError when the value is non-positive or the log itself is not finite.
double eval_log(const ProfileExpr& e, double t);

// Canonical text form: parse_profile(to_string(e)) reconstructs e exactly
// for any tree the parser itself can produce.
std::string to_string(const ProfileExpr& e);

}  // namespace pcap
