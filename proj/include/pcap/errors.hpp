#pragma once

#include <stdexcept>
#include <string>

namespace pcap {

// Expression text could not be parsed; `position` is the byte offset of the
// first offending character.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t position)
        : std::runtime_error(what), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

// Evaluation left the domain where a profile is meaningful (log of a
// non-positive value, non-finite intermediate, ...).
class EvalError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Adaptive integration hit its subdivision cap before reaching the requested
// tolerance; any partial value is unusable.
class QuadratureError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A caller violated a documented precondition (p out of range, bad grid, ...).
class PreconditionError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A spec file failed validation; the message names the offending key.
class SpecError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An iterative solver ran out of iterations before meeting its tolerance.
class ConvergenceError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Exponents 1/(1-p) blow up as p -> 1; everything downstream assumes p is
// bounded away from that edge.
inline constexpr double kMinP = 1.0 + 1e-3;

inline void require_p(double p) {
    if (!(p >= kMinP)) throw PreconditionError("p must exceed 1");
}

}  // namespace pcap
