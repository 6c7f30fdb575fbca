#pragma once

#include <functional>

#include "pcap/errors.hpp"

namespace pcap {

struct QuadratureSpec {
    double rel_tol = 1e-10;
    long max_subdivisions = 1L << 20;  // total panel budget
    bool log_domain = true;
};

struct QuadratureResult {
    double log_value;  // log of the integral
    double value;      // exp(log_value); +inf when only the log is usable
    double rel_error;  // estimated relative error actually achieved
    long panels;       // accepted panels
};

// Adaptive composite Simpson for integrands given by their logarithm:
// computes log of the integral of exp(log_f) over [a, b] without ever forming
// exp(log_f) where it would over- or underflow. Panels start on a geometric
// subdivision of [a, b] (the integrands here are power-like) and halve until
// each panel's own relative error passes rel_tol; for positive integrands the
// panel-relative criterion bounds the global relative error by the same
// tolerance. Throws QuadratureError when the panel budget runs out.
QuadratureResult integrate_log(const std::function<double(double)>& log_f,
                               double a, double b, const QuadratureSpec& q);

// Same scheme in plain arithmetic, for integrands of moderate scale. The
// relative acceptance test carries a tiny absolute floor so integrals that
// are exactly zero terminate.
QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, const QuadratureSpec& q);

// Dispatches on q.log_domain: either integrates log_f in log space or
// exponentiates it pointwise and integrates in plain arithmetic.
QuadratureResult integrate_positive(const std::function<double(double)>& log_f,
                                    double a, double b,
                                    const QuadratureSpec& q);

}  // namespace pcap
