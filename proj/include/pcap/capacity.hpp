#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pcap/errors.hpp"

#include "pcap/model_geometry.hpp"
#include "pcap/quadrature.hpp"

namespace pcap {

// Conductor capacity of the core B_{r0} inside the ball B_R, computed two
// independent ways: the closed-form flux integral
//
//     [ int_{r0}^R S(t)^{1/(1-p)} dt ]^{1-p}
//
// and direct minimization of the discretized energy sum |du|^p S dt. The two
// must agree; their gap is the artifact's main self-check.

struct CapacityEstimate {
    double value = 0.0;      // may underflow to 0; log_value stays usable
    double log_value = 0.0;  // log of the capacity
    double error_bound = 0.0;
    std::string method;  // "flux" or "variational"
    double p = 0.0;
    double R = 0.0;
    long grid_size = 0;  // variational only
};

CapacityEstimate flux_capacity(const ModelManifold& m, double p, double R,
                               const QuadratureSpec& q = {});

// Minimizes sum_i S(tbar_i) dt |d_i/dt|^p over radial node values on a
// uniform grid with grid_size cells, by damped Newton on the strictly convex
// objective (tridiagonal Hessian). When minimizer_out is non-null it receives
// the optimal nodal values u_0 = 1 ... u_K = 0.
CapacityEstimate variational_capacity(const ModelManifold& m, double p,
                                      double R, long grid_size,
                                      std::vector<double>* minimizer_out =
                                          nullptr);

// Continuum minimizer u(t) = 1 - I(r0,t)/I(r0,R) with I the flux integral;
// u(r0) = 1, u(R) = 0, non-increasing. Evaluation integrates fresh; values()
// shares one cumulative sweep across an ascending batch.
class OptimalProfile {
public:
    OptimalProfile(const ModelManifold& m, double p, double R,
                   const QuadratureSpec& q = {});

    double operator()(double t) const;
    std::vector<double> values(const std::vector<double>& ascending_ts) const;

    double inner_radius() const { return r0_; }
    double outer_radius() const { return R_; }
    double log_total() const { return log_total_; }  // log I(r0, R)

private:
    double log_integrand(double t) const;

    FluxDensity s_;
    double exponent_;  // 1/(1-p)
    double r0_, R_;
    QuadratureSpec quad_;
    double log_total_;
};

OptimalProfile optimal_profile(const ModelManifold& m, double p, double R,
                               const QuadratureSpec& q = {});

// Behavior of flux capacity along an increasing exhaustion schedule.
enum class Trend { ToZero, ToPositive, Undetermined };

struct CapacityLimit {
    double limit_estimate = 0.0;
    Trend trend = Trend::Undetermined;
    std::vector<double> values;  // capacities at the schedule points used
};

struct LimitOptions {
    double floor = 1e-8;          // capacities below this certify decay
    double stabilization = 1e-6;  // relative change counting as "settled"
    QuadratureSpec quad;
};

// Geometric default schedule for exhaustion scans.
inline const std::vector<double>& default_R_schedule() {
    static const std::vector<double> s{10.0, 1e2, 1e4, 1e8};
    return s;
}

// Evaluates the schedule in increasing order. Capacities are nonincreasing
// in R, so a value below the floor ends the scan early with trend to-zero.
// Values that stabilize report to-positive; a strictly decreasing tail is
// extrapolated (Aitken) to decide between a positive limit and zero.
CapacityLimit capacity_limit(const ModelManifold& m, double p,
                             const std::vector<double>& R_schedule,
                             const LimitOptions& opts = {});

const char* to_string(Trend t);

}  // namespace pcap
