#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pcap/capacity.hpp"
#include "pcap/model_geometry.hpp"
#include "pcap/quadrature.hpp"

namespace pcap {

// Decides whether the model is p-parabolic by testing divergence of
//
//     int_{r0}^inf  (S(t)/vol(L))^{1/(1-p)}  dt
//
// numerically: partial integrals at doubling checkpoints plus an asymptotic
// fit of the integrand over the tail window. Inconclusive is an honest
// output, not a failure mode.

enum class Decision { Parabolic, Hyperbolic, Inconclusive };

const char* to_string(Decision d);

struct Verdict {
    Decision decision = Decision::Inconclusive;
    double partial_integral = 0.0;      // at T_max; +inf once past overflow
    double log_partial_integral = 0.0;
    double tail_exponent = 0.0;         // slope of log g vs log t on the tail
    double tail_ci_low = 0.0;           // 95% band of that slope
    double tail_ci_high = 0.0;
    std::vector<std::string> evidence_notes;
};

struct ClassifyOptions {
    double T_max = 1e6;
    double margin = 0.05;  // dead zone around the critical exponent -1
    QuadratureSpec quad;
};

// g(t) = criterion_inner(m, t)^{1/(1-p)}, the integrand whose divergence is
// being decided. Computed in log space.
double criterion_integrand(const ModelManifold& m, double p, double t);
double log_criterion_integrand(const ModelManifold& m, double p, double t);

Verdict classify(const ModelManifold& m, double p,
                 const ClassifyOptions& opts = {});

struct SweepEntry {
    double p;
    Verdict verdict;
};

struct SweepResult {
    std::vector<SweepEntry> rows;
    std::optional<double> critical_p;  // midpoint of the verdict transition
    std::string note;                  // reason when critical_p is absent
};

SweepResult sweep_p(const ModelManifold& m, const std::vector<double>& p_grid,
                    const ClassifyOptions& opts = {});

// Runs both routes of the divergence/capacity equivalence. agrees is absent
// when the criterion is Inconclusive; otherwise it records whether the
// capacity trend matches (Parabolic <-> to-zero, Hyperbolic <-> to-positive).
// Disagreement is reported, never reconciled.
struct CrossCheck {
    std::optional<bool> agrees;
    Verdict criterion;
    CapacityLimit capacity;
};

CrossCheck cross_check(const ModelManifold& m, double p,
                       const ClassifyOptions& opts = {},
                       const std::vector<double>& R_schedule =
                           default_R_schedule());

}  // namespace pcap
