#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pcap/parabolicity.hpp"

namespace pcap {

// Radially fibered space over a model base: above the sphere of radius t in
// the base sits a fiber of volume V(t). Only the fiber volume enters the
// energy transfer, so this captures the whole computable content of the
// bounded-fiber argument.
struct SubmersionSpec {
    int base_dim = 1;             // dimension of the model base
    ProfileExpr base_profile;     // sigma(t) of the base metric
    ProfileExpr fiber_volume_fn;  // V(t) > 0, fiber volume over radius t
    std::optional<double> claimed_bound;  // asserted uniform bound, if any
    double inner_radius = 1.0;
};

// Throws PreconditionError naming the offending field.
void validate(const SubmersionSpec& s);

// The base as a plain model manifold (no warped fiber of its own).
ModelManifold base_manifold(const SubmersionSpec& s);

// Exhausting cutoff family u_j: 1 on B_j, 0 outside B_{R(j)}.
// CapacityOptimal uses the energy-minimizing radial profile of the base;
// LogCutoff uses u(t) = log(R/t)/log(R/j), the classical planar choice.
enum class CutoffKind { CapacityOptimal, LogCutoff };

struct CutoffFamily {
    CutoffKind kind = CutoffKind::CapacityOptimal;
    std::function<double(long)> outer_radius;  // defaults to R(j) = j^2

    double radius(long j) const {
        return outer_radius ? outer_radius(j)
                            : static_cast<double>(j) * static_cast<double>(j);
    }
};

struct BoundCheck {
    bool bounded = false;
    double sup_estimate = 0.0;
    double argmax_t = 0.0;
    std::vector<std::string> notes;
};

// Estimates sup V on [inner_radius, T] from a refining geometric grid and a
// tail-growth fit. bounded is set only when the tail is certified flat or
// decaying; growth or an unresolved tail refuses the certificate.
BoundCheck check_uniform_bound(const SubmersionSpec& s, double T);

// One-directional transfer: a parabolic base with uniformly bounded fibers
// makes the total space parabolic. Anything else is Inconclusive -- this
// route never certifies Hyperbolic. The returned verdict keeps the base
// verdict's tail diagnostics and replaces the evidence notes.
Verdict transfer_verdict(const SubmersionSpec& s, const Verdict& base_verdict,
                         double p, double T = 1e6);

// Fiber-integrated cutoff energy
//   E_j = int_j^{R(j)} |u_j'(t)|^p V(t) omega_{n-1} sigma(t)^{n-1} dt,
// computed in log form. log_pulled_back_energy reports log E_j, which stays
// finite when E_j underflows a plain double.
double pulled_back_energy(const SubmersionSpec& s, const CutoffFamily& family,
                          double p, long j, const QuadratureSpec& q = {});
double log_pulled_back_energy(const SubmersionSpec& s,
                              const CutoffFamily& family, double p, long j,
                              const QuadratureSpec& q = {});

struct DecayCheck {
    bool decays = false;
    std::vector<double> energies;  // one per schedule entry
    std::vector<std::string> notes;
};

// Computes E_j along the schedule and decides whether the sequence decays
// to zero. Preconditions (enforced): the base classifies Parabolic at p and
// the fiber volumes are certified bounded; otherwise decay of the cutoff
// energies is not the statement being verified.
DecayCheck verify_decay(const SubmersionSpec& s, double p,
                        const std::vector<long>& j_schedule,
                        const CutoffFamily& family = {},
                        const ClassifyOptions& opts = {});

}  // namespace pcap
