#pragma once

#include <string>

#include "pcap/profile_expr.hpp"

namespace pcap {

// Rotationally symmetric warped product: base of dimension n whose geodesic
// sphere at radius t has area omega_{n-1} * sigma(t)^{n-1}, crossed with an
// l-dimensional fiber of total volume fiber_volume, warped by f(t). The
// boundary flux density
//
//     S(t) = fiber_volume * f(t)^l * omega_{n-1} * sigma(t)^{n-1}
//
// is the single function every capacity and parabolicity formula consumes.

struct ModelManifold {
    int base_dim = 1;           // n >= 1
    ProfileExpr base_profile;   // sigma(t) > 0
    ProfileExpr warp;           // f(t) > 0
    int fiber_dim = 0;          // l >= 0; 0 means trivial fiber
    double fiber_volume = 1.0;  // vol(L) > 0
    double inner_radius = 1.0;  // radius of the compact core
};

// Area of the unit (n-1)-sphere, with the convention omega_0 = 2 (the
// boundary of an interval is two points).
double sphere_area(int n);

// Validates dimensions, volume, and positivity of sigma and f on a sampling
// grid spanning [inner_radius, 1e6]. Throws PreconditionError/EvalError with
// a message naming the offending field.
void validate(const ModelManifold& m);

// Spot-checks that a profile stays positive on a geometric grid from r0 out
// to the far end of the working range; throws PreconditionError naming the
// field otherwise.
void check_positive_on_grid(const ProfileExpr& e, double r0,
                            const char* field);

// Convenience constructors for common bases (sigma = t, trivial fiber).
ModelManifold euclidean_model(int n);

class FluxDensity {
public:
    explicit FluxDensity(const ModelManifold& m);

    double operator()(double t) const;
    double log_at(double t) const;

    // The three factors of log S, for diagnostics.
    double log_fiber_volume() const { return log_fiber_volume_; }
    double log_warp_power(double t) const;  // l * log f(t)
    double log_base_area(double t) const;   // log omega + (n-1) * log sigma(t)

private:
    ModelManifold m_;
    double log_fiber_volume_;
    double log_omega_;
};

FluxDensity flux_density(const ModelManifold& m);

// Inner factor of the divergence criterion: S(t) / vol(L), i.e. the fiber
// warp raised to l times the base boundary area. Independent of vol(L).
double criterion_inner(const ModelManifold& m, double t);
double log_criterion_inner(const ModelManifold& m, double t);

}  // namespace pcap
