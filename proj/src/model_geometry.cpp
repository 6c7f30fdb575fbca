#include "pcap/model_geometry.hpp"

#include <cmath>
#include <string>

#include "pcap/errors.hpp"

namespace pcap {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Largest radius at which positivity of the profiles is spot-checked; the
// tail analysis never evaluates beyond this.
constexpr double kValidationSpan = 1e6;

}  // namespace

void check_positive_on_grid(const ProfileExpr& e, double r0,
                            const char* field) {
    // Geometric sampling from r0 out to the far end of the working range.
    double lo = r0 > 0.0 ? r0 : 1.0;
    for (double t = lo; t <= kValidationSpan; t *= 1.5) {
        try {
            eval_log(e, t);  // throws on non-positive values
        } catch (const EvalError&) {
            throw PreconditionError(std::string(field) +
                                    " must stay positive on the working "
                                    "range (fails near t = " +
                                    std::to_string(t) + ")");
        }
    }
}

double sphere_area(int n) {
    if (n < 1) throw PreconditionError("base_dim must be at least 1");
    if (n == 1) return 2.0;  // two boundary points
    return 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);
}

void validate(const ModelManifold& m) {
    if (m.base_dim < 1) throw PreconditionError("base_dim must be at least 1");
    if (m.fiber_dim < 0)
        throw PreconditionError("fiber_dim must be nonnegative");
    if (!(m.fiber_volume > 0.0))
        throw PreconditionError("fiber_volume must be positive");
    if (!(m.inner_radius > 0.0))
        throw PreconditionError("inner_radius must be positive");
    if (!m.base_profile) throw PreconditionError("sigma is missing");
    if (!m.warp) throw PreconditionError("warp is missing");
    check_positive_on_grid(m.base_profile, m.inner_radius, "sigma");
    check_positive_on_grid(m.warp, m.inner_radius, "warp");
}

ModelManifold euclidean_model(int n) {
    ModelManifold m;
    m.base_dim = n;
    m.base_profile = make_var();
    m.warp = make_const(1.0);
    return m;
}

FluxDensity::FluxDensity(const ModelManifold& m) : m_(m) {
    validate(m);
    log_fiber_volume_ = std::log(m.fiber_volume);
    log_omega_ = std::log(sphere_area(m.base_dim));
}

double FluxDensity::log_warp_power(double t) const {
    // l = 0 collapses the warp factor to 1 regardless of f.
    if (m_.fiber_dim == 0) return 0.0;
    return m_.fiber_dim * eval_log(m_.warp, t);
}

double FluxDensity::log_base_area(double t) const {
    if (m_.base_dim == 1) return log_omega_;
    return log_omega_ + (m_.base_dim - 1) * eval_log(m_.base_profile, t);
}

double FluxDensity::log_at(double t) const {
    return log_fiber_volume_ + log_warp_power(t) + log_base_area(t);
}

double FluxDensity::operator()(double t) const { return std::exp(log_at(t)); }

FluxDensity flux_density(const ModelManifold& m) { return FluxDensity(m); }

double log_criterion_inner(const ModelManifold& m, double t) {
    double log_omega = std::log(sphere_area(m.base_dim));
    double v = log_omega;
    if (m.base_dim > 1) v += (m.base_dim - 1) * eval_log(m.base_profile, t);
    if (m.fiber_dim > 0) v += m.fiber_dim * eval_log(m.warp, t);
    return v;
}

double criterion_inner(const ModelManifold& m, double t) {
    return std::exp(log_criterion_inner(m, t));
}

}  // namespace pcap
