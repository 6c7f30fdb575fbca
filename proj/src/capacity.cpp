#include "pcap/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pcap/errors.hpp"

namespace pcap {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& xs) {
    double m = kNegInf;
    for (double x : xs) m = std::max(m, x);
    if (m == kNegInf || !std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

double log_add(double x, double y) {
    if (x == kNegInf) return y;
    if (y == kNegInf) return x;
    double m = std::max(x, y);
    return m + std::log1p(std::exp(std::min(x, y) - m));
}

void require_domain(double p, double R, double r0) {
    require_p(p);
    if (!(R > r0))
        throw PreconditionError("R must exceed the inner radius");
}

}  // namespace

CapacityEstimate flux_capacity(const ModelManifold& m, double p, double R,
                               const QuadratureSpec& q) {
    require_domain(p, R, m.inner_radius);
    FluxDensity s = flux_density(m);
    const double e = 1.0 / (1.0 - p);
    auto log_integrand = [&s, e](double t) { return e * s.log_at(t); };
    QuadratureResult r =
        integrate_positive(log_integrand, m.inner_radius, R, q);

    CapacityEstimate out;
    out.method = "flux";
    out.p = p;
    out.R = R;
    out.log_value = (1.0 - p) * r.log_value;
    out.value = std::exp(out.log_value);
    // A relative quadrature error eps on the inner integral moves the
    // capacity by about |1-p| * eps.
    out.error_bound =
        (p - 1.0) * (r.rel_error + q.rel_tol) * out.value;
    return out;
}

// --- variational route ------------------------------------------------------

namespace {

// Discrete closed form: the energy minimum over nodal values equals the
// midpoint-rule version of the flux formula. Used for the error estimate,
// not as the solver's answer.
double log_midpoint_capacity(const std::vector<double>& log_s_mid, double dt,
                             double p) {
    const double e = 1.0 / (1.0 - p);
    std::vector<double> terms;
    terms.reserve(log_s_mid.size());
    for (double ls : log_s_mid) terms.push_back(e * ls + std::log(dt));
    return (1.0 - p) * log_sum_exp(terms);
}

struct NewtonResult {
    double log_value;
    std::vector<double> u;  // full nodal vector, u[0] = 1, u[K] = 0
};

// Damped Newton for F(u) = sum_i w_i |u_{i-1} - u_i|^p with u_0 = 1 and
// u_K = 0, weights normalized so the linear start has F = 1. The problem is
// strictly convex; the Hessian is tridiagonal and solved by the Thomas
// algorithm. Differences are kept strictly positive (for p < 2 the second
// derivative degenerates at zero difference).
NewtonResult minimize_energy(const std::vector<double>& log_w_raw, double p) {
    const long K = static_cast<long>(log_w_raw.size());
    const long n = K - 1;  // interior unknowns

    // Normalize so the linear-interpolant start has energy exactly 1; the
    // gradient tolerance below is relative to that scale.
    const double log_k = std::log(static_cast<double>(K));
    std::vector<double> w(K);
    const double log_e0 = log_sum_exp(log_w_raw) - p * log_k;
    for (long i = 0; i < K; ++i)
        w[i] = std::max(std::exp(log_w_raw[i] - log_e0), 1e-300);

    std::vector<double> d(K, 1.0 / K);  // differences u_{i-1} - u_i
    auto energy = [&](const std::vector<double>& dd) {
        double f = 0.0;
        for (long i = 0; i < K; ++i) f += w[i] * std::pow(dd[i], p);
        return f;
    };

    std::vector<double> grad(n), diag(n), off(n), rhs(n), step(n), dstep(K),
        cp(n), trial(K);
    double fcur = energy(d);
    const int max_iter = 200;
    bool converged = false;

    for (int iter = 0; iter < max_iter; ++iter) {
        // phi'(d_i) = p d^{p-1}, phi''(d_i) = p(p-1) d^{p-2}, d_i > 0.
        for (long j = 0; j < n; ++j) {
            double dl = d[j], dr = d[j + 1];
            double gl = w[j] * p * std::pow(dl, p - 1.0);
            double gr = w[j + 1] * p * std::pow(dr, p - 1.0);
            grad[j] = gr - gl;  // dF/du_j with d_j = u_{j-1} - u_j
            double hl = w[j] * p * (p - 1.0) * std::pow(dl, p - 2.0);
            double hr = w[j + 1] * p * (p - 1.0) * std::pow(dr, p - 2.0);
            diag[j] = hl + hr;
            off[j] = -hr;  // coupling between u_j and u_{j+1}
        }

        // Thomas solve of H step = -grad.
        double piv = diag[0];
        rhs[0] = -grad[0];
        cp[0] = off[0] / piv;
        rhs[0] /= piv;
        for (long j = 1; j < n; ++j) {
            piv = diag[j] - off[j - 1] * cp[j - 1];
            cp[j] = off[j] / piv;
            rhs[j] = (-grad[j] - off[j - 1] * rhs[j - 1]) / piv;
        }
        step[n - 1] = rhs[n - 1];
        for (long j = n - 2; j >= 0; --j)
            step[j] = rhs[j] - cp[j] * step[j + 1];

        // Directional derivative; -slope is the squared Newton decrement,
        // which near the optimum estimates 2 (F - F*). A tolerance relative
        // to the current energy keeps the test meaningful when the minimum
        // is many orders of magnitude below the unit-energy start.
        double slope = 0.0;
        for (long j = 0; j < n; ++j) {
            if (!std::isfinite(step[j]))
                throw ConvergenceError("search direction overflowed");
            slope += grad[j] * step[j];
        }
        if (-slope <= 1e-13 * fcur) {
            converged = true;
            break;
        }

        // Fraction-to-the-boundary: cap the step so every difference keeps
        // at least 1% of its current value. Shrinking a cell through exact
        // cancellation of d_i + step would otherwise leave only rounding
        // noise of arbitrary sign.
        double alpha = 1.0;
        for (long i = 0; i < K; ++i) {
            dstep[i] = (i > 0 ? step[i - 1] : 0.0) - (i < n ? step[i] : 0.0);
            if (dstep[i] < 0.0)
                alpha = std::min(alpha, -0.99 * d[i] / dstep[i]);
        }

        bool accepted = false;
        for (int halving = 0; halving < 60; ++halving) {
            bool positive = true;
            for (long i = 0; i < K; ++i) {
                trial[i] = d[i] + alpha * dstep[i];
                if (!(trial[i] > 0.0)) {
                    positive = false;
                    break;
                }
            }
            if (positive) {
                double ftrial = energy(trial);
                if (ftrial <= fcur + 1e-4 * alpha * slope) {
                    d = trial;
                    fcur = ftrial;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            // No progress at the smallest step: accept if the remaining
            // estimated gap is already tiny, otherwise fail loudly.
            if (-slope <= 1e-6 * fcur) {
                converged = true;
                break;
            }
            throw ConvergenceError(
                "energy minimization stalled before reaching tolerance");
        }
    }
    if (!converged)
        throw ConvergenceError(
            "energy minimization did not converge in 200 iterations");

    NewtonResult out;
    out.log_value = std::log(fcur) + log_e0;
    out.u.assign(K + 1, 0.0);
    out.u[0] = 1.0;
    for (long i = 1; i <= K; ++i) out.u[i] = out.u[i - 1] - d[i - 1];
    out.u[K] = 0.0;  // exact by construction, clear rounding residue
    return out;
}

}  // namespace

CapacityEstimate variational_capacity(const ModelManifold& m, double p,
                                      double R, long grid_size,
                                      std::vector<double>* minimizer_out) {
    require_domain(p, R, m.inner_radius);
    if (grid_size < 2)
        throw PreconditionError("grid_size must be at least 2");

    FluxDensity s = flux_density(m);
    const double r0 = m.inner_radius;
    const double dt = (R - r0) / grid_size;
    if (!(dt > 0.0) || r0 + dt == r0)
        throw PreconditionError("grid too fine for the interval");

    // Cell weights w_i = S(tbar_i) dt^{1-p} in log form.
    std::vector<double> log_w(grid_size), log_s_mid(grid_size);
    for (long i = 0; i < grid_size; ++i) {
        double tmid = r0 + (i + 0.5) * dt;
        log_s_mid[i] = s.log_at(tmid);
        log_w[i] = log_s_mid[i] + (1.0 - p) * std::log(dt);
    }

    NewtonResult nr = minimize_energy(log_w, p);

    // Error estimate: Newton-vs-closed-form gap at this grid plus the
    // change of the closed form under coarsening, both doubled.
    double log_mid_k = log_midpoint_capacity(log_s_mid, dt, p);
    double v_mid_k = std::exp(log_mid_k);
    double gap_solver = std::abs(std::exp(nr.log_value) - v_mid_k);
    double gap_grid = 0.0;
    if (grid_size >= 4) {
        long half = grid_size / 2;
        double dt2 = (R - r0) / half;
        std::vector<double> log_s_half(half);
        for (long i = 0; i < half; ++i)
            log_s_half[i] = s.log_at(r0 + (i + 0.5) * dt2);
        gap_grid = std::abs(
            v_mid_k - std::exp(log_midpoint_capacity(log_s_half, dt2, p)));
    }

    CapacityEstimate out;
    out.method = "variational";
    out.p = p;
    out.R = R;
    out.grid_size = grid_size;
    out.log_value = nr.log_value;
    out.value = std::exp(nr.log_value);
    out.error_bound = 2.0 * (gap_solver + gap_grid);
    if (minimizer_out) *minimizer_out = std::move(nr.u);
    return out;
}

// --- continuum minimizer ----------------------------------------------------

OptimalProfile::OptimalProfile(const ModelManifold& m, double p, double R,
                               const QuadratureSpec& q)
    : s_(flux_density(m)),
      exponent_(1.0 / (1.0 - p)),
      r0_(m.inner_radius),
      R_(R),
      quad_(q) {
    require_domain(p, R, r0_);
    log_total_ = integrate_positive(
                     [this](double t) { return log_integrand(t); }, r0_, R_,
                     quad_)
                     .log_value;
}

double OptimalProfile::log_integrand(double t) const {
    return exponent_ * s_.log_at(t);
}

double OptimalProfile::operator()(double t) const {
    if (t <= r0_) return 1.0;
    if (t >= R_) return 0.0;
    double log_part =
        integrate_positive([this](double x) { return log_integrand(x); },
                           r0_, t, quad_)
            .log_value;
    double u = 1.0 - std::exp(log_part - log_total_);
    return std::clamp(u, 0.0, 1.0);
}

std::vector<double> OptimalProfile::values(
    const std::vector<double>& ascending_ts) const {
    std::vector<double> out;
    out.reserve(ascending_ts.size());
    double prev = r0_;
    double log_acc = kNegInf;
    for (std::size_t i = 0; i < ascending_ts.size(); ++i) {
        double t = ascending_ts[i];
        if (i > 0 && !(t >= ascending_ts[i - 1]))
            throw PreconditionError("batch evaluation needs ascending points");
        if (t <= r0_) {
            out.push_back(1.0);
            continue;
        }
        double upto = std::min(t, R_);
        if (upto > prev) {
            double seg =
                integrate_positive(
                    [this](double x) { return log_integrand(x); }, prev,
                    upto, quad_)
                    .log_value;
            log_acc = log_add(log_acc, seg);
            prev = upto;
        }
        if (t >= R_) {
            out.push_back(0.0);
            continue;
        }
        out.push_back(std::clamp(1.0 - std::exp(log_acc - log_total_), 0.0,
                                 1.0));
    }
    return out;
}

OptimalProfile optimal_profile(const ModelManifold& m, double p, double R,
                               const QuadratureSpec& q) {
    return OptimalProfile(m, p, R, q);
}

// --- exhaustion limit -------------------------------------------------------

const char* to_string(Trend t) {
    switch (t) {
        case Trend::ToZero:
            return "to-zero";
        case Trend::ToPositive:
            return "to-positive";
        default:
            return "undetermined";
    }
}

CapacityLimit capacity_limit(const ModelManifold& m, double p,
                             const std::vector<double>& R_schedule,
                             const LimitOptions& opts) {
    require_p(p);
    if (R_schedule.size() < 3)
        throw PreconditionError("R_schedule needs at least 3 points");
    for (std::size_t i = 0; i < R_schedule.size(); ++i) {
        if (!(R_schedule[i] > m.inner_radius))
            throw PreconditionError("R_schedule must stay above inner_radius");
        if (i > 0 && !(R_schedule[i] > R_schedule[i - 1]))
            throw PreconditionError("R_schedule must be strictly increasing");
    }

    CapacityLimit out;
    for (double R : R_schedule) {
        double v = flux_capacity(m, p, R, opts.quad).value;
        out.values.push_back(v);
        // Capacity is nonincreasing in R: once below the floor, every later
        // value is too, so the verdict is already certain.
        if (v < opts.floor) {
            out.trend = Trend::ToZero;
            out.limit_estimate = 0.0;
            return out;
        }
    }

    const std::size_t k = out.values.size();
    double v1 = out.values[k - 3], v2 = out.values[k - 2],
           v3 = out.values[k - 1];

    // Settled: the last three points agree to the stabilization tolerance.
    if (std::abs(v2 - v1) < opts.stabilization * v2 &&
        std::abs(v3 - v2) < opts.stabilization * v3) {
        out.trend = Trend::ToPositive;
        out.limit_estimate = v3;
        return out;
    }

    // Strictly decreasing tail: Aitken extrapolation of the limit.
    bool decreasing = true;
    for (std::size_t i = 1; i < k; ++i)
        decreasing = decreasing && out.values[i] < out.values[i - 1];
    if (decreasing) {
        double d1 = v2 - v1, d2 = v3 - v2;
        double rho = d2 / d1;
        if (rho > 0.0 && rho < 1.0) {
            double limit = v3 - d2 * d2 / (d2 - d1);
            double tail = rho / (1.0 - rho) * std::abs(d2);
            if (limit < 0.05 * v3) {
                out.trend = Trend::ToZero;
                out.limit_estimate = std::max(limit, 0.0);
                return out;
            }
            if (tail < 0.05 * limit) {
                out.trend = Trend::ToPositive;
                out.limit_estimate = limit;
                return out;
            }
        }
    }
    out.trend = Trend::Undetermined;
    out.limit_estimate = v3;
    return out;
}

}  // namespace pcap
