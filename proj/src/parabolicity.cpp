#include "pcap/parabolicity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "pcap/errors.hpp"
#include "pcap/regression.hpp"

namespace pcap {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Divergence is certified once the partial integral passes 1e100.
constexpr double kOverflowLog = 230.25850929940457;  // log(1e100)

// Cauchy convergence of partial integrals: successive doublings must move
// the value by less than this, relatively.
constexpr double kCauchyRel = 1e-8;

constexpr int kTailSamples = 65;

// Two fits within this r2 gap count as tied.
constexpr double kTieGap = 1e-6;

// Below this best-fit quality no tail model is trusted.
constexpr double kMinR2 = 0.9;

double log_add(double x, double y) {
    if (x == kNegInf) return y;
    if (y == kNegInf) return x;
    double m = std::max(x, y);
    return m + std::log1p(std::exp(std::min(x, y) - m));
}

std::string fmt(const char* pattern, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, pattern, a, b);
    return buf;
}

// Relative change between consecutive log-scale partial values.
double rel_change(double log_prev, double log_cur) {
    return std::abs(std::expm1(log_prev - log_cur));
}

struct Checkpoints {
    std::vector<double> ts;
    std::vector<double> log_partials;  // running integral up to each t
    bool overflowed = false;
    double overflow_t = 0.0;
};

Checkpoints integrate_with_checkpoints(
    const std::function<double(double)>& log_g, double r0, double T_max,
    const QuadratureSpec& quad) {
    Checkpoints out;
    double log_acc = kNegInf;
    double prev = r0;
    for (double t = 2.0 * r0; prev < T_max; t *= 2.0) {
        double cur = std::min(t, T_max);
        log_acc = log_add(
            log_acc,
            integrate_positive(log_g, prev, cur, quad).log_value);
        out.ts.push_back(cur);
        out.log_partials.push_back(log_acc);
        prev = cur;
        if (log_acc > kOverflowLog) {
            out.overflowed = true;
            out.overflow_t = cur;
            break;  // later segments only grow the integral further
        }
    }
    return out;
}

// Plain Cauchy test on the last two checkpoint-to-checkpoint changes.
bool cauchy_plain(const Checkpoints& cp) {
    std::size_t k = cp.log_partials.size();
    if (k < 3) return false;
    return rel_change(cp.log_partials[k - 2], cp.log_partials[k - 1]) <
               kCauchyRel &&
           rel_change(cp.log_partials[k - 3], cp.log_partials[k - 2]) <
               kCauchyRel;
}

// Cauchy test after completing each partial with the fitted power tail:
// for g ~ c t^s with s < -1, int_T^inf g = g(T) T / (-1-s), so the
// completed values converge even when the raw partials still creep.
bool cauchy_completed(const Checkpoints& cp,
                      const std::function<double(double)>& log_g, double s) {
    if (!(s < -1.0)) return false;
    std::size_t k = cp.log_partials.size();
    if (k < 3) return false;
    double log_factor = -std::log(-1.0 - s);
    std::vector<double> completed(k);
    for (std::size_t i = 0; i < k; ++i) {
        double t = cp.ts[i];
        completed[i] = log_add(cp.log_partials[i],
                               log_g(t) + std::log(t) + log_factor);
    }
    return rel_change(completed[k - 2], completed[k - 1]) < kCauchyRel &&
           rel_change(completed[k - 3], completed[k - 2]) < kCauchyRel;
}

}  // namespace

const char* to_string(Decision d) {
    switch (d) {
        case Decision::Parabolic:
            return "Parabolic";
        case Decision::Hyperbolic:
            return "Hyperbolic";
        default:
            return "Inconclusive";
    }
}

double log_criterion_integrand(const ModelManifold& m, double p, double t) {
    require_p(p);
    return log_criterion_inner(m, t) / (1.0 - p);
}

double criterion_integrand(const ModelManifold& m, double p, double t) {
    return std::exp(log_criterion_integrand(m, p, t));
}

Verdict classify(const ModelManifold& m, double p,
                 const ClassifyOptions& opts) {
    require_p(p);
    validate(m);
    if (!(opts.T_max > 4.0 * m.inner_radius))
        throw PreconditionError("T_max must leave room above inner_radius");
    const double r0 = m.inner_radius;
    const double e = 1.0 / (1.0 - p);
    auto log_g = [&m, e](double t) { return e * log_criterion_inner(m, t); };

    Verdict v;

    // Partial integrals at doubling checkpoints.
    Checkpoints cp =
        integrate_with_checkpoints(log_g, r0, opts.T_max, opts.quad);
    v.log_partial_integral = cp.log_partials.back();
    v.partial_integral = std::exp(v.log_partial_integral);

    // Tail samples: 65 geometric points on [sqrt(T_max), T_max].
    std::vector<double> ts(kTailSamples), lg(kTailSamples), log_ts(kTailSamples);
    const double lo = std::max(std::sqrt(opts.T_max), 2.0 * r0);
    const double ratio = std::log(opts.T_max / lo);
    for (int i = 0; i < kTailSamples; ++i) {
        ts[i] = lo * std::exp(ratio * i / (kTailSamples - 1));
        lg[i] = log_g(ts[i]);
        log_ts[i] = std::log(ts[i]);
    }

    LineFit power = fit_line(log_ts, lg);
    LineFit expo = fit_line(ts, lg);
    v.tail_exponent = power.slope;
    v.tail_ci_low = power.slope - 1.96 * power.stderr_slope;
    v.tail_ci_high = power.slope + 1.96 * power.stderr_slope;

    if (cp.overflowed) {
        v.decision = Decision::Parabolic;
        v.partial_integral = kInf;
        v.evidence_notes.push_back(
            fmt("partial integral exceeded 1e100 by t = %g; divergence "
                "certified",
                cp.overflow_t));
        return v;
    }

    // Flat tail: the integrand neither grows nor decays, so the integral
    // grows linearly. Handled before the model comparison because constant
    // data fits both models perfectly.
    double spread = *std::max_element(lg.begin(), lg.end()) -
                    *std::min_element(lg.begin(), lg.end());
    if (spread <= opts.margin) {
        v.decision = Decision::Parabolic;
        v.evidence_notes.push_back(
            fmt("integrand is flat on the tail window (log spread %.3g); "
                "the integral grows linearly",
                spread));
        return v;
    }

    auto hyperbolic_if_cauchy = [&](const std::string& why) {
        bool plain = cauchy_plain(cp);
        bool completed =
            !plain && cauchy_completed(cp, log_g, power.slope);
        if (plain || completed) {
            v.decision = Decision::Hyperbolic;
            v.evidence_notes.push_back(why);
            v.evidence_notes.push_back(
                plain ? "partial integrals Cauchy-converged at successive "
                        "doublings"
                      : "partial integrals Cauchy-converged after power-law "
                        "tail completion");
        } else {
            v.decision = Decision::Inconclusive;
            v.evidence_notes.push_back(why);
            v.evidence_notes.push_back(
                "but partial integrals have not Cauchy-converged; refusing "
                "to certify convergence");
        }
    };

    double best_r2 = std::max(power.r2, expo.r2);
    if (best_r2 < kMinR2) {
        v.decision = Decision::Inconclusive;
        v.evidence_notes.push_back(
            fmt("no reliable tail model (best fit r2 = %.3g)", best_r2));
        return v;
    }
    if (std::abs(power.r2 - expo.r2) <= kTieGap) {
        v.decision = Decision::Inconclusive;
        v.evidence_notes.push_back(
            fmt("power and exponential tail fits tie (r2 %.6g vs %.6g); "
                "not certifying from an ambiguous fit",
                power.r2, expo.r2));
        return v;
    }

    if (expo.r2 > power.r2) {
        // Exponential regime.
        if (expo.slope > 0.0) {
            v.decision = Decision::Parabolic;
            v.evidence_notes.push_back(
                fmt("integrand grows exponentially (rate %.4g per unit t)",
                    expo.slope));
        } else if (expo.slope < 0.0) {
            hyperbolic_if_cauchy(
                fmt("integrand decays exponentially (rate %.4g per unit t)",
                    expo.slope));
        } else {
            v.decision = Decision::Parabolic;
            v.evidence_notes.push_back(
                "integrand tail is asymptotically constant");
        }
        return v;
    }

    // Power regime: compare the exponent against the divergence threshold
    // -1 with a dead zone of +/- margin.
    double s = power.slope;
    if (s >= -1.0 + opts.margin) {
        v.decision = Decision::Parabolic;
        v.evidence_notes.push_back(
            fmt("power-law tail with exponent %.4g >= -1 + margin; the "
                "integral diverges",
                s));
    } else if (s < -1.0 - opts.margin) {
        hyperbolic_if_cauchy(
            fmt("power-law tail with exponent %.4g < -1 - margin; the "
                "integral converges",
                s));
    } else {
        // Borderline t^{-1}: decide by the logarithmic correction. With
        // g ~ t^{-1} (log t)^beta the integral diverges iff beta >= -1.
        std::vector<double> zs(kTailSamples), loglog(kTailSamples);
        for (int i = 0; i < kTailSamples; ++i) {
            zs[i] = lg[i] + log_ts[i];
            loglog[i] = std::log(log_ts[i]);
        }
        LineFit logfit = fit_line(loglog, zs);
        double beta = logfit.slope;
        if (beta >= -1.0 - opts.margin) {
            v.decision = Decision::Parabolic;
            v.evidence_notes.push_back(
                fmt("borderline exponent %.4g; log-correction refit gives "
                    "beta = %.4g >= -1, a divergent tail",
                    s, beta));
        } else {
            hyperbolic_if_cauchy(
                fmt("borderline exponent %.4g with log-correction beta = "
                    "%.4g < -1, a convergent tail",
                    s, beta));
        }
    }
    return v;
}

SweepResult sweep_p(const ModelManifold& m, const std::vector<double>& p_grid,
                    const ClassifyOptions& opts) {
    if (p_grid.empty()) throw PreconditionError("p grid is empty");
    for (std::size_t i = 0; i < p_grid.size(); ++i) {
        require_p(p_grid[i]);
        if (i > 0 && !(p_grid[i] > p_grid[i - 1]))
            throw PreconditionError("p grid must be strictly increasing");
    }

    SweepResult out;
    out.rows.reserve(p_grid.size());
    for (double p : p_grid) out.rows.push_back({p, classify(m, p, opts)});

    // critical p: defined only when the verdicts are monotone, i.e. a block
    // of Hyperbolic followed by a block of Parabolic.
    bool monotone = true;
    bool seen_parabolic = false;
    std::optional<double> last_h, first_p;
    for (const SweepEntry& row : out.rows) {
        switch (row.verdict.decision) {
            case Decision::Hyperbolic:
                if (seen_parabolic) monotone = false;
                last_h = row.p;
                break;
            case Decision::Parabolic:
                if (!seen_parabolic) first_p = row.p;
                seen_parabolic = true;
                break;
            default:
                monotone = false;
                break;
        }
        if (!monotone) break;
    }
    if (!monotone) {
        out.note = "verdicts are not monotone in p; no critical exponent";
    } else if (!last_h) {
        out.note = "Parabolic throughout the grid; no transition";
    } else if (!first_p) {
        out.note = "Hyperbolic throughout the grid; no transition";
    } else {
        out.critical_p = 0.5 * (*last_h + *first_p);
    }
    return out;
}

CrossCheck cross_check(const ModelManifold& m, double p,
                       const ClassifyOptions& opts,
                       const std::vector<double>& R_schedule) {
    CrossCheck out;
    out.criterion = classify(m, p, opts);
    LimitOptions lo;
    lo.quad = opts.quad;
    out.capacity = capacity_limit(m, p, R_schedule, lo);
    if (out.criterion.decision != Decision::Inconclusive) {
        bool para = out.criterion.decision == Decision::Parabolic;
        out.agrees = (para && out.capacity.trend == Trend::ToZero) ||
                     (!para && out.capacity.trend == Trend::ToPositive);
    }
    return out;
}

}  // namespace pcap
