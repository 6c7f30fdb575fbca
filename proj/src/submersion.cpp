#include "pcap/submersion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>

#include "pcap/capacity.hpp"
#include "pcap/errors.hpp"
#include "pcap/quadrature.hpp"
#include "pcap/regression.hpp"

namespace pcap {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMargin = 0.05;  // dead zone for tail-growth exponents
constexpr double kMinR2 = 0.9;
constexpr int kTailSamples = 65;
constexpr int kSupSamples = 257;

std::string fmt(const char* pattern, ...) {
    char buf[256];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof buf, pattern, args);
    va_end(args);
    return buf;
}

}  // namespace

void validate(const SubmersionSpec& s) {
    if (s.base_dim < 1) throw PreconditionError("base_dim must be at least 1");
    if (!(s.inner_radius > 0.0))
        throw PreconditionError("inner_radius must be positive");
    if (!s.base_profile) throw PreconditionError("sigma is missing");
    if (!s.fiber_volume_fn)
        throw PreconditionError("fiber_volume_fn is missing");
    if (s.claimed_bound && !(*s.claimed_bound > 0.0))
        throw PreconditionError("claimed_bound must be positive");
    check_positive_on_grid(s.base_profile, s.inner_radius, "sigma");
    check_positive_on_grid(s.fiber_volume_fn, s.inner_radius,
                           "fiber_volume_fn");
}

ModelManifold base_manifold(const SubmersionSpec& s) {
    ModelManifold m;
    m.base_dim = s.base_dim;
    m.base_profile = s.base_profile;
    m.warp = make_const(1.0);
    m.fiber_dim = 0;
    m.fiber_volume = 1.0;
    m.inner_radius = s.inner_radius;
    return m;
}

BoundCheck check_uniform_bound(const SubmersionSpec& s, double T) {
    validate(s);
    const double r0 = s.inner_radius;
    if (!(T > r0))
        throw PreconditionError("T must exceed inner_radius");

    BoundCheck out;

    // Supremum scan on a dense geometric grid covering [r0, T].
    double log_sup = kNegInf;
    const double span = std::log(T / r0);
    for (int i = 0; i < kSupSamples; ++i) {
        double t = r0 * std::exp(span * i / (kSupSamples - 1));
        if (i == kSupSamples - 1) t = T;
        double lv = eval_log(s.fiber_volume_fn, t);
        if (lv > log_sup) {
            log_sup = lv;
            out.argmax_t = t;
        }
    }
    out.sup_estimate = std::exp(log_sup);

    // Tail-growth fit on [sqrt(T), T], mirroring the divergence classifier.
    std::vector<double> ts(kTailSamples), lv(kTailSamples),
        log_ts(kTailSamples);
    const double lo = std::max(std::sqrt(T), 2.0 * r0);
    const double ratio = std::log(T / lo);
    for (int i = 0; i < kTailSamples; ++i) {
        ts[i] = lo * std::exp(ratio * i / (kTailSamples - 1));
        lv[i] = eval_log(s.fiber_volume_fn, ts[i]);
        log_ts[i] = std::log(ts[i]);
    }
    double spread = *std::max_element(lv.begin(), lv.end()) -
                    *std::min_element(lv.begin(), lv.end());

    bool nonincreasing = true;
    for (int i = 0; i + 1 < kTailSamples; ++i)
        if (lv[i + 1] > lv[i] + 1e-9) {
            nonincreasing = false;
            break;
        }

    if (spread <= kMargin) {
        out.bounded = true;
        out.notes.push_back(
            fmt("fiber volume is flat on the tail window (log spread %.3g)",
                spread));
    } else if (nonincreasing) {
        // Monotone tails certify the bound directly from the scan; no model
        // fit is needed (and a super-exponential collapse fits neither).
        out.bounded = true;
        out.notes.push_back(
            "fiber volume is non-increasing on the tail window");
    } else {
        LineFit power = fit_line(log_ts, lv);
        LineFit expo = fit_line(ts, lv);
        double best_r2 = std::max(power.r2, expo.r2);
        if (best_r2 < kMinR2) {
            out.bounded = false;
            out.notes.push_back(
                fmt("tail behaviour unresolved (best fit r2 = %.3g); cannot "
                    "certify a uniform bound",
                    best_r2));
        } else if (expo.r2 > power.r2) {
            out.bounded = expo.slope < 0.0;
            out.notes.push_back(
                fmt("fiber volume %s exponentially (rate %.4g per unit t)",
                    out.bounded ? "decays" : "grows", expo.slope));
        } else if (power.slope >= kMargin) {
            out.bounded = false;
            out.notes.push_back(
                fmt("fiber volume grows like t^%.4g; unbounded",
                    power.slope));
        } else if (power.slope <= -kMargin) {
            out.bounded = true;
            out.notes.push_back(
                fmt("fiber volume decays like t^%.4g", power.slope));
        } else {
            out.bounded = false;
            out.notes.push_back(
                fmt("tail exponent %.4g sits inside the +/-%.2g margin; "
                    "cannot certify a uniform bound",
                    power.slope, kMargin));
        }
    }

    if (s.claimed_bound) {
        if (out.sup_estimate > *s.claimed_bound)
            out.notes.push_back(
                fmt("observed sup %.6g exceeds the claimed bound %.6g",
                    out.sup_estimate, *s.claimed_bound));
        else
            out.notes.push_back(
                fmt("claimed bound %.6g holds on the sampled range",
                    *s.claimed_bound));
    }
    return out;
}

Verdict transfer_verdict(const SubmersionSpec& s, const Verdict& base_verdict,
                         double p, double T) {
    require_p(p);
    BoundCheck bc = check_uniform_bound(s, T);

    Verdict out = base_verdict;  // keep the base tail diagnostics
    out.evidence_notes.clear();
    if (bc.bounded && base_verdict.decision == Decision::Parabolic) {
        out.decision = Decision::Parabolic;
        out.evidence_notes.push_back(
            fmt("fiber volumes uniformly bounded (sup about %.6g at t = "
                "%.6g); parabolicity transfers from the parabolic base",
                bc.sup_estimate, bc.argmax_t));
    } else {
        out.decision = Decision::Inconclusive;
        if (!bc.bounded)
            out.evidence_notes.push_back(
                "fiber volumes not certified bounded; the transfer "
                "hypothesis fails");
        if (base_verdict.decision != Decision::Parabolic)
            out.evidence_notes.push_back(
                fmt("base verdict is %s; this route only moves parabolicity "
                    "from the base and never certifies the converse",
                    to_string(base_verdict.decision)));
    }
    for (const std::string& n : bc.notes) out.evidence_notes.push_back(n);
    return out;
}

namespace {

double log_energy_impl(const SubmersionSpec& s, const CutoffFamily& family,
                       double p, long j, const QuadratureSpec& q) {
    require_p(p);
    validate(s);
    if (j < 1) throw PreconditionError("j must be at least 1");
    if (static_cast<double>(j) < s.inner_radius)
        throw PreconditionError("j must not fall inside the inner radius");
    const double a = static_cast<double>(j);
    const double R = family.radius(j);
    if (!(R > a))
        throw PreconditionError("outer radius R(j) must exceed j");

    FluxDensity base(base_manifold(s));
    auto log_v = [&s](double t) { return eval_log(s.fiber_volume_fn, t); };

    if (family.kind == CutoffKind::LogCutoff) {
        // u(t) = log(R/t)/log(R/j), so |u'(t)| = 1/(t log(R/j)).
        const double log_scale = std::log(std::log(R / a));
        auto integrand = [&](double t) {
            return p * (-std::log(t) - log_scale) + log_v(t) + base.log_at(t);
        };
        return integrate_positive(integrand, a, R, q).log_value;
    }

    // Capacity-optimal profile of the base between j and R(j):
    // |u'(t)| = S(t)^{1/(1-p)} / int_j^R S^{1/(1-p)}.
    const double e = 1.0 / (1.0 - p);
    auto log_density = [&](double t) { return e * base.log_at(t); };
    const double log_i = integrate_positive(log_density, a, R, q).log_value;
    auto integrand = [&](double t) {
        return p * (e * base.log_at(t) - log_i) + log_v(t) + base.log_at(t);
    };
    return integrate_positive(integrand, a, R, q).log_value;
}

}  // namespace

double log_pulled_back_energy(const SubmersionSpec& s,
                              const CutoffFamily& family, double p, long j,
                              const QuadratureSpec& q) {
    return log_energy_impl(s, family, p, j, q);
}

double pulled_back_energy(const SubmersionSpec& s, const CutoffFamily& family,
                          double p, long j, const QuadratureSpec& q) {
    return std::exp(log_energy_impl(s, family, p, j, q));
}

DecayCheck verify_decay(const SubmersionSpec& s, double p,
                        const std::vector<long>& j_schedule,
                        const CutoffFamily& family,
                        const ClassifyOptions& opts) {
    require_p(p);
    validate(s);
    if (j_schedule.size() < 3)
        throw PreconditionError("j schedule needs at least 3 points");
    for (std::size_t i = 0; i < j_schedule.size(); ++i) {
        if (j_schedule[i] < 2)
            throw PreconditionError("j schedule entries must be at least 2");
        if (i > 0 && j_schedule[i] <= j_schedule[i - 1])
            throw PreconditionError("j schedule must be strictly increasing");
    }

    Verdict base = classify(base_manifold(s), p, opts);
    if (base.decision != Decision::Parabolic)
        throw PreconditionError(
            "base must classify Parabolic before cutoff-energy decay is the "
            "statement to verify");
    BoundCheck bc = check_uniform_bound(s, opts.T_max);
    if (!bc.bounded)
        throw PreconditionError(
            "fiber volumes must be certified uniformly bounded before "
            "cutoff-energy decay is the statement to verify");

    DecayCheck out;
    const std::size_t n = j_schedule.size();
    std::vector<double> log_e(n);
    out.energies.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        log_e[i] = log_energy_impl(s, family, p, j_schedule[i], opts.quad);
        out.energies[i] = std::exp(log_e[i]);
    }

    // The sequence must be decreasing from some point through the end, with
    // at least two decreasing steps.
    std::size_t tail_start = n - 1;
    while (tail_start > 0 && log_e[tail_start - 1] > log_e[tail_start])
        --tail_start;
    if (n - tail_start < 3 || tail_start > (n - 1) / 2) {
        out.decays = false;
        out.notes.push_back(
            "energies do not eventually decrease along the schedule");
        return out;
    }
    if (tail_start > 0)
        out.notes.push_back(
            fmt("energies decrease from schedule index %zu on", tail_start));

    // Certified decay: either the tail already collapsed, or a decaying
    // trend fits the (log-log-j, log-j, j) family well.
    if (log_e.back() < log_e.front() + std::log(1e-6)) {
        out.decays = true;
        out.notes.push_back(
            "tail energy dropped below 1e-6 of the first energy");
        return out;
    }

    std::vector<double> xs(n - tail_start), ys(n - tail_start);
    for (std::size_t i = tail_start; i < n; ++i)
        ys[i - tail_start] = log_e[i];
    struct Model {
        const char* name;
        double (*x_of_j)(double);
    };
    const Model models[] = {
        {"log-power", [](double j) { return std::log(std::log(j)); }},
        {"power", [](double j) { return std::log(j); }},
        {"exponential", [](double j) { return j; }},
    };
    double best_r2 = -1.0, best_slope = 0.0;
    const char* best_name = "";
    for (const Model& mo : models) {
        for (std::size_t i = tail_start; i < n; ++i)
            xs[i - tail_start] =
                mo.x_of_j(static_cast<double>(j_schedule[i]));
        LineFit fit = fit_line(xs, ys);
        if (fit.r2 > best_r2) {
            best_r2 = fit.r2;
            best_slope = fit.slope;
            best_name = mo.name;
        }
    }
    if (best_r2 > kMinR2 && best_slope < -0.01) {
        out.decays = true;
        out.notes.push_back(fmt("%s fit certifies decay (slope %.4g, r2 "
                                "%.4g)",
                                best_name, best_slope, best_r2));
    } else {
        out.decays = false;
        out.notes.push_back(
            fmt("tail decay not certified (best %s fit slope %.4g, r2 "
                "%.4g)",
                best_name, best_slope, best_r2));
    }
    return out;
}

}  // namespace pcap
