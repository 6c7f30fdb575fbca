#include "pcap/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pcap/errors.hpp"

namespace pcap {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMaxDepth = 64;

// A panel whose entire crude value sits this many log-units below
// rel_tol * (crude total) is accepted without refinement: its value still
// enters the sum, so only its (much smaller) error is at stake, and e^{-16}
// leaves room for thousands of such panels plus an order-of-magnitude
// misestimate in the crude total.
constexpr double kNeglectMargin = 16.0;

double log_sum_exp2(double x, double y) {
    if (x == kNegInf) return y;
    if (y == kNegInf) return x;
    double m = std::max(x, y);
    return m + std::log(std::exp(x - m) + std::exp(y - m));
}

double log_sum_exp3(double x, double y, double z) {
    return log_sum_exp2(log_sum_exp2(x, y), z);
}

// Deterministic left-to-right accumulation of log values.
double log_sum_exp(const std::vector<double>& xs) {
    double m = kNegInf;
    for (double x : xs) m = std::max(m, x);
    if (m == kNegInf || !std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

// Initial geometric panel edges: power-like integrands vary on multiplicative
// scales, so seed the subdivision with octaves of [a, b].
std::vector<double> initial_edges(double a, double b) {
    std::vector<double> edges{a};
    if (a > 0.0 && b / a > 4.0) {
        for (double x = 2.0 * a; x < b / 1.5; x *= 2.0) edges.push_back(x);
    }
    edges.push_back(b);
    return edges;
}

// --- log-domain adaptive Simpson ------------------------------------------

struct LogWorker {
    const std::function<double(double)>& log_f;
    double tol;
    long budget;
    double neglect = kNegInf;  // log threshold for unrefined acceptance
    long used = 0;
    std::vector<double> panel_logs;
    std::vector<double> err_logs;  // log of each panel's absolute error

    // log of the Simpson approximation on [x0, x2] given log f at the ends
    // and midpoint.
    static double simpson(double x0, double x2, double l0, double lm,
                          double l2) {
        constexpr double kLog4 = 1.3862943611198906;
        double body = log_sum_exp3(l0, lm + kLog4, l2);
        if (body == kNegInf) return kNegInf;
        return std::log((x2 - x0) / 6.0) + body;
    }

    void panel(double x0, double x2, double l0, double lm, double l2,
               double s_whole, int depth) {
        if (++used > budget)
            throw QuadratureError(
                "adaptive integration exceeded its subdivision budget; "
                "partial result unusable");
        if (s_whole <= neglect) {
            panel_logs.push_back(s_whole);
            err_logs.push_back(s_whole);  // count the whole value as error
            return;
        }
        double xm = 0.5 * (x0 + x2);
        double xl = 0.5 * (x0 + xm), xr = 0.5 * (xm + x2);
        double ll = log_f(xl), lr = log_f(xr);
        double s_left = simpson(x0, xm, l0, ll, lm);
        double s_right = simpson(xm, x2, lm, lr, l2);
        double s_halves = log_sum_exp2(s_left, s_right);

        if (s_whole == kNegInf && s_halves == kNegInf) {
            panel_logs.push_back(kNegInf);
            err_logs.push_back(kNegInf);
            return;
        }
        double diff = std::expm1(s_whole - s_halves);  // (S1 - S2) / S2
        if (std::abs(diff) <= 15.0 * tol || depth >= kMaxDepth) {
            if (depth >= kMaxDepth && !(std::abs(diff) <= 15.0 * tol))
                throw QuadratureError(
                    "adaptive integration failed to converge at maximum "
                    "depth; partial result unusable");
            // Richardson: I ~ S2 + (S2 - S1)/15.
            double corr = -diff / 15.0;
            double logv =
                corr > -1.0 ? s_halves + std::log1p(corr) : s_halves;
            panel_logs.push_back(logv);
            err_logs.push_back(s_halves +
                               std::log(std::abs(diff) / 15.0 + 1e-300));
            return;
        }
        panel(x0, xm, l0, ll, lm, s_left, depth + 1);
        panel(xm, x2, lm, lr, l2, s_right, depth + 1);
    }
};

}  // namespace

QuadratureResult integrate_log(const std::function<double(double)>& log_f,
                               double a, double b, const QuadratureSpec& q) {
    if (!(a < b)) throw PreconditionError("integration bounds must satisfy a < b");
    if (!(q.rel_tol > 0.0)) throw PreconditionError("rel_tol must be positive");

    std::vector<double> edges = initial_edges(a, b);
    const std::size_t k = edges.size() - 1;
    std::vector<double> lf(edges.size()), lmid(k), crude(k);
    for (std::size_t i = 0; i < edges.size(); ++i) lf[i] = log_f(edges[i]);
    for (std::size_t i = 0; i < k; ++i) {
        lmid[i] = log_f(0.5 * (edges[i] + edges[i + 1]));
        crude[i] = LogWorker::simpson(edges[i], edges[i + 1], lf[i], lmid[i],
                                      lf[i + 1]);
    }

    LogWorker w{log_f, q.rel_tol, q.max_subdivisions};
    double crude_total = log_sum_exp(crude);
    w.neglect = crude_total + std::log(q.rel_tol) - kNeglectMargin;
    for (std::size_t i = 0; i < k; ++i)
        w.panel(edges[i], edges[i + 1], lf[i], lmid[i], lf[i + 1], crude[i],
                0);

    QuadratureResult r;
    r.log_value = log_sum_exp(w.panel_logs);
    r.value = std::exp(r.log_value);
    double err_log = log_sum_exp(w.err_logs);
    r.rel_error = r.log_value == kNegInf
                      ? 0.0
                      : std::exp(err_log - r.log_value);
    r.panels = static_cast<long>(w.panel_logs.size());
    return r;
}

// --- plain adaptive Simpson -------------------------------------------------

namespace {

struct LinWorker {
    const std::function<double(double)>& f;
    double tol;
    long budget;
    double neglect = 0.0;  // absolute threshold for unrefined acceptance
    long used = 0;
    double sum = 0.0;
    double err = 0.0;
    long panels = 0;

    static double simpson(double x0, double x2, double f0, double fm,
                          double f2) {
        return (x2 - x0) / 6.0 * (f0 + 4.0 * fm + f2);
    }

    void panel(double x0, double x2, double f0, double fm, double f2,
               double s_whole, int depth) {
        if (++used > budget)
            throw QuadratureError(
                "adaptive integration exceeded its subdivision budget; "
                "partial result unusable");
        if (std::abs(s_whole) <= neglect) {
            sum += s_whole;
            err += std::abs(s_whole);
            ++panels;
            return;
        }
        double xm = 0.5 * (x0 + x2);
        double xl = 0.5 * (x0 + xm), xr = 0.5 * (xm + x2);
        double fl = f(xl), fr = f(xr);
        double s_left = simpson(x0, xm, f0, fl, fm);
        double s_right = simpson(xm, x2, fm, fr, f2);
        double s_halves = s_left + s_right;
        double diff = s_whole - s_halves;
        // Relative acceptance with an absolute floor so zero integrals stop.
        double scale = std::abs(s_halves) + 1e-300;
        if (std::abs(diff) <= 15.0 * tol * scale || depth >= kMaxDepth) {
            if (depth >= kMaxDepth && !(std::abs(diff) <= 15.0 * tol * scale))
                throw QuadratureError(
                    "adaptive integration failed to converge at maximum "
                    "depth; partial result unusable");
            sum += s_halves - diff / 15.0;
            err += std::abs(diff) / 15.0;
            ++panels;
            return;
        }
        panel(x0, xm, f0, fl, fm, s_left, depth + 1);
        panel(xm, x2, fm, fr, f2, s_right, depth + 1);
    }
};

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, const QuadratureSpec& q) {
    if (!(a < b)) throw PreconditionError("integration bounds must satisfy a < b");
    if (!(q.rel_tol > 0.0)) throw PreconditionError("rel_tol must be positive");

    std::vector<double> edges = initial_edges(a, b);
    const std::size_t k = edges.size() - 1;
    std::vector<double> fv(edges.size()), fmid(k), crude(k);
    for (std::size_t i = 0; i < edges.size(); ++i) fv[i] = f(edges[i]);
    double crude_total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        fmid[i] = f(0.5 * (edges[i] + edges[i + 1]));
        crude[i] = LinWorker::simpson(edges[i], edges[i + 1], fv[i], fmid[i],
                                      fv[i + 1]);
        crude_total += crude[i];
    }

    LinWorker w{f, q.rel_tol, q.max_subdivisions};
    w.neglect =
        std::abs(crude_total) * q.rel_tol * std::exp(-kNeglectMargin);
    for (std::size_t i = 0; i < k; ++i)
        w.panel(edges[i], edges[i + 1], fv[i], fmid[i], fv[i + 1], crude[i],
                0);

    QuadratureResult r;
    r.value = w.sum;
    r.log_value = w.sum > 0.0 ? std::log(w.sum) : kNegInf;
    r.rel_error = w.sum != 0.0 ? w.err / std::abs(w.sum) : 0.0;
    r.panels = w.panels;
    return r;
}

QuadratureResult integrate_positive(const std::function<double(double)>& log_f,
                                    double a, double b,
                                    const QuadratureSpec& q) {
    if (q.log_domain) return integrate_log(log_f, a, b, q);
    return integrate([&log_f](double t) { return std::exp(log_f(t)); }, a, b,
                     q);
}

}  // namespace pcap
