#include "pcap/regression.hpp"

#include <cmath>

#include "pcap/errors.hpp"

namespace pcap {

LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw PreconditionError("line fit needs two or more matched points");
    const int n = static_cast<int>(xs.size());
    double xm = 0.0, ym = 0.0;
    for (int i = 0; i < n; ++i) {
        xm += xs[i];
        ym += ys[i];
    }
    xm /= n;
    ym /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        double dx = xs[i] - xm, dy = ys[i] - ym;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0))
        throw PreconditionError("line fit needs distinct x values");

    LineFit fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.intercept = ym - fit.slope * xm;
    double ssr = 0.0;
    for (int i = 0; i < n; ++i) {
        double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
        ssr += r * r;
    }
    // Constant data is fit exactly by its own mean; report a perfect fit
    // rather than 0/0.
    fit.r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
    fit.stderr_slope = std::sqrt(ssr / (n > 2 ? n - 2 : 1) / sxx);
    return fit;
}

}  // namespace pcap
