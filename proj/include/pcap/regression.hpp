#pragma once

#include <vector>

namespace pcap {

// Ordinary least-squares line fit, used for tail-asymptotic diagnostics.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;           // 1 for an exact fit (including constant data)
    double stderr_slope = 0.0; // standard error of the slope estimate
    int n = 0;
};

LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace pcap
