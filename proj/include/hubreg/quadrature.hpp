#pragma once

#include <functional>
#include <vector>

namespace hubreg {

struct QuadratureOptions {
    double abs_tol = 1e-10;
    int max_depth = 52;
};

// Adaptive Simpson on [a, b] with interval bisection; accepts a subinterval
// when the Richardson error estimate |S2-S1|/15 is within its share of the
// absolute tolerance. Throws numerical_error if an interval still fails at
// max_depth or the integrand is non-finite.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opts = {});

// Same, but the domain is pre-split at the given interior breakpoints (loss
// joints, density kinks), so each piece is smooth and bisection converges at
// the Simpson rate. Breakpoints outside (a, b) are ignored.
double integrate_split(const std::function<double(double)>& f, double a, double b,
                       const std::vector<double>& breakpoints, const QuadratureOptions& opts = {});

}  // namespace hubreg
