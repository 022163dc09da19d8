#include "hubreg/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hubreg/errors.hpp"

namespace hubreg {
namespace {

double eval_checked(const std::function<double(double)>& f, double x) {
    double v = f(x);
    if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg << "quadrature: integrand not finite at x=" << x;
        throw numerical_error(msg.str());
    }
    return v;
}

double simpson(double fa, double fm, double fb, double h) {
    return h / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double b, double fa, double fm,
             double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = eval_checked(f, lm);
    const double frm = eval_checked(f, rm);
    const double left = simpson(fa, flm, fm, m - a);
    const double right = simpson(fm, frm, fb, b - m);
    const double err = (left + right - whole) / 15.0;
    // Floor the tolerance near machine precision so roundoff in a smooth
    // integrand cannot force subdivision all the way to max_depth.
    const double floor_tol =
        std::numeric_limits<double>::epsilon() * (std::abs(left) + std::abs(right));
    if (std::abs(err) <= std::max(tol, floor_tol)) return left + right + err;
    if (depth <= 0) {
        std::ostringstream msg;
        msg << "quadrature: no convergence on [" << a << ", " << b << "], error estimate "
            << std::abs(err) << " exceeds tolerance " << tol;
        throw numerical_error(msg.str());
    }
    // tol/sqrt(2) per child (not tol/2): grants deep branches relatively more
    // budget so integrable endpoint singularities terminate; the aggregate
    // error stays within a small constant of tol.
    const double child_tol = tol / 1.4142135623730951;
    return adapt(f, a, m, fa, flm, fm, left, child_tol, depth - 1) +
           adapt(f, m, b, fm, frm, fb, right, child_tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opts) {
    if (!std::isfinite(a) || !std::isfinite(b) || a > b)
        throw invalid_input_error("integrate: need finite a <= b");
    if (opts.abs_tol <= 0.0) throw invalid_input_error("integrate: abs_tol must be > 0");
    if (a == b) return 0.0;
    const double fa = eval_checked(f, a);
    const double fb = eval_checked(f, b);
    const double fm = eval_checked(f, 0.5 * (a + b));
    const double whole = simpson(fa, fm, fb, b - a);
    return adapt(f, a, b, fa, fm, fb, whole, opts.abs_tol, opts.max_depth);
}

double integrate_split(const std::function<double(double)>& f, double a, double b,
                       const std::vector<double>& breakpoints, const QuadratureOptions& opts) {
    if (!std::isfinite(a) || !std::isfinite(b) || a > b)
        throw invalid_input_error("integrate_split: need finite a <= b");
    std::vector<double> pts{a};
    for (double p : breakpoints)
        if (p > a && p < b) pts.push_back(p);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    QuadratureOptions piece = opts;
    piece.abs_tol = opts.abs_tol / static_cast<double>(pts.size() - 1);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        // Open each piece by one ulp at interior breakpoints: densities may
        // jump there, and an endpoint sample from the wrong branch stalls the
        // error estimate. The skipped slivers have measure ~ulp.
        double lo = pts[i];
        double hi = pts[i + 1];
        if (i > 0) lo = std::nextafter(lo, hi);
        if (i + 2 < pts.size()) hi = std::nextafter(hi, lo);
        if (lo >= hi) continue;
        total += integrate(f, lo, hi, piece);
    }
    return total;
}

}  // namespace hubreg
