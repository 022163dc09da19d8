#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>

#include "hubreg/distributions.hpp"
#include "hubreg/hypothesis.hpp"
#include "hubreg/loss.hpp"

namespace hubreg {

using RealFunction = std::function<double(const Eigen::VectorXd&)>;

// Moment data every bound evaluation needs: moment_1pe = E|Y|^{1+epsilon}
// (+infinity marker when the noise tail does not support the order) and the
// sup-norm cap M shared by the truth and the hypothesis space.
struct MomentInfo {
    double epsilon;
    double moment_1pe;
    double M;
};

MomentInfo make_moment_info(const RegressionModel& model, double epsilon);

// satisfied <=> lhs <= rhs + 3 * mc_stderr, so Monte Carlo noise on the
// measured side never produces a false violation. skipped marks checks whose
// own precondition failed at the sample (only relaxed_bernstein_check uses it).
struct BoundCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double mc_stderr = 0.0;
    bool satisfied = false;
    bool skipped = false;
    std::string label;
};

// d/dnu of the population Huber risk of the constant predictor nu, by
// adaptive quadrature of -E huber_deriv(eps - nu); increasing in nu.
double risk_deriv_at(double nu, const ScaleParam& sigma, const NoiseSpec& spec);

// Population Huber risk of the constant predictor nu.
double population_location_risk(double nu, const ScaleParam& sigma, const NoiseSpec& spec);

// risk_deriv_at(0, sigma, Example1) in closed form:
//   sigma >= 1/4:  e^{-sigma-1/4} - 1/2 e^{1/2-2 sigma}
//   sigma <  1/4:  2 sigma + e^{-sigma-1/4} - e^{sigma-1/4}
double example1_risk_deriv0_closed(const ScaleParam& sigma);

// The unique minimizer c of nu -> E huber(eps - nu): bisection on
// risk_deriv_at down to an interval of width 1e-12, starting from the
// bracket [-sigma - E|eps|, sigma + E|eps|] (expanded if the endpoint signs
// fail to oppose). For a homoscedastic model with noise scale s the oracle
// is f* + s * oracle_shift(spec, sigma / s) pointwise.
double oracle_shift(const NoiseSpec& spec, const ScaleParam& sigma);

// E|a + b eps|^p, b >= 0; +infinity marker when the tail index does not
// support order p. Polynomial tails are integrated exactly via the same
// power-law change of variables as moment().
double shifted_abs_moment(const NoiseSpec& spec, double a, double b, double p);

// E|Y|^p = E|truth(X) + het_scale(X) eps|^p for a 1-D marginal, by nested
// quadrature (outer in x, inner via shifted_abs_moment).
double response_moment(const RegressionModel& model, double p);

struct QuadratureMode {};
struct MonteCarloMode {
    std::size_t mc_n;
    std::uint64_t seed;
};
using L2Mode = std::variant<QuadratureMode, MonteCarloMode>;

struct L2Result {
    double value = 0.0;
    double mc_stderr = 0.0;  // 0 in quadrature mode
};

// ||f - g||_{2,rho} with rho uniform on the marginal box. Quadrature mode
// requires a 1-D marginal.
L2Result l2_distance(const RealFunction& f, const RealFunction& g, const Box& marginal,
                     const L2Mode& mode);

// | [R(f) - R(f*)] - ||f - f*||^2 | <= c_eps / sigma^eps with
// c_eps = 2^{3+eps} (M+1)^2 E|Y|^{1+eps}; the lhs is a single paired Monte
// Carlo pass. Requires sigma > max(2M, 1) and |f| <= M on the sample.
BoundCheck comparison_gap(const RealFunction& f, const RegressionModel& model,
                          const ScaleParam& sigma, const MomentInfo& info, std::size_t mc_n,
                          std::uint64_t seed);

// E xi^2 <= c1 ||f - f*||^{2(eps-1)_+/(eps+1)} + c2 sigma^{1-eps} with
// xi = huber(Y - f(X)) - huber(Y - f*(X)),
// c1 = 64 (M+1)^2 (E|Y|^{1+eps} + M^2 + 1),
// c2 = 48 M^2 (E|Y|^{1+eps} + M^{1+eps}) + 16 M^2 E|Y|^{1+eps}.
BoundCheck variance_bound_check(const RealFunction& f, const RegressionModel& model,
                                const ScaleParam& sigma, const MomentInfo& info, std::size_t mc_n,
                                std::uint64_t seed);

// E xi^2 <= c1 (E xi)^beta + c1 (c_eps sigma^{-eps})^beta + c2 sigma^{1-eps}
// with beta = (eps-1)_+/(eps+1). Presumes E xi >= 0; a sample mean below
// -3 stderr marks the check skipped.
BoundCheck relaxed_bernstein_check(const RealFunction& f, const RegressionModel& model,
                                   const ScaleParam& sigma, const MomentInfo& info,
                                   std::size_t mc_n, std::uint64_t seed);

// Pr(|Y| >= sigma/2) <= 2^{1+eps} E|Y|^{1+eps} / sigma^{1+eps}.
BoundCheck markov_tail_check(const RegressionModel& model, const ScaleParam& sigma,
                             const MomentInfo& info, std::size_t mc_n, std::uint64_t seed);

// Clipped evaluation of a fitted estimator as a plain function handle.
inline RealFunction as_function(Estimator est) {
    return [est = std::move(est)](const Eigen::VectorXd& x) { return evaluate(est, x); };
}

inline BoundCheck comparison_gap(const Estimator& f, const RegressionModel& model,
                                 const ScaleParam& sigma, const MomentInfo& info, std::size_t mc_n,
                                 std::uint64_t seed) {
    return comparison_gap(as_function(f), model, sigma, info, mc_n, seed);
}
inline BoundCheck variance_bound_check(const Estimator& f, const RegressionModel& model,
                                       const ScaleParam& sigma, const MomentInfo& info,
                                       std::size_t mc_n, std::uint64_t seed) {
    return variance_bound_check(as_function(f), model, sigma, info, mc_n, seed);
}
inline BoundCheck relaxed_bernstein_check(const Estimator& f, const RegressionModel& model,
                                          const ScaleParam& sigma, const MomentInfo& info,
                                          std::size_t mc_n, std::uint64_t seed) {
    return relaxed_bernstein_check(as_function(f), model, sigma, info, mc_n, seed);
}

}  // namespace hubreg
