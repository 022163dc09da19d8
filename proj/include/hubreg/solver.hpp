#pragma once

#include <cstdint>

#include "hubreg/distributions.hpp"
#include "hubreg/hypothesis.hpp"
#include "hubreg/loss.hpp"

namespace hubreg {

struct SolverOptions {
    int max_iters = 200;
    double rel_tol = 1e-10;       // on per-step empirical-risk decrease
    double ridge_jitter = 1e-10;  // added to the normal-equation diagonal
    bool fallback = true;         // gradient descent when IRLS stalls short of stationarity
};

struct ScheduleParams {
    double epsilon;  // moment order minus one
    double q;        // declared capacity exponent
};

// Basis-expansion design matrix of the dataset rows; validates dimensions
// and domain membership.
Eigen::MatrixXd design_matrix(const HypothesisSpace& space, const Dataset& data);

// Huber ERM over the space by IRLS: start at the (jittered) least-squares
// solution, then repeatedly solve weighted least squares with weights
// huber_weight(residual, sigma). Each step minimizes a quadratic majorizer
// of the empirical risk, so the recorded risk history is nonincreasing; a
// step that fails to decrease the risk (possible only through the jitter
// term) is rejected and treated as converged. Clipping at M happens at
// evaluation time only; the fit itself runs on raw predictions and the
// diagnostics report sup |raw f| and clip counts on a check grid.
Estimator fit_erm(const SpacePtr& space, const Dataset& data, const ScaleParam& sigma,
                  const SolverOptions& opts = {});

// Plain ridge-jittered least squares on the same basis (the sigma -> inf
// limit of fit_erm, and the baseline comparator).
Estimator fit_least_squares(const SpacePtr& space, const Dataset& data,
                            const SolverOptions& opts = {});

double phi_exponent(const ScheduleParams& params);

// sigma = n^{Phi(epsilon, q)} with Phi = 1/((1+eps)(1+q)) for eps <= 1 and
// (1+eps)/(q(1+eps)^2 + eps(eps+3)) above; the two branches agree at eps=1.
ScaleParam adaptive_sigma(std::size_t n, const ScheduleParams& params);

// Psi(n, eps, sigma) = sigma^{-eps} + sigma/n^{1/(q+1)} for eps <= 1, and
// sigma^{-eps} + (sigma^{q + 2 eps/(1+eps)}/n)^{1/(q+1)} for eps > 1; the
// error functional the adaptive schedule minimizes in sigma.
double psi_bound(std::size_t n, double epsilon, const ScaleParam& sigma, double q);

}  // namespace hubreg
