#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "hubreg/distributions.hpp"
#include "hubreg/loss.hpp"

namespace hubreg {

// Finite-dimensional bounded function class: Gaussian radial bumps
// exp(-|x - c|^2 / h^2) on a uniform grid of centers, plus a constant basis
// function, with coefficients confined to the l2 ball of the given radius.
// The sup-norm cap M is enforced by clipping at evaluation time; clip events
// are counted in fit diagnostics so configurations where clipping matters
// are visible.
class HypothesisSpace {
  public:
    struct Basis {
        bool is_constant;
        Eigen::VectorXd center;
        double inv_h_sq;
    };

    HypothesisSpace(std::vector<Basis> basis, double radius, double bound, double capacity_q,
                    Box domain);

    int size() const { return static_cast<int>(basis_.size()); }
    double radius() const { return radius_; }
    double bound() const { return bound_; }
    double capacity_q() const { return capacity_q_; }
    const Box& domain() const { return domain_; }

    // Raw (unclipped) basis row; out must have size() entries.
    void eval_basis(const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> out) const;
    double eval_raw(const Eigen::VectorXd& coeffs, const Eigen::VectorXd& x) const;

  private:
    std::vector<Basis> basis_;
    double radius_;
    double bound_;
    double capacity_q_;
    Box domain_;
};

using SpacePtr = std::shared_ptr<const HypothesisSpace>;

SpacePtr make_space(int centers_per_axis, double bandwidth, double radius, double bound,
                    double capacity_q, const Box& domain);
// Constant function only: the 1-D coefficient space used by the bias
// demonstrations and the covering sanity tests.
SpacePtr constant_space(double radius, double bound, double capacity_q, const Box& domain);

struct FitDiagnostics {
    int iters = 0;
    double final_risk = 0.0;
    std::vector<double> risk_history;  // empirical risk after init and each accepted step
    double grad_norm = 0.0;
    bool converged = false;
    bool used_fallback = false;
    bool projected = false;           // coefficients pulled back onto the radius ball
    int clip_count = 0;               // check-grid points where |raw f| > M
    double sup_abs_raw = 0.0;         // sup |raw f| over the check grid
    bool exceeded_bound = false;
    bool sigma_below_theory_floor = false;
};

struct Estimator {
    SpacePtr space;
    Eigen::VectorXd coeffs;
    ScaleParam sigma_used;
    FitDiagnostics diagnostics;
};

// clip(sum_j coeffs_j basis_j(x), -M, M); pure, safe to call concurrently.
double evaluate(const Estimator& est, const Eigen::VectorXd& x);
double evaluate_raw(const Estimator& est, const Eigen::VectorXd& x);

// Greedy cover count of the discretized coefficient ball under the sup-norm
// measured on a uniform evaluation grid (eval_points_per_axis per domain
// axis). A sanity-checker for the declared capacity exponent q, intended for
// spaces with very few basis functions; the candidate grid is capped to keep
// the combinatorics desk-scale.
int covering_number_estimate(const HypothesisSpace& space, double eta, int coeff_grid_resolution,
                             int eval_points_per_axis);

}  // namespace hubreg
