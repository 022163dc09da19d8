#include "hubreg/solver.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "hubreg/errors.hpp"

namespace hubreg {
namespace {

double risk_of(const Eigen::VectorXd& residuals, const ScaleParam& sigma) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < residuals.size(); ++i) acc += huber(residuals[i], sigma);
    return acc / static_cast<double>(residuals.size());
}

// grad of (1/n) sum huber(y_i - phi_i . c) w.r.t. c
Eigen::VectorXd risk_gradient(const Eigen::MatrixXd& design, const Eigen::VectorXd& residuals,
                              const ScaleParam& sigma) {
    Eigen::VectorXd psi(residuals.size());
    for (Eigen::Index i = 0; i < residuals.size(); ++i) psi[i] = huber_deriv(residuals[i], sigma);
    return -(design.transpose() * psi) / static_cast<double>(residuals.size());
}

Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                                       double jitter) {
    Eigen::MatrixXd A = gram;
    A.diagonal().array() += jitter;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    Eigen::VectorXd c = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success || !c.allFinite())
        throw numerical_error("solver: singular normal equations (increase ridge_jitter)");
    return c;
}

void check_options(const SolverOptions& opts) {
    if (opts.max_iters < 1) throw invalid_input_error("solver: max_iters must be >= 1");
    if (!(opts.rel_tol > 0.0)) throw invalid_input_error("solver: rel_tol must be > 0");
    if (opts.ridge_jitter < 0.0) throw invalid_input_error("solver: ridge_jitter must be >= 0");
}

void fill_check_grid_diagnostics(const HypothesisSpace& space, const Eigen::VectorXd& coeffs,
                                 FitDiagnostics& diag) {
    const int d = space.domain().dim();
    const int per_axis = d == 1 ? 512 : 64;
    Eigen::VectorXd x(d);
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    const long total = static_cast<long>(std::pow(static_cast<double>(per_axis), d));
    diag.clip_count = 0;
    diag.sup_abs_raw = 0.0;
    for (long r = 0; r < total; ++r) {
        for (int j = 0; j < d; ++j)
            x[j] = space.domain().lo[j] + (space.domain().hi[j] - space.domain().lo[j]) *
                                              idx[static_cast<std::size_t>(j)] / (per_axis - 1.0);
        const double v = std::abs(space.eval_raw(coeffs, x));
        diag.sup_abs_raw = std::max(diag.sup_abs_raw, v);
        if (v > space.bound()) ++diag.clip_count;
        int j = d - 1;
        for (; j >= 0; --j) {
            if (++idx[static_cast<std::size_t>(j)] < per_axis) break;
            idx[static_cast<std::size_t>(j)] = 0;
        }
    }
    diag.exceeded_bound = diag.sup_abs_raw > space.bound();
}

}  // namespace

Eigen::MatrixXd design_matrix(const HypothesisSpace& space, const Dataset& data) {
    const Eigen::Index n = data.xs.rows();
    if (n == 0) throw empty_dataset_error("solver: empty dataset");
    if (data.ys.size() != n) throw invalid_input_error("solver: xs/ys size mismatch");
    if (data.xs.cols() != space.domain().dim())
        throw invalid_input_error("solver: dataset dimension does not match the space domain");
    Eigen::MatrixXd design(n, space.size());
    Eigen::VectorXd row(space.size());
    Eigen::VectorXd x(space.domain().dim());
    for (Eigen::Index i = 0; i < n; ++i) {
        x = data.xs.row(i).transpose();
        if (!space.domain().contains(x))
            throw out_of_domain_error("solver: dataset point outside the space domain");
        space.eval_basis(x, row);
        design.row(i) = row.transpose();
    }
    return design;
}

Estimator fit_least_squares(const SpacePtr& space, const Dataset& data, const SolverOptions& opts) {
    check_options(opts);
    const Eigen::MatrixXd design = design_matrix(*space, data);
    Eigen::VectorXd c = solve_normal_equations(design.transpose() * design,
                                               design.transpose() * data.ys, opts.ridge_jitter);
    const Eigen::VectorXd residuals = data.ys - design * c;
    // Residual-scaled sigma: least squares is exactly Huber with every
    // residual in the quadratic zone.
    const double span = std::max(1.0, residuals.cwiseAbs().maxCoeff());
    Estimator est{space, std::move(c), ScaleParam(2.0 * span), {}};
    est.diagnostics.iters = 0;
    est.diagnostics.final_risk = residuals.squaredNorm() / static_cast<double>(residuals.size());
    est.diagnostics.converged = true;
    fill_check_grid_diagnostics(*space, est.coeffs, est.diagnostics);
    if (est.coeffs.norm() > space->radius()) {
        est.coeffs *= space->radius() / est.coeffs.norm();
        est.diagnostics.projected = true;
    }
    return est;
}

Estimator fit_erm(const SpacePtr& space, const Dataset& data, const ScaleParam& sigma,
                  const SolverOptions& opts) {
    check_options(opts);
    const Eigen::MatrixXd design = design_matrix(*space, data);
    const Eigen::VectorXd& y = data.ys;
    const double n = static_cast<double>(y.size());

    FitDiagnostics diag;
    diag.sigma_below_theory_floor = !sigma.exceeds_theory_floor(space->bound());

    Eigen::VectorXd c = solve_normal_equations(design.transpose() * design, design.transpose() * y,
                                               opts.ridge_jitter);
    Eigen::VectorXd residuals = y - design * c;
    double risk = risk_of(residuals, sigma);
    diag.risk_history.push_back(risk);

    const auto grad_target = [](double r) { return 1e-6 * (1.0 + r); };
    int it = 0;
    for (; it < opts.max_iters; ++it) {
        Eigen::VectorXd w(y.size());
        for (Eigen::Index i = 0; i < y.size(); ++i) w[i] = huber_weight(residuals[i], sigma);
        const Eigen::MatrixXd weighted = w.asDiagonal() * design;
        Eigen::VectorXd c_next = solve_normal_equations(design.transpose() * weighted,
                                                        weighted.transpose() * y, opts.ridge_jitter);
        Eigen::VectorXd res_next = y - design * c_next;
        const double risk_next = risk_of(res_next, sigma);
        if (risk_next > risk) break;  // jitter artifact; the majorizer guarantees descent otherwise
        const double decrease = risk - risk_next;
        c.swap(c_next);
        residuals.swap(res_next);
        risk = risk_next;
        diag.risk_history.push_back(risk);
        if (decrease < opts.rel_tol * std::max(1.0, risk) &&
            risk_gradient(design, residuals, sigma).norm() <= grad_target(risk))
            break;
    }
    diag.iters = it;

    Eigen::VectorXd grad = risk_gradient(design, residuals, sigma);
    if (grad.norm() > grad_target(risk) && opts.fallback) {
        // Backtracking gradient polish for the rare case where IRLS's risk
        // decrease dries up before the gradient does.
        diag.used_fallback = true;
        double step = 1.0 / std::max(1.0, design.squaredNorm() / n);
        for (int k = 0; k < 4 * opts.max_iters && grad.norm() > grad_target(risk); ++k) {
            double t = step;
            bool moved = false;
            while (t > 1e-18) {
                Eigen::VectorXd c_try = c - t * grad;
                Eigen::VectorXd res_try = y - design * c_try;
                const double risk_try = risk_of(res_try, sigma);
                if (risk_try <= risk - 0.5 * t * grad.squaredNorm()) {
                    c.swap(c_try);
                    residuals.swap(res_try);
                    if (risk - risk_try > 0.0) diag.risk_history.push_back(risk_try);
                    risk = risk_try;
                    grad = risk_gradient(design, residuals, sigma);
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if (!moved) break;
        }
    }
    diag.grad_norm = grad.norm();
    diag.converged = diag.grad_norm <= grad_target(risk);
    diag.final_risk = risk;

    Estimator est{space, std::move(c), sigma, std::move(diag)};
    if (est.coeffs.norm() > space->radius()) {
        est.coeffs *= space->radius() / est.coeffs.norm();
        est.diagnostics.projected = true;
        const Eigen::VectorXd res_proj = y - design * est.coeffs;
        est.diagnostics.final_risk = risk_of(res_proj, sigma);
    }
    fill_check_grid_diagnostics(*space, est.coeffs, est.diagnostics);
    return est;
}

double phi_exponent(const ScheduleParams& params) {
    if (!(params.epsilon > 0.0) || !std::isfinite(params.epsilon))
        throw invalid_input_error("schedule: epsilon must be > 0");
    if (!(params.q > 0.0) || !std::isfinite(params.q))
        throw invalid_input_error("schedule: q must be > 0");
    const double e = params.epsilon;
    const double q = params.q;
    if (e <= 1.0) return 1.0 / ((1.0 + e) * (1.0 + q));
    return (1.0 + e) / (q * (1.0 + e) * (1.0 + e) + e * (e + 3.0));
}

ScaleParam adaptive_sigma(std::size_t n, const ScheduleParams& params) {
    if (n < 1) throw invalid_input_error("adaptive_sigma: n must be >= 1");
    return ScaleParam(std::pow(static_cast<double>(n), phi_exponent(params)));
}

double psi_bound(std::size_t n, double epsilon, const ScaleParam& sigma, double q) {
    if (n < 1) throw invalid_input_error("psi_bound: n must be >= 1");
    if (!(epsilon > 0.0)) throw invalid_input_error("psi_bound: epsilon must be > 0");
    if (!(q > 0.0)) throw invalid_input_error("psi_bound: q must be > 0");
    const double s = sigma.value();
    const double nn = static_cast<double>(n);
    if (epsilon <= 1.0) return std::pow(s, -epsilon) + s / std::pow(nn, 1.0 / (q + 1.0));
    return std::pow(s, -epsilon) +
           std::pow(std::pow(s, q + 2.0 * epsilon / (1.0 + epsilon)) / nn, 1.0 / (q + 1.0));
}

}  // namespace hubreg
