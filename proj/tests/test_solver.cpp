#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hubreg/errors.hpp"
#include "hubreg/rng.hpp"
#include "hubreg/solver.hpp"
#include "hubreg/theory.hpp"

using namespace hubreg;

namespace {

RegressionModel sine_model(NoiseSpec noise, double het_slope = 0.0) {
    RegressionModel model;
    model.truth = [](const Eigen::VectorXd& v) { return 2.0 * std::sin(M_PI * v[0]); };
    model.het_scale = [het_slope](const Eigen::VectorXd& v) { return 1.0 + het_slope * v[0]; };
    model.noise = std::move(noise);
    model.marginal = unit_box(1);
    model.bound = 3.0;
    return model;
}

}  // namespace

TEST_CASE("noiseless constant data is fit exactly") {
    RegressionModel model = sine_model(NoiseSpec::example1());
    model.truth = [](const Eigen::VectorXd&) { return 1.75; };
    model.het_scale = [](const Eigen::VectorXd&) { return 0.0; };
    const Dataset data = generate_dataset(model, 200, 1);
    const auto space = constant_space(10.0, 3.0, 1.0, unit_box(1));
    const Estimator est = fit_erm(space, data, ScaleParam(0.5));
    CHECK(est.coeffs[0] == doctest::Approx(1.75).epsilon(1e-8));
    CHECK(est.diagnostics.converged);
}

TEST_CASE("huge sigma reproduces the least-squares fit") {
    const RegressionModel model = sine_model(NoiseSpec::gauss_mixture(
        {0.5, 0.5}, {0.0, 0.0}, {2.5, 0.5}), 2.0);
    const auto space = make_space(5, 0.35, 100.0, 3.0, 1.0, unit_box(1));
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        const Dataset data = generate_dataset(model, 400, seed);
        const Estimator ls = fit_least_squares(space, data);
        // sigma exceeding every LS residual keeps all weights at 1.
        double max_r = 0.0;
        const Eigen::MatrixXd X = design_matrix(*space, data);
        const Eigen::VectorXd r = data.ys - X * ls.coeffs;
        max_r = r.cwiseAbs().maxCoeff();
        const Estimator hub = fit_erm(space, data, ScaleParam(2.0 * max_r + 1.0));
        CHECK((hub.coeffs - ls.coeffs).norm() < 1e-6);
    }
}

TEST_CASE("constant-only fit converges to the population shift") {
    // With f* constant and the space constant-only, the ERM over a large
    // sample estimates truth + c(sigma), c the population risk minimizer.
    RegressionModel model = sine_model(NoiseSpec::example1());
    model.truth = [](const Eigen::VectorXd&) { return 0.5; };
    const Dataset data = generate_dataset(model, 100000, 42);
    const auto space = constant_space(10.0, 3.0, 1.0, unit_box(1));
    const ScaleParam sigma(0.5);
    const Estimator est = fit_erm(space, data, sigma);
    const double c = oracle_shift(NoiseSpec::example1(), sigma);
    // 3 * rough MC standard error for a mean-type estimate at n = 1e5.
    CHECK(std::abs(est.coeffs[0] - 0.5 - c) < 3.0 * std::sqrt(19.0 / 16.0 / 100000.0));
}

TEST_CASE("risk history is nonincreasing and the fit is stationary") {
    const RegressionModel model = sine_model(NoiseSpec::student_t(2.5, 1.0), 2.0);
    const auto space = make_space(5, 0.35, 100.0, 3.0, 1.0, unit_box(1));
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const Dataset data = generate_dataset(model, 300, 1000 + seed);
        const Estimator est = fit_erm(space, data, ScaleParam(1.5));
        const auto& h = est.diagnostics.risk_history;
        REQUIRE(h.size() >= 1);
        for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1] + 1e-12);
        CHECK(est.diagnostics.grad_norm <= 1e-6 * (1.0 + est.diagnostics.final_risk));
        CHECK(est.diagnostics.converged);
    }
}

TEST_CASE("solver rejects malformed inputs") {
    const auto space = constant_space(1.0, 1.0, 1.0, unit_box(1));
    Dataset empty;
    empty.xs.resize(0, 1);
    empty.ys.resize(0);
    CHECK_THROWS_AS(fit_erm(space, empty, ScaleParam(1.0)), empty_dataset_error);

    RegressionModel model = sine_model(NoiseSpec::example1());
    Dataset data = generate_dataset(model, 10, 1);
    data.xs(3, 0) = 2.0;  // outside the unit-box domain
    CHECK_THROWS_AS(fit_erm(space, data, ScaleParam(1.0)), out_of_domain_error);

    Dataset ok = generate_dataset(model, 10, 1);
    SolverOptions opts;
    opts.max_iters = 0;
    CHECK_THROWS_AS(fit_erm(space, ok, ScaleParam(1.0), opts), invalid_input_error);
    opts = {};
    opts.rel_tol = -1.0;
    CHECK_THROWS_AS(fit_erm(space, ok, ScaleParam(1.0), opts), invalid_input_error);
}

TEST_CASE("phi exponent formulas and continuity at epsilon = 1") {
    CHECK(phi_exponent({0.5, 1.0}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(phi_exponent({1.0, 1.0}) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(phi_exponent({3.0, 1.0}) == doctest::Approx(2.0 / 17.0).epsilon(1e-15));
    // (1+eps)/(q(1+eps)^2 + eps(eps+3)) at eps=1 equals 1/(2(1+q)).
    for (double q : {0.5, 1.0, 2.0}) {
        const double lo = phi_exponent({std::nextafter(1.0, 0.0), q});
        const double hi = phi_exponent({std::nextafter(1.0, 2.0), q});
        CHECK(lo == doctest::Approx(1.0 / (2.0 * (1.0 + q))).epsilon(1e-12));
        CHECK(hi == doctest::Approx(1.0 / (2.0 * (1.0 + q))).epsilon(1e-12));
    }
    CHECK_THROWS_AS(phi_exponent({0.0, 1.0}), invalid_input_error);
    CHECK_THROWS_AS(phi_exponent({1.0, 0.0}), invalid_input_error);
}

TEST_CASE("adaptive sigma is n to the phi") {
    CHECK(adaptive_sigma(16, {1.0, 1.0}).value() == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(adaptive_sigma(1, {1.0, 1.0}).value() == doctest::Approx(1.0).epsilon(1e-15));
    const double prev = adaptive_sigma(100, {0.5, 1.0}).value();
    CHECK(adaptive_sigma(1000, {0.5, 1.0}).value() > prev);
    CHECK(adaptive_sigma(10000, {0.5, 1.0}).value() ==
          doctest::Approx(std::pow(10000.0, 1.0 / 3.0)).epsilon(1e-14));
}

TEST_CASE("psi bound matches its two branches and diverges at extremes") {
    CHECK(psi_bound(1, 1.0, ScaleParam(1.0), 1.0) == doctest::Approx(2.0).epsilon(1e-15));
    // eps <= 1 branch: sigma^{-eps} + sigma / n^{1/(q+1)}.
    CHECK(psi_bound(10000, 0.5, ScaleParam(4.0), 1.0) ==
          doctest::Approx(std::pow(4.0, -0.5) + 4.0 / 100.0).epsilon(1e-14));
    // eps > 1 branch: sigma^{-eps} + (sigma^{q + 2 eps/(1+eps)} / n)^{1/(q+1)}.
    CHECK(psi_bound(10000, 2.0, ScaleParam(4.0), 1.0) ==
          doctest::Approx(std::pow(4.0, -2.0) +
                          std::sqrt(std::pow(4.0, 1.0 + 4.0 / 3.0) / 10000.0))
              .epsilon(1e-14));
    CHECK(psi_bound(100, 1.0, ScaleParam(1e8), 1.0) > 1e3);

    // The adaptive schedule sits near the grid minimum of psi.
    const std::size_t n = 100000;
    const ScheduleParams params{1.0, 1.0};
    const double star = psi_bound(n, params.epsilon, adaptive_sigma(n, params), params.q);
    for (double s = 0.5; s < 200.0; s *= 1.07)
        CHECK(star <= psi_bound(n, params.epsilon, ScaleParam(s), params.q) * 1.0 + 1e-12);
}

TEST_CASE("least squares reports the sigma it implies") {
    const RegressionModel model = sine_model(NoiseSpec::example1());
    const Dataset data = generate_dataset(model, 100, 5);
    const auto space = make_space(5, 0.35, 100.0, 3.0, 1.0, unit_box(1));
    const Estimator est = fit_least_squares(space, data);
    const Eigen::MatrixXd X = design_matrix(*space, data);
    const double max_r = (data.ys - X * est.coeffs).cwiseAbs().maxCoeff();
    CHECK(est.sigma_used.value() >= 2.0 * max_r - 1e-12);
    CHECK(est.diagnostics.converged);
}
