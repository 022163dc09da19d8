#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hubreg/errors.hpp"
#include "hubreg/harness.hpp"

using namespace hubreg;

namespace {

ExperimentConfig small_config(NoiseSpec noise, double het_slope = 0.0) {
    ExperimentConfig cfg;
    cfg.model.truth = [](const Eigen::VectorXd& v) { return 2.0 * std::sin(M_PI * v[0]); };
    cfg.model.het_scale = [het_slope](const Eigen::VectorXd& v) {
        return 1.0 + het_slope * v[0];
    };
    cfg.model.noise = std::move(noise);
    cfg.model.marginal = unit_box(1);
    cfg.model.bound = 3.0;
    cfg.space = make_space(5, 0.35, 100.0, 3.0, 1.0, unit_box(1));
    cfg.n_grid = {100, 200, 400};
    cfg.replicates = 3;
    cfg.sigma_policy.kind = SigmaPolicy::Kind::adaptive;
    cfg.sigma_policy.schedule = {1.0, 1.0};
    cfg.master_seed = 7;
    cfg.eval_points = 20000;
    cfg.workers = 1;
    return cfg;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("log-log slope recovers an exact power law") {
    std::vector<std::pair<double, double>> pts;
    for (double n : {100.0, 400.0, 1600.0, 6400.0}) pts.emplace_back(n, 3.0 / std::sqrt(n));
    const SlopeFit fit = fit_loglog_slope(pts);
    CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(fit.se == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
}

TEST_CASE("log-log slope rejects degenerate inputs") {
    CHECK_THROWS_AS(fit_loglog_slope({{1.0, 1.0}, {2.0, 0.5}}), invalid_input_error);
    CHECK_THROWS_AS(fit_loglog_slope({{1.0, 1.0}, {2.0, -0.5}, {4.0, 0.2}}),
                    invalid_input_error);
    CHECK_THROWS_AS(fit_loglog_slope({{0.0, 1.0}, {2.0, 0.5}, {4.0, 0.2}}),
                    invalid_input_error);
}

TEST_CASE("log-log slope on noisy data stays near the truth") {
    std::vector<std::pair<double, double>> pts;
    std::uint64_t s = 1;
    for (double n = 100.0; n <= 102400.0; n *= 2.0) {
        s = s * 6364136223846793005ull + 1442695040888963407ull;
        const double jitter = 1.0 + 0.05 * (static_cast<double>(s >> 11) / 9007199254740992.0 - 0.5);
        pts.emplace_back(n, 2.0 * std::pow(n, -0.75) * jitter);
    }
    const SlopeFit fit = fit_loglog_slope(pts);
    CHECK(fit.se > 0.0);
    CHECK(std::abs(fit.slope + 0.75) < 3.0 * fit.se + 0.02);
}

TEST_CASE("sorted quantiles follow linear interpolation") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    CHECK(quantile_sorted(v, 0.25) == doctest::Approx(1.75).epsilon(1e-15));
    CHECK(quantile_sorted(v, 0.5) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(quantile_sorted(v, 0.0) == 1.0);
    CHECK(quantile_sorted(v, 1.0) == 4.0);
    CHECK(quantile_sorted({5.0}, 0.5) == 5.0);
    CHECK_THROWS_AS(quantile_sorted({}, 0.5), invalid_input_error);
    CHECK_THROWS_AS(quantile_sorted(v, -0.1), invalid_input_error);
    CHECK_THROWS_AS(quantile_sorted(v, 1.1), invalid_input_error);
}

TEST_CASE("rate experiment rows are deterministic and ordered") {
    const ExperimentConfig cfg = small_config(NoiseSpec::example1(), 2.0);
    const RateReport a = run_rate_experiment(cfg);
    const RateReport b = run_rate_experiment(cfg);
    REQUIRE(a.rows.size() == 9);
    CHECK(a.failed_rows == 0);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].n == b.rows[i].n);
        CHECK(a.rows[i].seed == b.rows[i].seed);
        CHECK(a.rows[i].l2_sq_error == b.rows[i].l2_sq_error);
        CHECK(a.rows[i].excess_risk == b.rows[i].excess_risk);
        if (i > 0) {
            const bool ordered = a.rows[i - 1].n < a.rows[i].n ||
                                 (a.rows[i - 1].n == a.rows[i].n &&
                                  a.rows[i - 1].replicate < a.rows[i].replicate);
            CHECK(ordered);
        }
        CHECK(a.rows[i].risk_monotone);
        CHECK(a.rows[i].converged);
    }
    CHECK(a.slope_defined);
    CHECK(a.grid_means.size() == 3);
    for (const auto& gm : a.grid_means) CHECK(gm.count == 3);
}

TEST_CASE("rate experiment sigma follows the adaptive schedule") {
    const ExperimentConfig cfg = small_config(NoiseSpec::example1());
    const RateReport rep = run_rate_experiment(cfg);
    for (const auto& row : rep.rows) {
        const double expect = adaptive_sigma(row.n, {1.0, 1.0}).value();
        CHECK(row.sigma == doctest::Approx(expect).epsilon(1e-15));
    }
}

TEST_CASE("rate experiment rejects a grid policy") {
    ExperimentConfig cfg = small_config(NoiseSpec::example1());
    cfg.sigma_policy.kind = SigmaPolicy::Kind::grid;
    cfg.sigma_policy.grid = {1.0, 2.0};
    CHECK_THROWS_AS(run_rate_experiment(cfg), invalid_input_error);
}

TEST_CASE("two-point grid leaves the slope undefined") {
    ExperimentConfig cfg = small_config(NoiseSpec::example1());
    cfg.n_grid = {100, 200};
    const RateReport rep = run_rate_experiment(cfg);
    CHECK_FALSE(rep.slope_defined);
    CHECK(rep.grid_means.size() == 2);
}

TEST_CASE("bias demo recovers the population shift at a fixed sigma") {
    // Constant truth, constant-only space: the fitted constant converges to
    // truth + c(sigma), so the mean offset should sit on the oracle curve.
    ExperimentConfig cfg = small_config(NoiseSpec::example1());
    cfg.model.truth = [](const Eigen::VectorXd&) { return 0.5; };
    cfg.space = constant_space(10.0, 3.0, 1.0, unit_box(1));
    cfg.n_grid = {2000, 100000};
    cfg.replicates = 4;
    cfg.sigma_policy.kind = SigmaPolicy::Kind::fixed;
    cfg.sigma_policy.fixed_value = 0.5;
    const BiasReport rep = run_bias_demo(cfg);
    for (const auto& row : rep.rows) CHECK(row.error.empty());

    bool saw_fixed = false;
    for (const auto& agg : rep.aggregates) {
        if (agg.policy != "fixed") continue;
        saw_fixed = true;
        CHECK(agg.sigma == 0.5);
        CHECK(agg.oracle_c == doctest::Approx(-0.174007068815).epsilon(1e-6));
        CHECK(std::abs(agg.mean_offset - agg.oracle_c) < 3.0 * agg.offset_se + 5e-3);
    }
    CHECK(saw_fixed);
    CHECK(rep.fixed_final_mean_l2_sq > 0.0);
    CHECK(rep.adaptive_final_mean_l2_sq > 0.0);
}

TEST_CASE("bias demo requires a homoscedastic model") {
    ExperimentConfig cfg = small_config(NoiseSpec::example1(), 2.0);
    CHECK_THROWS_AS(run_bias_demo(cfg), invalid_input_error);
}

TEST_CASE("baselines share datasets across methods") {
    ExperimentConfig cfg = small_config(NoiseSpec::student_t(2.5, 1.0));
    cfg.comparators = {"least_squares", "lad"};
    cfg.n_grid = {300};
    cfg.replicates = 5;
    const BaselineReport rep = run_baselines(cfg);
    REQUIRE(rep.rows.size() == 15);
    for (const auto& row : rep.rows) CHECK(row.error.empty());
    // Same replicate => same seed for every method.
    for (std::size_t r = 0; r < 5; ++r) {
        std::uint64_t seed = 0;
        bool first = true;
        for (const auto& row : rep.rows) {
            if (row.replicate != r) continue;
            if (first) {
                seed = row.seed;
                first = false;
            } else {
                CHECK(row.seed == seed);
            }
        }
    }
    CHECK(rep.summaries.size() == 3);
    for (const auto& s : rep.summaries) {
        CHECK(s.median_l2_sq >= 0.0);
        CHECK(s.iqr_l2_sq >= 0.0);
        CHECK(s.max_l2_sq >= s.median_l2_sq);
    }
}

TEST_CASE("baselines with no comparators produce an empty report") {
    ExperimentConfig cfg = small_config(NoiseSpec::example1());
    cfg.comparators = {};
    const BaselineReport rep = run_baselines(cfg);
    CHECK(rep.rows.empty());
    CHECK(rep.summaries.empty());
}

TEST_CASE("gaussian noise with a huge fixed sigma makes huber match least squares") {
    ExperimentConfig cfg = small_config(NoiseSpec::gauss_mixture({1.0}, {0.0}, {1.0}));
    cfg.comparators = {"least_squares"};
    cfg.n_grid = {400};
    cfg.replicates = 3;
    cfg.sigma_policy.kind = SigmaPolicy::Kind::fixed;
    cfg.sigma_policy.fixed_value = 500.0;
    const BaselineReport rep = run_baselines(cfg);
    for (std::size_t r = 0; r < 3; ++r) {
        double hub = -1.0, ls = -1.0;
        for (const auto& row : rep.rows) {
            if (row.replicate != r) continue;
            if (row.method == "huber") hub = row.l2_sq_error;
            if (row.method == "least_squares") ls = row.l2_sq_error;
        }
        CHECK(std::abs(hub - ls) < 1e-6);
    }
}

TEST_CASE("bound suite triples respect every precondition") {
    const auto triples = make_bound_suite(20, 99);
    REQUIRE(triples.size() == 20);
    const auto again = make_bound_suite(20, 99);
    for (std::size_t i = 0; i < triples.size(); ++i) {
        const auto& t = triples[i];
        CHECK(t.sigma.exceeds_theory_floor(t.info.M));
        CHECK(std::isfinite(t.info.moment_1pe));
        CHECK(t.epsilon == t.info.epsilon);
        CHECK((t.epsilon == 0.5 || t.epsilon == 1.0 || t.epsilon == 2.0));
        CHECK(t.sigma.value() == again[i].sigma.value());
        CHECK(t.seed == again[i].seed);
        // f stays within the sup-norm cap on a probe grid.
        Eigen::VectorXd x(1);
        for (double xv = 0.0; xv <= 1.0; xv += 0.05) {
            x[0] = xv;
            CHECK(std::abs(t.f(x)) <= t.info.M + 1e-12);
        }
    }
}

TEST_CASE("small bound suite passes every check") {
    const auto triples = make_bound_suite(10, 5);
    const SuiteResult res = run_bound_suite(triples, 20000, 1);
    REQUIRE(res.comparison.size() == 10);
    REQUIRE(res.variance.size() == 10);
    REQUIRE(res.bernstein.size() == 10);
    CHECK(res.triples_passed == 10);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(res.comparison[i].satisfied);
        CHECK(res.variance[i].satisfied);
        CHECK((res.bernstein[i].satisfied || res.bernstein[i].skipped));
    }
}

TEST_CASE("report writers are idempotent and complete") {
    const ExperimentConfig cfg = small_config(NoiseSpec::example1());
    const RateReport rep = run_rate_experiment(cfg);
    const auto dir = std::filesystem::temp_directory_path() / "hubreg_harness_test";
    std::filesystem::remove_all(dir);
    write_rate_report(rep, dir.string());
    const auto csv = dir / "rates.csv";
    const auto json = dir / "rates_summary.json";
    REQUIRE(std::filesystem::exists(csv));
    REQUIRE(std::filesystem::exists(json));
    const std::string csv1 = slurp(csv);
    const std::string json1 = slurp(json);
    write_rate_report(rep, dir.string());
    CHECK(slurp(csv) == csv1);
    CHECK(slurp(json) == json1);

    // Pinned column order.
    CHECK(csv1.rfind("n,replicate,sigma,l2_sq_error,excess_risk,iters,clip_count,seed\n", 0) ==
          0);
    // One line per row plus the header.
    std::size_t lines = 0;
    for (char ch : csv1)
        if (ch == '\n') ++lines;
    CHECK(lines == rep.rows.size() + 1);
    std::filesystem::remove_all(dir);
}
