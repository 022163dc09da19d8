#include "hubreg/harness.hpp"

#include <json.hpp>

#include <Eigen/Cholesky>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include "hubreg/errors.hpp"
#include "hubreg/loss.hpp"
#include "hubreg/quadrature.hpp"
#include "hubreg/rng.hpp"
#include "hubreg/solver.hpp"

namespace hubreg {
namespace {

using nlohmann::json;

int resolve_workers(int workers, std::size_t count) {
    int w = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
    if (w < 1) w = 1;
    return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(w), count));
}

// Index-slotted work items: results land in preallocated slots, so the merge
// is deterministic regardless of scheduling. Bodies must not throw.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body) {
    const int w = resolve_workers(workers, count);
    if (w <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto drain = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            body(i);
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(w) - 1);
    for (int t = 1; t < w; ++t) threads.emplace_back(drain);
    drain();
    for (auto& th : threads) th.join();
}

double sigma_for(const SigmaPolicy& policy, std::size_t n, const char* op) {
    switch (policy.kind) {
        case SigmaPolicy::Kind::fixed:
            return policy.fixed_value;
        case SigmaPolicy::Kind::adaptive:
            return adaptive_sigma(n, policy.schedule).value();
        case SigmaPolicy::Kind::grid:
            break;
    }
    throw invalid_input_error(std::string(op) + ": requires a fixed or adaptive sigma policy");
}

bool nonincreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[i - 1]) return false;
    return true;
}

RealFunction truth_function(const RegressionModel& model) {
    return [truth = model.truth](const Eigen::VectorXd& x) { return truth(x); };
}

L2Mode l2_mode_for(const RegressionModel& model, std::size_t mc_n, std::uint64_t seed) {
    if (model.marginal.dim() == 1) return QuadratureMode{};
    return MonteCarloMode{mc_n, seed};
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
    MeanSe out;
    if (v.empty()) return out;
    const double n = static_cast<double>(v.size());
    for (double x : v) out.mean += x;
    out.mean /= n;
    if (v.size() < 2) return out;
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / (n - 1.0) / n);
    return out;
}

// Excess Huber risk of the estimator on an independent evaluation sample.
MeanSe excess_risk_estimate(const Estimator& est, const RegressionModel& model,
                            const ScaleParam& sigma, std::size_t eval_points,
                            std::uint64_t seed) {
    const Dataset eval = generate_dataset(model, eval_points, seed);
    std::vector<double> xi(eval_points);
    Eigen::VectorXd x(eval.xs.cols());
    for (std::size_t i = 0; i < eval_points; ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        x = eval.xs.row(idx).transpose();
        const double y = eval.ys[idx];
        xi[i] = huber(y - evaluate(est, x), sigma) - huber(y - model.truth(x), sigma);
    }
    return mean_se(xi);
}

// The decomposition check reuses the adaptive policy's epsilon when it has a
// usable moment, otherwise the largest of {2, 1, 0.5} that does.
std::optional<MomentInfo> decomposition_info(const ExperimentConfig& cfg) {
    if (cfg.model.marginal.dim() != 1) return std::nullopt;
    std::vector<double> candidates;
    if (cfg.sigma_policy.kind == SigmaPolicy::Kind::adaptive)
        candidates.push_back(cfg.sigma_policy.schedule.epsilon);
    candidates.insert(candidates.end(), {2.0, 1.0, 0.5});
    for (double eps : candidates) {
        if (!std::isfinite(moment(cfg.model.noise, 1.0 + eps))) continue;
        MomentInfo info = make_moment_info(cfg.model, eps);
        if (std::isfinite(info.moment_1pe)) return info;
    }
    return std::nullopt;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    const std::string path = (fs::path(dir) / name).string();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw invalid_input_error("cannot write output file '" + path + "'");
    out << content;
    if (!out) throw invalid_input_error("cannot write output file '" + path + "'");
}

json config_json(const std::string& echo) {
    if (echo.empty()) return json::object();
    return json::parse(echo, nullptr, false);  // echo is produced by us; tolerate anything else
}

json check_json(const BoundCheck& c) {
    return json{{"label", c.label},   {"lhs", c.lhs},         {"rhs", c.rhs},
                {"mc_stderr", c.mc_stderr}, {"satisfied", c.satisfied}, {"skipped", c.skipped}};
}

// Least absolute deviations via IRLS with the standard epsilon-floored
// weights 1/max(|r|, 1e-8); the mean-|r| objective is tracked and a
// non-improving step ends the loop.
struct LadResult {
    Eigen::VectorXd coeffs;
    int iters = 0;
};

LadResult fit_lad(const HypothesisSpace& space, const Dataset& data, const SolverOptions& opts) {
    const Eigen::MatrixXd design = design_matrix(space, data);
    const Eigen::VectorXd& y = data.ys;
    const double n = static_cast<double>(y.size());
    auto solve = [&](const Eigen::VectorXd& w) {
        Eigen::MatrixXd gram = design.transpose() * w.asDiagonal() * design;
        gram.diagonal().array() += opts.ridge_jitter;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
        Eigen::VectorXd c = ldlt.solve(design.transpose() * (w.asDiagonal() * y));
        if (ldlt.info() != Eigen::Success || !c.allFinite())
            throw numerical_error("lad: singular weighted normal equations");
        return c;
    };
    Eigen::VectorXd c = solve(Eigen::VectorXd::Ones(y.size()));
    Eigen::VectorXd r = y - design * c;
    double obj = r.cwiseAbs().sum() / n;
    LadResult out{c, 0};
    for (int it = 0; it < opts.max_iters; ++it) {
        Eigen::VectorXd w = r.cwiseAbs().cwiseMax(1e-8).cwiseInverse();
        Eigen::VectorXd c_next = solve(w);
        Eigen::VectorXd r_next = y - design * c_next;
        const double obj_next = r_next.cwiseAbs().sum() / n;
        if (obj_next > obj) break;
        const double decrease = obj - obj_next;
        c.swap(c_next);
        r.swap(r_next);
        obj = obj_next;
        out.iters = it + 1;
        if (decrease < 1e-12 * std::max(1.0, obj)) break;
    }
    if (c.norm() > space.radius()) c *= space.radius() / c.norm();
    out.coeffs = c;
    return out;
}

RealFunction clipped_function(const SpacePtr& space, Eigen::VectorXd coeffs) {
    const double M = space->bound();
    return [space, coeffs = std::move(coeffs), M](const Eigen::VectorXd& x) {
        return std::clamp(space->eval_raw(coeffs, x), -M, M);
    };
}

}  // namespace

SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3)
        throw invalid_input_error("fit_loglog_slope: needs at least 3 points");
    const double k = static_cast<double>(points.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [n, e] : points) {
        if (!(n > 0.0) || !(e > 0.0))
            throw invalid_input_error("fit_loglog_slope: points must be positive");
        mx += std::log(n);
        my += std::log(e);
    }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [n, e] : points) {
        const double dx = std::log(n) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(e) - my);
    }
    if (!(sxx > 0.0)) throw invalid_input_error("fit_loglog_slope: points must have distinct n");
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssr = 0.0;
    for (const auto& [n, e] : points) {
        const double resid = std::log(e) - (fit.intercept + fit.slope * std::log(n));
        ssr += resid * resid;
    }
    fit.se = std::sqrt(std::max(ssr, 0.0) / (k - 2.0) / sxx);
    return fit;
}

RateReport run_rate_experiment(const ExperimentConfig& cfg) {
    if (cfg.sigma_policy.kind == SigmaPolicy::Kind::grid)
        throw invalid_input_error("rate experiment: requires a fixed or adaptive sigma policy");
    const std::size_t total = cfg.n_grid.size() * cfg.replicates;
    const std::optional<MomentInfo> info = decomposition_info(cfg);

    RateReport report;
    report.rows.resize(total);
    report.config_echo = cfg.config_echo;
    report.master_seed = cfg.master_seed;

    parallel_for(total, cfg.workers, [&](std::size_t idx) {
        RateRow& row = report.rows[idx];
        row.n = cfg.n_grid[idx / cfg.replicates];
        row.replicate = idx % cfg.replicates;
        row.seed = derive_seed(cfg.master_seed, idx);
        try {
            const ScaleParam sigma(sigma_for(cfg.sigma_policy, row.n, "rate experiment"));
            row.sigma = sigma.value();
            const Dataset data = generate_dataset(cfg.model, row.n, row.seed);
            const Estimator est = fit_erm(cfg.space, data, sigma, cfg.solver);
            row.iters = est.diagnostics.iters;
            row.clip_count = est.diagnostics.clip_count;
            row.converged = est.diagnostics.converged;
            row.risk_monotone = nonincreasing(est.diagnostics.risk_history);
            const L2Result l2 =
                l2_distance(as_function(est), truth_function(cfg.model), cfg.model.marginal,
                            l2_mode_for(cfg.model, cfg.eval_points, derive_seed(row.seed, 3)));
            row.l2_sq_error = l2.value * l2.value;
            const MeanSe excess = excess_risk_estimate(est, cfg.model, sigma, cfg.eval_points,
                                                       derive_seed(row.seed, 2));
            row.excess_risk = excess.mean;
            row.excess_se = excess.se;
            if (info && sigma.exceeds_theory_floor(info->M)) {
                const double c_eps = std::pow(2.0, 3.0 + info->epsilon) * (info->M + 1.0) *
                                     (info->M + 1.0) * info->moment_1pe;
                row.decomposition_checked = true;
                row.decomposition_ok =
                    std::abs(row.excess_risk - row.l2_sq_error) <=
                    c_eps * std::pow(sigma.value(), -info->epsilon) + 3.0 * row.excess_se;
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    });

    std::string first_error;
    for (const auto& row : report.rows) {
        if (!row.error.empty()) {
            ++report.failed_rows;
            if (first_error.empty()) first_error = row.error;
            continue;
        }
        if (row.decomposition_checked) {
            ++report.decomposition_checked;
            if (row.decomposition_ok) ++report.decomposition_satisfied;
        }
    }
    if (report.failed_rows == total)
        throw numerical_error("rate experiment: all rows failed: " + first_error);

    for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
        GridMean gm;
        gm.n = cfg.n_grid[i];
        for (std::size_t r = 0; r < cfg.replicates; ++r) {
            const RateRow& row = report.rows[i * cfg.replicates + r];
            if (!row.error.empty()) continue;
            gm.mean_l2_sq += row.l2_sq_error;
            ++gm.count;
        }
        if (gm.count == 0) continue;
        gm.mean_l2_sq /= static_cast<double>(gm.count);
        report.grid_means.push_back(gm);
    }

    std::vector<std::pair<double, double>> points;
    for (const auto& gm : report.grid_means)
        if (gm.mean_l2_sq > 0.0)
            points.emplace_back(static_cast<double>(gm.n), gm.mean_l2_sq);
    if (points.size() >= 3) {
        report.slope = fit_loglog_slope(points);
        report.slope_defined = true;
    }
    return report;
}

BiasReport run_bias_demo(const ExperimentConfig& cfg) {
    if (cfg.model.marginal.dim() != 1)
        throw invalid_input_error("bias demo: requires a 1-D marginal");
    Eigen::VectorXd x(1);
    const double lo = cfg.model.marginal.lo[0];
    const double hi = cfg.model.marginal.hi[0];
    x[0] = lo;
    const double s = cfg.model.het_scale(x);
    for (int i = 0; i <= 100; ++i) {
        x[0] = lo + (hi - lo) * i / 100.0;
        if (std::abs(cfg.model.het_scale(x) - s) > 1e-12 * std::max(1.0, std::abs(s)))
            throw invalid_input_error(
                "bias demo: requires a homoscedastic model (constant het_scale)");
    }

    std::vector<double> fixed_sigmas;
    ScheduleParams schedule{1.0, 1.0};
    switch (cfg.sigma_policy.kind) {
        case SigmaPolicy::Kind::fixed:
            fixed_sigmas = {cfg.sigma_policy.fixed_value};
            break;
        case SigmaPolicy::Kind::grid:
            fixed_sigmas = cfg.sigma_policy.grid;
            break;
        case SigmaPolicy::Kind::adaptive:
            fixed_sigmas = {0.01};  // the misconfigured-fixed reference point
            schedule = cfg.sigma_policy.schedule;
            break;
    }

    const std::size_t n_final = cfg.n_grid.back();
    std::vector<double> adaptive_sigmas(cfg.n_grid.size());
    for (std::size_t j = 0; j < cfg.n_grid.size(); ++j)
        adaptive_sigmas[j] = adaptive_sigma(cfg.n_grid[j], schedule).value();

    std::map<double, double> oracle_cache;
    auto oracle_for = [&](double sigma) {
        auto it = oracle_cache.find(sigma);
        if (it != oracle_cache.end()) return it->second;
        const double c =
            s > 0.0 ? s * oracle_shift(cfg.model.noise, ScaleParam(sigma / s)) : 0.0;
        oracle_cache.emplace(sigma, c);
        return c;
    };
    for (double sg : fixed_sigmas) oracle_for(sg);
    for (double sg : adaptive_sigmas) oracle_for(sg);

    const std::size_t fixed_rows = fixed_sigmas.size() * cfg.replicates;
    const std::size_t total = fixed_rows + cfg.n_grid.size() * cfg.replicates;

    BiasReport report;
    report.rows.resize(total);
    report.config_echo = cfg.config_echo;

    parallel_for(total, cfg.workers, [&](std::size_t idx) {
        BiasRow& row = report.rows[idx];
        row.replicate = idx % cfg.replicates;
        if (idx < fixed_rows) {
            row.policy = "fixed";
            row.n = n_final;
            row.sigma = fixed_sigmas[idx / cfg.replicates];
        } else {
            row.policy = "adaptive";
            const std::size_t j = (idx - fixed_rows) / cfg.replicates;
            row.n = cfg.n_grid[j];
            row.sigma = adaptive_sigmas[j];
        }
        row.seed = derive_seed(cfg.master_seed, idx);
        row.oracle_c = oracle_for(row.sigma);
        try {
            const Dataset data = generate_dataset(cfg.model, row.n, row.seed);
            const Estimator est = fit_erm(cfg.space, data, ScaleParam(row.sigma), cfg.solver);
            Eigen::VectorXd xb(1);
            auto diff = [&](double t) mutable {
                xb[0] = t;
                return evaluate(est, xb) - cfg.model.truth(xb);
            };
            row.offset = integrate(diff, lo, hi, {1e-10, 52}) / (hi - lo);
            const L2Result l2 = l2_distance(as_function(est), truth_function(cfg.model),
                                            cfg.model.marginal, QuadratureMode{});
            row.l2_sq_error = l2.value * l2.value;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    });

    auto aggregate = [&](std::size_t begin, std::size_t count, const std::string& policy,
                         std::size_t n, double sigma) {
        BiasAggregate agg;
        agg.policy = policy;
        agg.n = n;
        agg.sigma = sigma;
        agg.oracle_c = oracle_for(sigma);
        std::vector<double> offsets, l2s;
        for (std::size_t i = begin; i < begin + count; ++i) {
            if (!report.rows[i].error.empty()) continue;
            offsets.push_back(report.rows[i].offset);
            l2s.push_back(report.rows[i].l2_sq_error);
        }
        const MeanSe off = mean_se(offsets);
        agg.mean_offset = off.mean;
        agg.offset_se = off.se;
        agg.mean_l2_sq = mean_se(l2s).mean;
        report.aggregates.push_back(agg);
    };
    for (std::size_t i = 0; i < fixed_sigmas.size(); ++i)
        aggregate(i * cfg.replicates, cfg.replicates, "fixed", n_final, fixed_sigmas[i]);
    for (std::size_t j = 0; j < cfg.n_grid.size(); ++j)
        aggregate(fixed_rows + j * cfg.replicates, cfg.replicates, "adaptive", cfg.n_grid[j],
                  adaptive_sigmas[j]);

    const double smallest_fixed =
        *std::min_element(fixed_sigmas.begin(), fixed_sigmas.end());
    for (const auto& agg : report.aggregates) {
        if (agg.policy == "fixed" && agg.sigma == smallest_fixed)
            report.fixed_final_mean_l2_sq = agg.mean_l2_sq;
        if (agg.policy == "adaptive" && agg.n == n_final)
            report.adaptive_final_mean_l2_sq = agg.mean_l2_sq;
    }
    return report;
}

BaselineReport run_baselines(const ExperimentConfig& cfg) {
    BaselineReport report;
    report.config_echo = cfg.config_echo;
    if (cfg.comparators.empty()) return report;

    std::vector<std::string> methods{"huber"};
    for (const auto& m : cfg.comparators)
        if (std::find(methods.begin(), methods.end(), m) == methods.end()) methods.push_back(m);

    const std::size_t n = cfg.n_grid.back();
    const double huber_sigma = sigma_for(cfg.sigma_policy, n, "baselines");
    const std::size_t total = methods.size() * cfg.replicates;
    report.rows.resize(total);

    parallel_for(total, cfg.workers, [&](std::size_t idx) {
        BaselineRow& row = report.rows[idx];
        row.method = methods[idx / cfg.replicates];
        row.replicate = idx % cfg.replicates;
        row.n = n;
        // replicate seed only: every method sees the identical dataset
        row.seed = derive_seed(cfg.master_seed, row.replicate);
        try {
            const Dataset data = generate_dataset(cfg.model, n, row.seed);
            RealFunction fitted;
            if (row.method == "huber") {
                row.sigma = huber_sigma;
                const Estimator est = fit_erm(cfg.space, data, ScaleParam(huber_sigma), cfg.solver);
                row.iters = est.diagnostics.iters;
                fitted = as_function(est);
            } else if (row.method == "least_squares") {
                const Estimator est = fit_least_squares(cfg.space, data, cfg.solver);
                fitted = as_function(est);
            } else {
                const LadResult lad = fit_lad(*cfg.space, data, cfg.solver);
                row.iters = lad.iters;
                fitted = clipped_function(cfg.space, lad.coeffs);
            }
            const L2Result l2 =
                l2_distance(fitted, truth_function(cfg.model), cfg.model.marginal,
                            l2_mode_for(cfg.model, cfg.eval_points, derive_seed(row.seed, 3)));
            row.l2_sq_error = l2.value * l2.value;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    });

    for (std::size_t m = 0; m < methods.size(); ++m) {
        std::vector<double> errs;
        for (std::size_t r = 0; r < cfg.replicates; ++r) {
            const BaselineRow& row = report.rows[m * cfg.replicates + r];
            if (row.error.empty()) errs.push_back(row.l2_sq_error);
        }
        if (errs.empty()) continue;
        std::sort(errs.begin(), errs.end());
        MethodSummary sum;
        sum.method = methods[m];
        sum.n = n;
        sum.median_l2_sq = quantile_sorted(errs, 0.5);
        sum.iqr_l2_sq = quantile_sorted(errs, 0.75) - quantile_sorted(errs, 0.25);
        sum.max_l2_sq = errs.back();
        report.summaries.push_back(sum);
    }
    return report;
}

std::vector<SuiteTriple> make_bound_suite(std::size_t count, std::uint64_t seed) {
    if (count < 1) throw invalid_input_error("bound suite: count must be >= 1");
    const Box ub = unit_box(1);
    const double M = 3.0;
    auto sine = [](const Eigen::VectorXd& x) { return 2.0 * std::sin(M_PI * x[0]); };
    auto affine = [](const Eigen::VectorXd& x) { return 1.0 + 2.0 * x[0]; };
    auto half = [](const Eigen::VectorXd&) { return 0.5; };
    auto unit = [](const Eigen::VectorXd&) { return 1.0; };

    struct PoolEntry {
        RegressionModel model;
        std::string name;
        std::vector<double> eps_list;
    };
    std::vector<PoolEntry> pool;
    pool.push_back({{sine, affine,
                     NoiseSpec::gauss_mixture({0.5, 0.5}, {0.0, 0.0}, {2.5, 0.5}), ub, M},
                    "toy_gauss_mixture",
                    {0.5, 1.0, 2.0}});
    pool.push_back({{sine, affine, NoiseSpec::example1(), ub, M}, "toy_example1", {0.5, 1.0, 2.0}});
    pool.push_back(
        {{sine, affine, NoiseSpec::student_t(4.0, 1.0), ub, M}, "toy_student_t4", {0.5, 1.0, 2.0}});
    pool.push_back(
        {{sine, affine, NoiseSpec::symmetric_pareto(3.0, 0.5), ub, M}, "toy_pareto3", {0.5, 1.0}});
    pool.push_back(
        {{half, unit, NoiseSpec::example1(), ub, M}, "const_example1", {0.5, 1.0, 2.0}});

    struct Combo {
        std::size_t model_idx;
        double epsilon;
        MomentInfo info;
    };
    std::vector<Combo> combos;
    for (std::size_t m = 0; m < pool.size(); ++m) {
        validate_model(pool[m].model);
        for (double eps : pool[m].eps_list)
            combos.push_back({m, eps, make_moment_info(pool[m].model, eps)});
    }

    const SpacePtr space = make_space(5, 0.35, 2.5, M, 1.0, ub);
    std::vector<SuiteTriple> triples;
    triples.reserve(count);
    for (std::size_t t = 0; t < count; ++t) {
        const Combo& combo = combos[t % combos.size()];
        Engine eng = make_engine(derive_seed(seed, 2 * t));
        Eigen::VectorXd g(space->size());
        for (int i = 0; i < space->size(); ++i) g[i] = standard_normal(eng);
        const Eigen::VectorXd coeffs = g / g.norm() * (space->radius() * uniform01(eng));
        const double sigma = std::exp(uniform(eng, std::log(6.3), std::log(40.0)));
        triples.push_back({pool[combo.model_idx].model, pool[combo.model_idx].name, combo.info,
                           ScaleParam(sigma), clipped_function(space, coeffs), combo.epsilon,
                           derive_seed(seed, 2 * t + 1)});
    }
    return triples;
}

SuiteResult run_bound_suite(const std::vector<SuiteTriple>& triples, std::size_t mc_n,
                            int workers) {
    SuiteResult result;
    const std::size_t count = triples.size();
    result.comparison.resize(count);
    result.variance.resize(count);
    result.bernstein.resize(count);
    parallel_for(count, workers, [&](std::size_t i) {
        const SuiteTriple& t = triples[i];
        auto guarded = [&](const char* label, auto&& call) {
            try {
                return call();
            } catch (const std::exception& e) {
                BoundCheck failed;
                failed.lhs = std::numeric_limits<double>::quiet_NaN();
                failed.satisfied = false;
                failed.label = std::string(label) + " (error: " + e.what() + ")";
                return failed;
            }
        };
        result.comparison[i] = guarded("comparison_gap", [&] {
            return comparison_gap(t.f, t.model, t.sigma, t.info, mc_n, t.seed);
        });
        result.variance[i] = guarded("variance_bound", [&] {
            return variance_bound_check(t.f, t.model, t.sigma, t.info, mc_n, t.seed);
        });
        result.bernstein[i] = guarded("relaxed_bernstein", [&] {
            return relaxed_bernstein_check(t.f, t.model, t.sigma, t.info, mc_n, t.seed);
        });
    });
    for (std::size_t i = 0; i < count; ++i)
        if (result.comparison[i].satisfied && result.variance[i].satisfied &&
            (result.bernstein[i].satisfied || result.bernstein[i].skipped))
            ++result.triples_passed;
    return result;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw invalid_input_error("quantile: empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw invalid_input_error("quantile: q must be in [0, 1]");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto i = static_cast<std::size_t>(h);
    if (i + 1 >= sorted.size()) return sorted.back();
    return sorted[i] + (h - static_cast<double>(i)) * (sorted[i + 1] - sorted[i]);
}

void write_rate_report(const RateReport& report, const std::string& dir) {
    std::string csv = "n,replicate,sigma,l2_sq_error,excess_risk,iters,clip_count,seed\n";
    bool all_monotone = true;
    bool all_converged = true;
    std::vector<std::string> errors;
    for (const auto& row : report.rows) {
        if (!row.error.empty()) {
            errors.push_back("n=" + std::to_string(row.n) +
                             " replicate=" + std::to_string(row.replicate) + ": " + row.error);
            continue;
        }
        all_monotone = all_monotone && row.risk_monotone;
        all_converged = all_converged && row.converged;
        csv += std::to_string(row.n) + "," + std::to_string(row.replicate) + "," +
               fmt(row.sigma) + "," + fmt(row.l2_sq_error) + "," + fmt(row.excess_risk) + "," +
               std::to_string(row.iters) + "," + std::to_string(row.clip_count) + "," +
               std::to_string(row.seed) + "\n";
    }

    json summary;
    summary["master_seed"] = report.master_seed;
    summary["slope"] = {{"defined", report.slope_defined},
                        {"value", report.slope.slope},
                        {"stderr", report.slope.se},
                        {"intercept", report.slope.intercept}};
    json means = json::array();
    for (const auto& gm : report.grid_means)
        means.push_back({{"n", gm.n}, {"mean_l2_sq", gm.mean_l2_sq}, {"count", gm.count}});
    summary["grid_means"] = means;
    summary["failed_rows"] = report.failed_rows;
    summary["errors"] = errors;
    summary["all_risk_monotone"] = all_monotone;
    summary["all_converged"] = all_converged;
    summary["decomposition"] = {{"checked", report.decomposition_checked},
                                {"satisfied", report.decomposition_satisfied}};
    summary["config"] = config_json(report.config_echo);

    write_file(dir, "rates.csv", csv);
    write_file(dir, "rates_summary.json", summary.dump(2) + "\n");
}

void write_bias_report(const BiasReport& report, const std::string& dir) {
    std::string csv = "policy,n,replicate,sigma,offset,oracle_c,l2_sq_error,seed\n";
    std::vector<std::string> errors;
    for (const auto& row : report.rows) {
        if (!row.error.empty()) {
            errors.push_back(row.policy + " n=" + std::to_string(row.n) +
                             " replicate=" + std::to_string(row.replicate) + ": " + row.error);
            continue;
        }
        csv += row.policy + "," + std::to_string(row.n) + "," + std::to_string(row.replicate) +
               "," + fmt(row.sigma) + "," + fmt(row.offset) + "," + fmt(row.oracle_c) + "," +
               fmt(row.l2_sq_error) + "," + std::to_string(row.seed) + "\n";
    }

    json summary;
    json aggs = json::array();
    for (const auto& agg : report.aggregates)
        aggs.push_back({{"policy", agg.policy},
                        {"n", agg.n},
                        {"sigma", agg.sigma},
                        {"mean_offset", agg.mean_offset},
                        {"offset_stderr", agg.offset_se},
                        {"oracle_c", agg.oracle_c},
                        {"mean_l2_sq", agg.mean_l2_sq}});
    summary["aggregates"] = aggs;
    summary["headline"] = {
        {"fixed_final_mean_l2_sq", report.fixed_final_mean_l2_sq},
        {"adaptive_final_mean_l2_sq", report.adaptive_final_mean_l2_sq},
        {"ratio", report.adaptive_final_mean_l2_sq > 0.0
                      ? report.fixed_final_mean_l2_sq / report.adaptive_final_mean_l2_sq
                      : 0.0}};
    summary["errors"] = errors;
    summary["config"] = config_json(report.config_echo);

    write_file(dir, "bias.csv", csv);
    write_file(dir, "bias_summary.json", summary.dump(2) + "\n");
}

void write_baseline_report(const BaselineReport& report, const std::string& dir) {
    std::string csv = "method,n,replicate,sigma,l2_sq_error,iters,seed\n";
    std::vector<std::string> errors;
    for (const auto& row : report.rows) {
        if (!row.error.empty()) {
            errors.push_back(row.method + " replicate=" + std::to_string(row.replicate) + ": " +
                             row.error);
            continue;
        }
        csv += row.method + "," + std::to_string(row.n) + "," + std::to_string(row.replicate) +
               "," + fmt(row.sigma) + "," + fmt(row.l2_sq_error) + "," +
               std::to_string(row.iters) + "," + std::to_string(row.seed) + "\n";
    }
    json summary;
    json sums = json::array();
    for (const auto& s : report.summaries)
        sums.push_back({{"method", s.method},
                        {"n", s.n},
                        {"median_l2_sq", s.median_l2_sq},
                        {"iqr_l2_sq", s.iqr_l2_sq},
                        {"max_l2_sq", s.max_l2_sq}});
    summary["summaries"] = sums;
    summary["errors"] = errors;
    summary["config"] = config_json(report.config_echo);

    write_file(dir, "baselines.csv", csv);
    write_file(dir, "baselines_summary.json", summary.dump(2) + "\n");
}

void write_suite_report(const SuiteResult& result, const std::vector<SuiteTriple>& triples,
                        const std::string& dir) {
    std::string csv = "triple,model,epsilon,sigma,check,lhs,rhs,mc_stderr,satisfied,skipped\n";
    auto add_row = [&](std::size_t i, const BoundCheck& c) {
        csv += std::to_string(i) + "," + triples[i].model_name + "," + fmt(triples[i].epsilon) +
               "," + fmt(triples[i].sigma.value()) + "," + c.label + "," + fmt(c.lhs) + "," +
               fmt(c.rhs) + "," + fmt(c.mc_stderr) + "," + (c.satisfied ? "1" : "0") + "," +
               (c.skipped ? "1" : "0") + "\n";
    };
    std::size_t comp_ok = 0, var_ok = 0, bern_ok = 0, bern_skipped = 0;
    for (std::size_t i = 0; i < triples.size(); ++i) {
        add_row(i, result.comparison[i]);
        add_row(i, result.variance[i]);
        add_row(i, result.bernstein[i]);
        comp_ok += result.comparison[i].satisfied ? 1 : 0;
        var_ok += result.variance[i].satisfied ? 1 : 0;
        bern_ok += result.bernstein[i].satisfied ? 1 : 0;
        bern_skipped += result.bernstein[i].skipped ? 1 : 0;
    }
    json summary;
    summary["triples"] = triples.size();
    summary["passed"] = result.triples_passed;
    summary["tally"] =
        std::to_string(result.triples_passed) + "/" + std::to_string(triples.size()) + " satisfied";
    summary["checks"] = {
        {"comparison_gap", {{"satisfied", comp_ok}, {"total", triples.size()}}},
        {"variance_bound", {{"satisfied", var_ok}, {"total", triples.size()}}},
        {"relaxed_bernstein",
         {{"satisfied", bern_ok}, {"skipped", bern_skipped}, {"total", triples.size()}}}};
    json rows = json::array();
    for (std::size_t i = 0; i < triples.size(); ++i)
        rows.push_back({{"triple", i},
                        {"model", triples[i].model_name},
                        {"epsilon", triples[i].epsilon},
                        {"sigma", triples[i].sigma.value()},
                        {"comparison", check_json(result.comparison[i])},
                        {"variance", check_json(result.variance[i])},
                        {"bernstein", check_json(result.bernstein[i])}});
    summary["rows"] = rows;

    write_file(dir, "bounds.csv", csv);
    write_file(dir, "bounds_summary.json", summary.dump(2) + "\n");
}

}  // namespace hubreg
