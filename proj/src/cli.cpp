#include "hubreg/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "hubreg/errors.hpp"
#include "hubreg/harness.hpp"
#include "hubreg/solver.hpp"
#include "hubreg/theory.hpp"

namespace hubreg {
namespace {

using nlohmann::json;

struct Command {
    std::string subcommand;
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    // oracle-only:
    std::string noise = "example1";
    std::vector<double> sigmas;
};

ExperimentConfig load(const Command& cmd) {
    if (cmd.config_path.empty())
        throw invalid_input_error("the '" + cmd.subcommand + "' command requires --config");
    std::string text = load_config_text(cmd.config_path);
    for (const auto& assignment : cmd.overrides) text = apply_override(text, assignment);
    return build_experiment(text, cmd.seed, cmd.out_dir);
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

double policy_sigma(const ExperimentConfig& cfg, std::size_t n, const char* op) {
    switch (cfg.sigma_policy.kind) {
        case SigmaPolicy::Kind::fixed:
            return cfg.sigma_policy.fixed_value;
        case SigmaPolicy::Kind::adaptive:
            return adaptive_sigma(n, cfg.sigma_policy.schedule).value();
        case SigmaPolicy::Kind::grid:
            break;
    }
    throw invalid_input_error(std::string(op) + ": requires a fixed or adaptive sigma policy");
}

NoiseSpec noise_preset(const std::string& name) {
    if (name == "example1") return NoiseSpec::example1();
    if (name == "gauss_mixture")
        return NoiseSpec::gauss_mixture({0.5, 0.5}, {0.0, 0.0}, {2.5, 0.5});
    if (name == "student_t") return NoiseSpec::student_t(4.0, 1.0);
    if (name == "symmetric_pareto") return NoiseSpec::symmetric_pareto(3.0, 0.5);
    throw invalid_input_error(
        "unknown noise preset '" + name +
        "' (choices: example1, gauss_mixture, student_t, symmetric_pareto)");
}

int cmd_oracle(const Command& cmd) {
    const NoiseSpec spec = noise_preset(cmd.noise);
    std::vector<double> sigmas = cmd.sigmas;
    if (sigmas.empty()) sigmas = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
    std::printf("noise: %s\n", cmd.noise.c_str());
    std::printf("%10s  %18s  %18s  %14s\n", "sigma", "oracle_shift", "risk_deriv_at_0",
                "deriv_at_shift");
    for (double s : sigmas) {
        const ScaleParam sigma(s);
        const double c = oracle_shift(spec, sigma);
        std::printf("%10.6g  %18.12g  %18.12g  %14.6g\n", s, c, risk_deriv_at(0.0, sigma, spec),
                    risk_deriv_at(c, sigma, spec));
    }
    return 0;
}

int cmd_fit(const Command& cmd) {
    const ExperimentConfig cfg = load(cmd);
    const ScaleParam sigma(policy_sigma(cfg, cfg.fit_n, "fit"));
    const Dataset data = generate_dataset(cfg.model, cfg.fit_n, cfg.master_seed);
    const Estimator est = fit_erm(cfg.space, data, sigma, cfg.solver);
    const L2Result l2 = l2_distance(
        as_function(est),
        [truth = cfg.model.truth](const Eigen::VectorXd& x) { return truth(x); },
        cfg.model.marginal,
        cfg.model.marginal.dim() == 1
            ? L2Mode{QuadratureMode{}}
            : L2Mode{MonteCarloMode{cfg.eval_points, derive_seed(cfg.master_seed, 3)}});

    json out;
    out["n"] = cfg.fit_n;
    out["sigma"] = est.sigma_used.value();
    out["seed"] = cfg.master_seed;
    out["coeffs"] = std::vector<double>(est.coeffs.data(), est.coeffs.data() + est.coeffs.size());
    out["l2_error"] = l2.value;
    out["l2_sq_error"] = l2.value * l2.value;
    const FitDiagnostics& d = est.diagnostics;
    out["diagnostics"] = {{"iters", d.iters},
                          {"final_risk", d.final_risk},
                          {"grad_norm", d.grad_norm},
                          {"converged", d.converged},
                          {"used_fallback", d.used_fallback},
                          {"projected", d.projected},
                          {"clip_count", d.clip_count},
                          {"sup_abs_raw", d.sup_abs_raw},
                          {"exceeded_bound", d.exceeded_bound},
                          {"sigma_below_theory_floor", d.sigma_below_theory_floor},
                          {"risk_history", d.risk_history}};
    out["config"] = json::parse(cfg.config_echo);
    write_file(cfg.output_path, "fit.json", out.dump(2) + "\n");

    std::printf("fit: n=%zu sigma=%.6g iters=%d converged=%s\n", cfg.fit_n,
                est.sigma_used.value(), d.iters, d.converged ? "yes" : "no");
    std::printf("  empirical risk %.12g, gradient norm %.3g\n", d.final_risk, d.grad_norm);
    std::printf("  L2 error vs truth %.6g (squared %.6g)\n", l2.value, l2.value * l2.value);
    std::printf("  clipped at %d diagnostic grid points; wrote %s/fit.json\n", d.clip_count,
                cfg.output_path.c_str());
    return 0;
}

int cmd_rates(const Command& cmd) {
    const ExperimentConfig cfg = load(cmd);
    const RateReport report = run_rate_experiment(cfg);
    write_rate_report(report, cfg.output_path);
    if (report.slope_defined)
        std::printf("rates: slope %.4f (stderr %.4f) over %zu grid points\n", report.slope.slope,
                    report.slope.se, report.grid_means.size());
    else
        std::printf("rates: slope undefined (needs >= 3 grid means)\n");
    for (const auto& gm : report.grid_means)
        std::printf("  n=%zu  mean_l2_sq=%.6g  (%zu replicates)\n", gm.n, gm.mean_l2_sq,
                    gm.count);
    std::printf("  decomposition checks: %zu/%zu satisfied; failed rows: %zu\n",
                report.decomposition_satisfied, report.decomposition_checked,
                report.failed_rows);
    std::printf("  wrote %s/rates.csv and rates_summary.json\n", cfg.output_path.c_str());
    if (report.decomposition_satisfied < report.decomposition_checked) return 3;
    if (report.failed_rows > 0) return 2;
    return 0;
}

int cmd_bias_demo(const Command& cmd) {
    const ExperimentConfig cfg = load(cmd);
    const BiasReport report = run_bias_demo(cfg);
    write_bias_report(report, cfg.output_path);
    std::size_t failed = 0;
    for (const auto& row : report.rows)
        if (!row.error.empty()) ++failed;
    std::printf("bias demo: %zu aggregates over %zu rows\n", report.aggregates.size(),
                report.rows.size());
    for (const auto& agg : report.aggregates)
        std::printf("  %-8s n=%-7zu sigma=%-9.4g mean_offset=%+.5f (se %.5f)  oracle_c=%+.5f\n",
                    agg.policy.c_str(), agg.n, agg.sigma, agg.mean_offset, agg.offset_se,
                    agg.oracle_c);
    std::printf("  final mean L2^2: fixed %.6g vs adaptive %.6g\n",
                report.fixed_final_mean_l2_sq, report.adaptive_final_mean_l2_sq);
    std::printf("  wrote %s/bias.csv and bias_summary.json\n", cfg.output_path.c_str());
    return failed > 0 ? 2 : 0;
}

int cmd_verify_bounds(const Command& cmd) {
    const ExperimentConfig cfg = load(cmd);
    const std::vector<SuiteTriple> triples = make_bound_suite(cfg.suite_triples, cfg.master_seed);
    const SuiteResult result = run_bound_suite(triples, cfg.suite_mc_n, cfg.workers);
    write_suite_report(result, triples, cfg.output_path);
    std::printf("%zu/%zu satisfied\n", result.triples_passed, triples.size());
    std::printf("  wrote %s/bounds.csv and bounds_summary.json\n", cfg.output_path.c_str());
    return result.triples_passed == triples.size() ? 0 : 3;
}

int cmd_baselines(const Command& cmd) {
    const ExperimentConfig cfg = load(cmd);
    const BaselineReport report = run_baselines(cfg);
    write_baseline_report(report, cfg.output_path);
    std::size_t failed = 0;
    for (const auto& row : report.rows)
        if (!row.error.empty()) ++failed;
    if (report.summaries.empty())
        std::printf("baselines: no comparators configured; wrote empty report\n");
    for (const auto& s : report.summaries)
        std::printf("  %-14s n=%-7zu median_l2_sq=%.6g  iqr=%.6g  max=%.6g\n", s.method.c_str(),
                    s.n, s.median_l2_sq, s.iqr_l2_sq, s.max_l2_sq);
    std::printf("  wrote %s/baselines.csv and baselines_summary.json\n", cfg.output_path.c_str());
    return failed > 0 ? 2 : 0;
}

int dispatch(const Command& cmd) {
    if (cmd.subcommand == "oracle") return cmd_oracle(cmd);
    if (cmd.subcommand == "fit") return cmd_fit(cmd);
    if (cmd.subcommand == "rates") return cmd_rates(cmd);
    if (cmd.subcommand == "bias-demo") return cmd_bias_demo(cmd);
    if (cmd.subcommand == "verify-bounds") return cmd_verify_bounds(cmd);
    if (cmd.subcommand == "baselines") return cmd_baselines(cmd);
    throw invalid_input_error("unknown subcommand '" + cmd.subcommand + "'");
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Huber-loss regression experiments and bound checks"};
    app.require_subcommand(1);

    Command cmd;
    std::uint64_t seed_value = 0;
    std::string out_value;
    app.add_option("--config", cmd.config_path, "experiment configuration file (JSON)");
    auto* seed_opt = app.add_option("--seed", seed_value, "override master_seed");
    app.add_option("--set", cmd.overrides,
                   "override a config key, dotted.path=value (repeatable)");
    auto* out_opt = app.add_option("--out", out_value, "override the output directory");

    const char* names[] = {"fit", "oracle", "rates", "bias-demo", "verify-bounds", "baselines"};
    const char* descs[] = {"run one ERM fit and print diagnostics",
                           "print the population bias oracle over a sigma grid",
                           "run the convergence-rate experiment",
                           "contrast fixed-sigma bias against the adaptive schedule",
                           "run the randomized bound-check suite",
                           "compare Huber against least squares / LAD"};
    CLI::App* oracle_sub = nullptr;
    for (std::size_t i = 0; i < 6; ++i) {
        CLI::App* sub = app.add_subcommand(names[i], descs[i]);
        sub->fallthrough();
        if (std::string(names[i]) == "oracle") oracle_sub = sub;
    }
    oracle_sub->add_option("--noise", cmd.noise,
                           "noise preset: example1, gauss_mixture, student_t, symmetric_pareto");
    oracle_sub->add_option("--sigma", cmd.sigmas, "sigma values (repeatable; default grid)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    cmd.subcommand = app.get_subcommands().front()->get_name();
    if (seed_opt->count() > 0) cmd.seed = seed_value;
    if (out_opt->count() > 0) cmd.out_dir = out_value;

    try {
        return dispatch(cmd);
    } catch (const invalid_input_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const numerical_error& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<std::string> storage;
    storage.reserve(args.size() + 1);
    storage.push_back("hubreg");
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    argv.reserve(storage.size());
    for (auto& s : storage) argv.push_back(s.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace hubreg
