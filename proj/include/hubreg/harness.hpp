#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hubreg/config.hpp"
#include "hubreg/theory.hpp"

namespace hubreg {

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double se = 0.0;  // OLS standard error of the slope; 0 on an exact power law
};

// OLS on (log n, log error); needs >= 3 points, all coordinates positive.
SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

struct RateRow {
    std::size_t n = 0;
    std::size_t replicate = 0;
    double sigma = 0.0;
    double l2_sq_error = 0.0;
    double excess_risk = 0.0;
    int iters = 0;
    int clip_count = 0;
    std::uint64_t seed = 0;
    // in-memory diagnostics, reported through the JSON summary only:
    double excess_se = 0.0;
    bool converged = false;
    bool risk_monotone = true;
    bool decomposition_checked = false;
    bool decomposition_ok = true;
    std::string error;  // nonempty marks a failed row (excluded from the CSV)
};

struct GridMean {
    std::size_t n = 0;
    double mean_l2_sq = 0.0;
    std::size_t count = 0;
};

struct RateReport {
    std::vector<RateRow> rows;  // ordered by (n, replicate)
    std::vector<GridMean> grid_means;
    bool slope_defined = false;
    SlopeFit slope;
    std::size_t failed_rows = 0;
    std::size_t decomposition_checked = 0;
    std::size_t decomposition_satisfied = 0;
    std::string config_echo;
    std::uint64_t master_seed = 0;
};

// One fit per (n, replicate): dataset from derive_seed(master, row ordinal),
// sigma from the policy, L2 error by quadrature, excess Huber risk on an
// independent evaluation sample. Rows where sigma > max(2M, 1) and the noise
// carries a usable (1+eps)-moment also get the row-wise decomposition check
// |excess - l2^2| <= c_eps sigma^{-eps} + 3 stderr.
RateReport run_rate_experiment(const ExperimentConfig& cfg);

struct BiasRow {
    std::string policy;  // "fixed" or "adaptive"
    std::size_t n = 0;
    std::size_t replicate = 0;
    double sigma = 0.0;
    double offset = 0.0;    // mean of (fitted - truth) over the marginal
    double oracle_c = 0.0;  // population bias constant at this sigma
    double l2_sq_error = 0.0;
    std::uint64_t seed = 0;
    std::string error;
};

struct BiasAggregate {
    std::string policy;
    std::size_t n = 0;
    double sigma = 0.0;
    double mean_offset = 0.0;
    double offset_se = 0.0;
    double oracle_c = 0.0;
    double mean_l2_sq = 0.0;
};

struct BiasReport {
    std::vector<BiasRow> rows;
    std::vector<BiasAggregate> aggregates;
    // headline contrast at the largest n: fixed-sigma error floor vs adaptive
    double fixed_final_mean_l2_sq = 0.0;
    double adaptive_final_mean_l2_sq = 0.0;
    std::string config_echo;
};

// Requires a homoscedastic 1-D model. Fixed-sigma rows (at the largest n)
// use the policy's value/grid, or sigma = 0.01 as the misconfigured-fixed
// reference when the policy is adaptive; adaptive rows sweep the n_grid with
// the policy's schedule (or epsilon = q = 1 when the policy is fixed/grid).
// oracle_c is s * oracle_shift(noise, sigma / s) for noise scale s.
BiasReport run_bias_demo(const ExperimentConfig& cfg);

struct BaselineRow {
    std::string method;  // "huber", "least_squares", or "lad"
    std::size_t n = 0;
    std::size_t replicate = 0;
    double sigma = 0.0;  // 0 for the comparators
    double l2_sq_error = 0.0;
    int iters = 0;
    std::uint64_t seed = 0;
    std::string error;
};

struct MethodSummary {
    std::string method;
    std::size_t n = 0;
    double median_l2_sq = 0.0;
    double iqr_l2_sq = 0.0;
    double max_l2_sq = 0.0;
};

struct BaselineReport {
    std::vector<BaselineRow> rows;
    std::vector<MethodSummary> summaries;
    std::string config_echo;
};

// Huber (policy sigma) plus the requested comparators on identical datasets
// at the largest n; empty comparator list means empty report.
BaselineReport run_baselines(const ExperimentConfig& cfg);

struct SuiteTriple {
    RegressionModel model;
    std::string model_name;
    MomentInfo info;
    ScaleParam sigma;
    RealFunction f;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
};

// Randomized (f, sigma, model) triples meeting every bound precondition:
// models rotate through a fixed pool crossed with epsilon in {0.5, 1, 2}
// (filtered by moment finiteness), f is a random element of a small bump
// space, and sigma is log-uniform above the max(2M, 1) floor.
std::vector<SuiteTriple> make_bound_suite(std::size_t count, std::uint64_t seed);

struct SuiteResult {
    std::vector<BoundCheck> comparison;
    std::vector<BoundCheck> variance;
    std::vector<BoundCheck> bernstein;
    std::size_t triples_passed = 0;  // all three satisfied (or skipped)
};

SuiteResult run_bound_suite(const std::vector<SuiteTriple>& triples, std::size_t mc_n,
                            int workers);

// Linear-interpolation quantile of a sorted sample (numpy's default scheme).
double quantile_sorted(const std::vector<double>& sorted, double q);

// Writers: a CSV plus a JSON summary per report, created only after the
// computation succeeded so failures never leave partial outputs; identical
// reports overwrite with identical bytes.
void write_rate_report(const RateReport& report, const std::string& dir);
void write_bias_report(const BiasReport& report, const std::string& dir);
void write_baseline_report(const BaselineReport& report, const std::string& dir);
void write_suite_report(const SuiteResult& result, const std::vector<SuiteTriple>& triples,
                        const std::string& dir);

}  // namespace hubreg
