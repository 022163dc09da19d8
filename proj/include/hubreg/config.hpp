#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hubreg/distributions.hpp"
#include "hubreg/hypothesis.hpp"
#include "hubreg/solver.hpp"

namespace hubreg {

struct SigmaPolicy {
    enum class Kind { fixed, adaptive, grid };
    Kind kind = Kind::adaptive;
    double fixed_value = 1.0;
    ScheduleParams schedule{1.0, 1.0};
    std::vector<double> grid;
};

// One experiment, fully determined: identical config + master_seed means
// bit-identical report rows.
struct ExperimentConfig {
    RegressionModel model;
    SpacePtr space;
    SolverOptions solver;
    std::vector<std::size_t> n_grid;  // strictly increasing
    std::size_t replicates = 1;
    SigmaPolicy sigma_policy;
    std::vector<std::string> comparators;  // subset of {least_squares, lad}
    std::uint64_t master_seed = 0;
    std::string output_path = "out";
    std::size_t eval_points = 100000;  // excess-risk evaluation sample per row
    std::size_t fit_n = 4000;          // sample size for the single-fit command
    int workers = 0;                   // 0 = hardware concurrency
    std::size_t suite_triples = 100;   // randomized bound-check suite size
    std::size_t suite_mc_n = 1000000;
    std::string config_echo;  // canonical JSON dump of the effective config
};

// Reads the config file; a missing or unreadable file raises
// invalid_input_error naming the path.
std::string load_config_text(const std::string& path);

// Applies one "dotted.key=value" override to the JSON text; the key path
// must already exist. The value is parsed as JSON when possible, else taken
// as a string.
std::string apply_override(const std::string& config_text, const std::string& assignment);

// Validates and assembles the experiment; every error names the offending
// config key. Unknown keys are rejected. The seed/output overrides (from the
// command line) are folded in before the echo is produced, so the echo is
// always the effective configuration.
ExperimentConfig build_experiment(const std::string& config_text,
                                  std::optional<std::uint64_t> seed_override = {},
                                  std::optional<std::string> output_override = {});

}  // namespace hubreg
