#include "hubreg/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hubreg/errors.hpp"

namespace hubreg {
namespace {

using nlohmann::json;

[[noreturn]] void bad_key(const std::string& path, const std::string& what) {
    throw invalid_input_error("config: key '" + path + "' " + what);
}

std::string join(const std::string& parent, const std::string& key) {
    return parent.empty() ? key : parent + "." + key;
}

const json& need(const json& obj, const std::string& key, const std::string& parent) {
    if (!obj.is_object()) bad_key(parent, "must be an object");
    auto it = obj.find(key);
    if (it == obj.end()) bad_key(join(parent, key), "is missing");
    return *it;
}

double need_number(const json& obj, const std::string& key, const std::string& parent) {
    const json& v = need(obj, key, parent);
    if (!v.is_number()) bad_key(join(parent, key), "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) bad_key(join(parent, key), "must be finite");
    return d;
}

double opt_number(const json& obj, const std::string& key, const std::string& parent,
                  double fallback) {
    if (!obj.is_object() || obj.find(key) == obj.end()) return fallback;
    return need_number(obj, key, parent);
}

std::uint64_t need_count(const json& obj, const std::string& key, const std::string& parent,
                         std::uint64_t min_value) {
    const json& v = need(obj, key, parent);
    if (!v.is_number_integer() || v.is_number_float())
        bad_key(join(parent, key), "must be an integer");
    if (v.is_number_unsigned()) {
        const std::uint64_t u = v.get<std::uint64_t>();
        if (u < min_value)
            bad_key(join(parent, key), "must be >= " + std::to_string(min_value));
        return u;
    }
    const std::int64_t s = v.get<std::int64_t>();
    if (s < 0 || static_cast<std::uint64_t>(s) < min_value)
        bad_key(join(parent, key), "must be >= " + std::to_string(min_value));
    return static_cast<std::uint64_t>(s);
}

std::string need_string(const json& obj, const std::string& key, const std::string& parent) {
    const json& v = need(obj, key, parent);
    if (!v.is_string()) bad_key(join(parent, key), "must be a string");
    return v.get<std::string>();
}

std::vector<double> need_number_array(const json& obj, const std::string& key,
                                      const std::string& parent) {
    const json& v = need(obj, key, parent);
    if (!v.is_array()) bad_key(join(parent, key), "must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) bad_key(join(parent, key), "must be an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

void reject_unknown(const json& obj, const std::string& parent,
                    const std::set<std::string>& allowed) {
    if (!obj.is_object()) bad_key(parent, "must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (allowed.find(it.key()) == allowed.end())
            bad_key(parent.empty() ? it.key() : parent + "." + it.key(), "is not recognized");
}

std::function<double(const Eigen::VectorXd&)> build_truth(const json& j,
                                                          const std::string& parent) {
    const std::string type = need_string(j, "type", parent);
    if (type == "sine") {
        reject_unknown(j, parent, {"type", "amplitude"});
        const double amp = need_number(j, "amplitude", parent);
        return [amp](const Eigen::VectorXd& x) { return amp * std::sin(M_PI * x[0]); };
    }
    if (type == "constant") {
        reject_unknown(j, parent, {"type", "value"});
        const double v = need_number(j, "value", parent);
        return [v](const Eigen::VectorXd&) { return v; };
    }
    bad_key(parent + ".type", "must be one of {sine, constant}");
}

std::function<double(const Eigen::VectorXd&)> build_het(const json& j, const std::string& parent) {
    const std::string type = need_string(j, "type", parent);
    if (type == "affine") {
        reject_unknown(j, parent, {"type", "intercept", "slope"});
        const double a = need_number(j, "intercept", parent);
        const double b = need_number(j, "slope", parent);
        return [a, b](const Eigen::VectorXd& x) { return a + b * x[0]; };
    }
    if (type == "constant") {
        reject_unknown(j, parent, {"type", "value"});
        const double v = need_number(j, "value", parent);
        return [v](const Eigen::VectorXd&) { return v; };
    }
    bad_key(parent + ".type", "must be one of {affine, constant}");
}

NoiseSpec build_noise(const json& j, const std::string& parent) {
    const std::string family = need_string(j, "family", parent);
    try {
        if (family == "example1") {
            reject_unknown(j, parent, {"family"});
            return NoiseSpec::example1();
        }
        if (family == "gauss_mixture") {
            reject_unknown(j, parent, {"family", "weights", "means", "stds"});
            return NoiseSpec::gauss_mixture(need_number_array(j, "weights", parent),
                                            need_number_array(j, "means", parent),
                                            need_number_array(j, "stds", parent));
        }
        if (family == "student_t") {
            reject_unknown(j, parent, {"family", "df", "scale"});
            return NoiseSpec::student_t(need_number(j, "df", parent),
                                        opt_number(j, "scale", parent, 1.0));
        }
        if (family == "symmetric_pareto") {
            reject_unknown(j, parent, {"family", "tail_index", "scale"});
            return NoiseSpec::symmetric_pareto(need_number(j, "tail_index", parent),
                                               opt_number(j, "scale", parent, 1.0));
        }
    } catch (const invalid_input_error& e) {
        bad_key(parent, std::string("is invalid: ") + e.what());
    }
    bad_key(parent + ".family",
            "must be one of {example1, gauss_mixture, student_t, symmetric_pareto}");
}

SigmaPolicy build_policy(const json& j, const std::string& parent) {
    SigmaPolicy policy;
    const std::string type = need_string(j, "type", parent);
    if (type == "fixed") {
        reject_unknown(j, parent, {"type", "value"});
        policy.kind = SigmaPolicy::Kind::fixed;
        policy.fixed_value = need_number(j, "value", parent);
        if (policy.fixed_value <= 0.0) bad_key(parent + ".value", "must be > 0");
    } else if (type == "adaptive") {
        reject_unknown(j, parent, {"type", "epsilon", "q"});
        policy.kind = SigmaPolicy::Kind::adaptive;
        policy.schedule.epsilon = need_number(j, "epsilon", parent);
        policy.schedule.q = need_number(j, "q", parent);
        if (policy.schedule.epsilon <= 0.0) bad_key(parent + ".epsilon", "must be > 0");
        if (policy.schedule.q <= 0.0) bad_key(parent + ".q", "must be > 0");
    } else if (type == "grid") {
        reject_unknown(j, parent, {"type", "values"});
        policy.kind = SigmaPolicy::Kind::grid;
        policy.grid = need_number_array(j, "values", parent);
        if (policy.grid.empty()) bad_key(parent + ".values", "must be nonempty");
        for (double v : policy.grid)
            if (!(v > 0.0)) bad_key(parent + ".values", "must be positive");
    } else {
        bad_key(parent + ".type", "must be one of {fixed, adaptive, grid}");
    }
    return policy;
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw invalid_input_error("config: " + what + " is not valid JSON: " + e.what());
    }
}

}  // namespace

std::string load_config_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw invalid_input_error("config: cannot read file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string apply_override(const std::string& config_text, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw invalid_input_error("config: override '" + assignment +
                                  "' must have the form key=value");
    const std::string dotted = assignment.substr(0, eq);
    const std::string value_text = assignment.substr(eq + 1);

    json root = parse_json(config_text, "document");
    json* node = &root;
    std::size_t start = 0;
    while (true) {
        const auto dot = dotted.find('.', start);
        const std::string part = dotted.substr(start, dot - start);
        if (!node->is_object() || node->find(part) == node->end())
            throw invalid_input_error("config: override key '" + dotted.substr(0, dot) +
                                      "' does not exist");
        node = &(*node)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    json value;
    try {
        value = json::parse(value_text);
    } catch (const json::exception&) {
        value = value_text;  // unquoted strings are taken literally
    }
    *node = value;
    return root.dump(2);
}

ExperimentConfig build_experiment(const std::string& config_text,
                                  std::optional<std::uint64_t> seed_override,
                                  std::optional<std::string> output_override) {
    json root = parse_json(config_text, "document");
    if (seed_override) root["master_seed"] = *seed_override;
    if (output_override) root["output_path"] = *output_override;

    reject_unknown(root, "",
                   {"model", "space", "solver", "n_grid", "replicates", "sigma_policy",
                    "comparators", "master_seed", "output_path", "eval_points", "fit_n", "workers",
                    "bound_suite"});

    ExperimentConfig cfg;

    const json& jm = need(root, "model", "");
    reject_unknown(jm, "model", {"truth", "het_scale", "noise", "marginal", "bound"});
    const json& jmarg = need(jm, "marginal", "model");
    reject_unknown(jmarg, "model.marginal", {"lo", "hi"});
    const double lo = need_number(jmarg, "lo", "model.marginal");
    const double hi = need_number(jmarg, "hi", "model.marginal");
    if (!(lo < hi)) bad_key("model.marginal", "must have lo < hi");
    Box box;
    box.lo = Eigen::VectorXd::Constant(1, lo);
    box.hi = Eigen::VectorXd::Constant(1, hi);
    cfg.model.truth = build_truth(need(jm, "truth", "model"), "model.truth");
    cfg.model.het_scale = build_het(need(jm, "het_scale", "model"), "model.het_scale");
    cfg.model.noise = build_noise(need(jm, "noise", "model"), "model.noise");
    cfg.model.marginal = box;
    cfg.model.bound = need_number(jm, "bound", "model");
    try {
        validate_model(cfg.model);
    } catch (const invalid_input_error& e) {
        bad_key("model", std::string("is invalid: ") + e.what());
    }

    const json& js = need(root, "space", "");
    reject_unknown(js, "space", {"centers_per_axis", "bandwidth", "radius", "capacity_q", "bound"});
    const auto centers = static_cast<int>(need_count(js, "centers_per_axis", "space", 0));
    const double radius = need_number(js, "radius", "space");
    const double capacity_q = need_number(js, "capacity_q", "space");
    const double space_bound = opt_number(js, "bound", "space", cfg.model.bound);
    try {
        cfg.space = centers == 0
                        ? constant_space(radius, space_bound, capacity_q, box)
                        : make_space(centers, need_number(js, "bandwidth", "space"), radius,
                                     space_bound, capacity_q, box);
    } catch (const invalid_input_error& e) {
        bad_key("space", std::string("is invalid: ") + e.what());
    }

    if (root.find("solver") != root.end()) {
        const json& jo = root["solver"];
        reject_unknown(jo, "solver", {"max_iters", "rel_tol", "ridge_jitter", "fallback"});
        if (jo.find("max_iters") != jo.end())
            cfg.solver.max_iters = static_cast<int>(need_count(jo, "max_iters", "solver", 1));
        cfg.solver.rel_tol = opt_number(jo, "rel_tol", "solver", cfg.solver.rel_tol);
        cfg.solver.ridge_jitter = opt_number(jo, "ridge_jitter", "solver", cfg.solver.ridge_jitter);
        if (jo.find("fallback") != jo.end()) {
            if (!jo["fallback"].is_boolean()) bad_key("solver.fallback", "must be a boolean");
            cfg.solver.fallback = jo["fallback"].get<bool>();
        }
    }

    const json& jg = need(root, "n_grid", "");
    if (!jg.is_array() || jg.empty()) bad_key("n_grid", "must be a nonempty array of counts");
    for (const auto& e : jg) {
        if (!e.is_number_integer()) bad_key("n_grid", "must contain integers");
        const std::int64_t v = e.get<std::int64_t>();
        if (v < 1) bad_key("n_grid", "entries must be >= 1");
        if (!cfg.n_grid.empty() && static_cast<std::size_t>(v) <= cfg.n_grid.back())
            bad_key("n_grid", "must be strictly increasing");
        cfg.n_grid.push_back(static_cast<std::size_t>(v));
    }

    cfg.replicates = need_count(root, "replicates", "", 1);
    cfg.sigma_policy = build_policy(need(root, "sigma_policy", ""), "sigma_policy");

    if (root.find("comparators") != root.end()) {
        const json& jc = root["comparators"];
        if (!jc.is_array()) bad_key("comparators", "must be an array");
        for (const auto& e : jc) {
            if (!e.is_string()) bad_key("comparators", "must contain strings");
            const std::string name = e.get<std::string>();
            if (name != "least_squares" && name != "lad")
                bad_key("comparators", "must be a subset of {least_squares, lad}");
            cfg.comparators.push_back(name);
        }
    }

    cfg.master_seed = need_count(root, "master_seed", "", 0);
    cfg.output_path = need_string(root, "output_path", "");
    if (root.find("eval_points") != root.end())
        cfg.eval_points = need_count(root, "eval_points", "", 2);
    if (root.find("fit_n") != root.end()) cfg.fit_n = need_count(root, "fit_n", "", 2);
    if (root.find("workers") != root.end())
        cfg.workers = static_cast<int>(need_count(root, "workers", "", 0));
    if (root.find("bound_suite") != root.end()) {
        const json& jb = root["bound_suite"];
        reject_unknown(jb, "bound_suite", {"triples", "mc_n"});
        cfg.suite_triples = need_count(jb, "triples", "bound_suite", 1);
        cfg.suite_mc_n = need_count(jb, "mc_n", "bound_suite", 2);
    }

    cfg.config_echo = root.dump(2);
    return cfg;
}

}  // namespace hubreg
