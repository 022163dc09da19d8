#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "hubreg/rng.hpp"

namespace hubreg {

// The asymmetric zero-mean exponential density used for the bias
// demonstrations: p(t) = 1/2 e^{-(t+1/4)} for t >= -1/4, e^{2(t+1/4)} below.
// Mean 0 (the two branches contribute +3/8 and -3/8), E t^2 = 19/16.
struct Example1 {};

struct GaussMixture {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> stds;
};

struct StudentT {
    double df;     // > 1 so the mean exists; E|t|^p finite iff p < df
    double scale;
};

// Density (a/2) m^a |t|^{-a-1} on |t| >= m: the hardest polynomial tail
// on offer; E|t|^p finite iff p < tail_index.
struct SymmetricPareto {
    double tail_index;
    double scale;
};

class NoiseSpec {
  public:
    using Family = std::variant<Example1, GaussMixture, StudentT, SymmetricPareto>;

    NoiseSpec() : family_(Example1{}) {}

    static NoiseSpec example1();
    static NoiseSpec gauss_mixture(std::vector<double> weights, std::vector<double> means,
                                   std::vector<double> stds);
    static NoiseSpec student_t(double df, double scale);
    static NoiseSpec symmetric_pareto(double tail_index, double scale);

    const Family& family() const { return family_; }
    std::string name() const;

  private:
    explicit NoiseSpec(Family f) : family_(std::move(f)) {}
    Family family_;
};

double example1_pdf(double t);
double example1_cdf(double t);
double example1_quantile(double u);

double noise_pdf(const NoiseSpec& spec, double t);
double noise_cdf(const NoiseSpec& spec, double t);

// [lo, hi] covering all probability mass except 1e-12 per tail; population
// integrals are truncated here.
std::pair<double, double> integration_bounds(const NoiseSpec& spec);
// Points where the density is non-smooth, to pre-split quadrature at.
std::vector<double> density_breakpoints(const NoiseSpec& spec);

// One draw consuming a deterministic (or, for StudentT's rejection loop, a
// seed-determined) number of engine outputs.
double sample_one(const NoiseSpec& spec, Engine& eng);
std::vector<double> sample_noise(const NoiseSpec& spec, std::size_t n, std::uint64_t seed);

// E|eps|^p; +infinity when the tail index does not support order p.
// Closed forms for zero-mean GaussMixture and SymmetricPareto, adaptive
// quadrature otherwise (StudentT tails handled by an exact power-law
// change of variables).
double moment(const NoiseSpec& spec, double p);

struct Box {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
    int dim() const { return static_cast<int>(lo.size()); }
    bool contains(const Eigen::VectorXd& x, double tol = 1e-12) const;
};

Box unit_box(int dim = 1);

// Y = truth(X) + het_scale(X) * eps with X uniform on the marginal box.
// bound is the sup-norm cap M shared with the hypothesis space; model
// validation probes a dense grid to confirm |truth| <= M.
struct RegressionModel {
    std::function<double(const Eigen::VectorXd&)> truth;
    std::function<double(const Eigen::VectorXd&)> het_scale;
    NoiseSpec noise;
    Box marginal;
    double bound;
};

void validate_model(const RegressionModel& model);

struct Dataset {
    Eigen::MatrixXd xs;  // n x d
    Eigen::VectorXd ys;
    std::uint64_t seed;
};

// xs stream and noise stream are split off the given seed with derive_seed
// tags 0 and 1, so datasets are bit-identical across runs and platforms.
Dataset generate_dataset(const RegressionModel& model, std::size_t n, std::uint64_t seed);

}  // namespace hubreg
