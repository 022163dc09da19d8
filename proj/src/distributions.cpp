#include "hubreg/distributions.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <numeric>

#include "hubreg/errors.hpp"
#include "hubreg/quadrature.hpp"

namespace hubreg {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTailMass = 1e-12;

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw invalid_input_error(std::string(what) + " must be finite");
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// z with Phi(z) = kTailMass, used to truncate Gaussian component tails.
const double kNormalTailQuantile = boost::math::quantile(boost::math::normal_distribution<>(), kTailMass);

double student_t_pdf(const StudentT& st, double t) {
    const double v = st.df;
    const double z = t / st.scale;
    const double lognorm = std::lgamma(0.5 * (v + 1.0)) - std::lgamma(0.5 * v) -
                           0.5 * std::log(v * M_PI) - std::log(st.scale);
    return std::exp(lognorm - 0.5 * (v + 1.0) * std::log1p(z * z / v));
}

// E|t|^p over the region |t| > A, where the density has an exact
// representation f(t) = C t^{-(v+1)} g(t) with g(t) = (1 + v s^2/t^2)^{-(v+1)/2}
// smooth and g -> 1 at infinity. Substituting z = t^{p-v} turns the integral
// into C/(v-p) * int_0^{A^{p-v}} g(z^{1/(p-v)}) dz with a bounded smooth
// integrand, so the quadrature loses nothing even when p is close to v.
double student_t_abs_moment_tail(const StudentT& st, double p, double A) {
    const double v = st.df;
    const double s = st.scale;
    const double logC = std::lgamma(0.5 * (v + 1.0)) - std::lgamma(0.5 * v) -
                        0.5 * std::log(v * M_PI) - std::log(s) +
                        0.5 * (v + 1.0) * std::log(s * s * v);
    const double C = std::exp(logC);
    const double zmax = std::pow(A, p - v);  // p < v, A > 1, so zmax in (0,1)
    auto g_of_z = [&](double z) {
        if (z <= 0.0) return 1.0;
        const double inv_t_sq = std::pow(z, 2.0 / (v - p));
        return std::pow(1.0 + v * s * s * inv_t_sq, -0.5 * (v + 1.0));
    };
    return C / (v - p) * integrate(g_of_z, 0.0, zmax, {1e-13, 52});
}

double gauss_abs_moment(double sd, double p) {
    // E|N(0, sd^2)|^p = sd^p 2^{p/2} Gamma((p+1)/2) / sqrt(pi)
    return std::pow(sd, p) *
           std::exp(0.5 * p * std::log(2.0) + std::lgamma(0.5 * (p + 1.0)) -
                    0.5 * std::log(M_PI));
}

}  // namespace

NoiseSpec NoiseSpec::example1() { return NoiseSpec(Example1{}); }

NoiseSpec NoiseSpec::gauss_mixture(std::vector<double> weights, std::vector<double> means,
                                   std::vector<double> stds) {
    if (weights.empty() || weights.size() != means.size() || weights.size() != stds.size())
        throw invalid_input_error("gauss_mixture: weights/means/stds must be nonempty and equal length");
    double wsum = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        require_finite(weights[i], "gauss_mixture weight");
        require_finite(means[i], "gauss_mixture mean");
        require_finite(stds[i], "gauss_mixture std");
        if (weights[i] < 0.0) throw invalid_input_error("gauss_mixture: weights must be >= 0");
        if (stds[i] <= 0.0) throw invalid_input_error("gauss_mixture: stds must be > 0");
        wsum += weights[i];
        mean += weights[i] * means[i];
    }
    if (std::abs(wsum - 1.0) > 1e-12) throw invalid_input_error("gauss_mixture: weights must sum to 1");
    if (std::abs(mean) > 1e-12) throw invalid_input_error("gauss_mixture: mixture mean must be 0");
    return NoiseSpec(GaussMixture{std::move(weights), std::move(means), std::move(stds)});
}

NoiseSpec NoiseSpec::student_t(double df, double scale) {
    require_finite(df, "student_t df");
    require_finite(scale, "student_t scale");
    if (df <= 1.0) throw invalid_input_error("student_t: df must be > 1 so the mean exists");
    if (scale <= 0.0) throw invalid_input_error("student_t: scale must be > 0");
    return NoiseSpec(StudentT{df, scale});
}

NoiseSpec NoiseSpec::symmetric_pareto(double tail_index, double scale) {
    require_finite(tail_index, "symmetric_pareto tail_index");
    require_finite(scale, "symmetric_pareto scale");
    if (tail_index <= 1.0) throw invalid_input_error("symmetric_pareto: tail_index must be > 1");
    if (scale <= 0.0) throw invalid_input_error("symmetric_pareto: scale must be > 0");
    return NoiseSpec(SymmetricPareto{tail_index, scale});
}

std::string NoiseSpec::name() const {
    struct Visitor {
        std::string operator()(const Example1&) const { return "example1"; }
        std::string operator()(const GaussMixture& g) const {
            return "gauss_mixture(k=" + std::to_string(g.weights.size()) + ")";
        }
        std::string operator()(const StudentT& s) const {
            return "student_t(df=" + std::to_string(s.df) + ")";
        }
        std::string operator()(const SymmetricPareto& p) const {
            return "symmetric_pareto(a=" + std::to_string(p.tail_index) + ")";
        }
    };
    return std::visit(Visitor{}, family_);
}

double example1_pdf(double t) {
    require_finite(t, "example1_pdf: t");
    return t >= -0.25 ? 0.5 * std::exp(-(t + 0.25)) : std::exp(2.0 * (t + 0.25));
}

double example1_cdf(double t) {
    require_finite(t, "example1_cdf: t");
    return t < -0.25 ? 0.5 * std::exp(2.0 * (t + 0.25)) : 1.0 - 0.5 * std::exp(-(t + 0.25));
}

double example1_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) throw invalid_input_error("example1_quantile: u must be in (0,1)");
    return u < 0.5 ? 0.5 * std::log(2.0 * u) - 0.25 : -std::log(2.0 * (1.0 - u)) - 0.25;
}

double noise_pdf(const NoiseSpec& spec, double t) {
    require_finite(t, "noise_pdf: t");
    struct Visitor {
        double t;
        double operator()(const Example1&) const { return example1_pdf(t); }
        double operator()(const GaussMixture& g) const {
            double acc = 0.0;
            for (std::size_t i = 0; i < g.weights.size(); ++i) {
                const double z = (t - g.means[i]) / g.stds[i];
                acc += g.weights[i] / (g.stds[i] * std::sqrt(2.0 * M_PI)) * std::exp(-0.5 * z * z);
            }
            return acc;
        }
        double operator()(const StudentT& s) const { return student_t_pdf(s, t); }
        double operator()(const SymmetricPareto& p) const {
            const double a = std::abs(t);
            if (a < p.scale) return 0.0;
            return 0.5 * p.tail_index * std::pow(p.scale, p.tail_index) /
                   std::pow(a, p.tail_index + 1.0);
        }
    };
    return std::visit(Visitor{t}, spec.family());
}

double noise_cdf(const NoiseSpec& spec, double t) {
    require_finite(t, "noise_cdf: t");
    struct Visitor {
        double t;
        double operator()(const Example1&) const { return example1_cdf(t); }
        double operator()(const GaussMixture& g) const {
            double acc = 0.0;
            for (std::size_t i = 0; i < g.weights.size(); ++i)
                acc += g.weights[i] * normal_cdf((t - g.means[i]) / g.stds[i]);
            return acc;
        }
        double operator()(const StudentT& s) const {
            return boost::math::cdf(boost::math::students_t_distribution<>(s.df), t / s.scale);
        }
        double operator()(const SymmetricPareto& p) const {
            if (t <= -p.scale) return 0.5 * std::pow(p.scale / -t, p.tail_index);
            if (t >= p.scale) return 1.0 - 0.5 * std::pow(p.scale / t, p.tail_index);
            return 0.5;
        }
    };
    return std::visit(Visitor{t}, spec.family());
}

std::pair<double, double> integration_bounds(const NoiseSpec& spec) {
    struct Visitor {
        std::pair<double, double> operator()(const Example1&) const {
            return {example1_quantile(kTailMass), example1_quantile(1.0 - kTailMass)};
        }
        std::pair<double, double> operator()(const GaussMixture& g) const {
            // Envelope of the component quantiles: at least as wide as the
            // mixture's own 1e-12 quantiles.
            double lo = kInf, hi = -kInf;
            for (std::size_t i = 0; i < g.weights.size(); ++i) {
                lo = std::min(lo, g.means[i] + g.stds[i] * kNormalTailQuantile);
                hi = std::max(hi, g.means[i] - g.stds[i] * kNormalTailQuantile);
            }
            return {lo, hi};
        }
        std::pair<double, double> operator()(const StudentT& s) const {
            const double q =
                boost::math::quantile(boost::math::students_t_distribution<>(s.df), kTailMass);
            return {s.scale * q, -s.scale * q};
        }
        std::pair<double, double> operator()(const SymmetricPareto& p) const {
            const double q = p.scale * std::pow(2.0 * kTailMass, -1.0 / p.tail_index);
            return {-q, q};
        }
    };
    return std::visit(Visitor{}, spec.family());
}

std::vector<double> density_breakpoints(const NoiseSpec& spec) {
    struct Visitor {
        std::vector<double> operator()(const Example1&) const { return {-0.25}; }
        std::vector<double> operator()(const GaussMixture&) const { return {}; }
        std::vector<double> operator()(const StudentT&) const { return {}; }
        std::vector<double> operator()(const SymmetricPareto& p) const {
            return {-p.scale, p.scale};
        }
    };
    return std::visit(Visitor{}, spec.family());
}

double sample_one(const NoiseSpec& spec, Engine& eng) {
    struct Visitor {
        Engine& eng;
        double operator()(const Example1&) const { return example1_quantile(uniform01(eng)); }
        double operator()(const GaussMixture& g) const {
            double u = uniform01(eng);
            std::size_t k = 0;
            double acc = 0.0;
            for (; k + 1 < g.weights.size(); ++k) {
                acc += g.weights[k];
                if (u <= acc) break;
            }
            return g.means[k] + g.stds[k] * standard_normal(eng);
        }
        double operator()(const StudentT& s) const {
            // Bailey's polar method: exact for any real df.
            for (;;) {
                const double u = 2.0 * uniform01(eng) - 1.0;
                const double v = 2.0 * uniform01(eng) - 1.0;
                const double w = u * u + v * v;
                if (w > 1.0 || w == 0.0) continue;
                return s.scale * u * std::sqrt(s.df * (std::pow(w, -2.0 / s.df) - 1.0) / w);
            }
        }
        double operator()(const SymmetricPareto& p) const {
            const double sign = uniform01(eng) < 0.5 ? -1.0 : 1.0;
            return sign * p.scale * std::pow(uniform01(eng), -1.0 / p.tail_index);
        }
    };
    return std::visit(Visitor{eng}, spec.family());
}

std::vector<double> sample_noise(const NoiseSpec& spec, std::size_t n, std::uint64_t seed) {
    Engine eng = make_engine(seed);
    std::vector<double> out(n);
    for (auto& v : out) v = sample_one(spec, eng);
    return out;
}

double moment(const NoiseSpec& spec, double p) {
    if (!std::isfinite(p) || p <= 0.0) throw invalid_input_error("moment: p must be > 0");
    struct Visitor {
        double p;
        double operator()(const Example1&) const {
            const auto [lo, hi] = integration_bounds(NoiseSpec::example1());
            auto f = [this](double t) { return std::pow(std::abs(t), p) * example1_pdf(t); };
            return integrate_split(f, lo, hi, {-0.25, 0.0});
        }
        double operator()(const GaussMixture& g) const {
            bool centered = true;
            for (double m : g.means) centered = centered && m == 0.0;
            if (centered) {
                double acc = 0.0;
                for (std::size_t i = 0; i < g.weights.size(); ++i)
                    acc += g.weights[i] * gauss_abs_moment(g.stds[i], p);
                return acc;
            }
            NoiseSpec spec = NoiseSpec::gauss_mixture(g.weights, g.means, g.stds);
            const auto [lo, hi] = integration_bounds(spec);
            auto f = [&](double t) { return std::pow(std::abs(t), p) * noise_pdf(spec, t); };
            return integrate_split(f, lo, hi, {0.0});
        }
        double operator()(const StudentT& s) const {
            if (p >= s.df) return kInf;
            const double A = s.scale * (1.0 + std::sqrt(s.df));
            auto f = [&](double t) { return std::pow(t, p) * student_t_pdf(s, t); };
            const double central = integrate_split(f, 0.0, A, {}, {1e-12, 52});
            return 2.0 * (central + student_t_abs_moment_tail(s, p, A));
        }
        double operator()(const SymmetricPareto& pr) const {
            if (p >= pr.tail_index) return kInf;
            return pr.tail_index * std::pow(pr.scale, p) / (pr.tail_index - p);
        }
    };
    return std::visit(Visitor{p}, spec.family());
}

bool Box::contains(const Eigen::VectorXd& x, double tol) const {
    if (x.size() != lo.size()) return false;
    for (int j = 0; j < lo.size(); ++j)
        if (x[j] < lo[j] - tol || x[j] > hi[j] + tol) return false;
    return true;
}

Box unit_box(int dim) {
    Box b;
    b.lo = Eigen::VectorXd::Zero(dim);
    b.hi = Eigen::VectorXd::Ones(dim);
    return b;
}

void validate_model(const RegressionModel& model) {
    if (!model.truth || !model.het_scale) throw invalid_input_error("model: missing function handles");
    if (model.marginal.dim() < 1) throw invalid_input_error("model: marginal must have dimension >= 1");
    for (int j = 0; j < model.marginal.dim(); ++j)
        if (!(model.marginal.lo[j] < model.marginal.hi[j]))
            throw invalid_input_error("model: marginal box must have lo < hi");
    if (!std::isfinite(model.bound) || model.bound <= 0.0)
        throw invalid_input_error("model: bound M must be finite and > 0");

    // Probe |truth| <= M and het_scale >= 0 on a dense grid (1-D) or a
    // deterministic scatter (d > 1).
    const int d = model.marginal.dim();
    Eigen::VectorXd x(d);
    auto probe = [&](const Eigen::VectorXd& pt) {
        const double f = model.truth(pt);
        const double s = model.het_scale(pt);
        if (!std::isfinite(f) || !std::isfinite(s))
            throw invalid_input_error("model: truth/het_scale must be finite on the domain");
        if (s < 0.0) throw invalid_input_error("model: het_scale must be >= 0");
        if (std::abs(f) > model.bound + 1e-9)
            throw invalid_input_error("model: bound M must dominate sup|truth| on the domain");
    };
    if (d == 1) {
        for (int i = 0; i <= 2000; ++i) {
            x[0] = model.marginal.lo[0] +
                   (model.marginal.hi[0] - model.marginal.lo[0]) * i / 2000.0;
            probe(x);
        }
    } else {
        Engine eng = make_engine(0x9d0b7e5a2c4f3u);
        for (int i = 0; i < 4096; ++i) {
            for (int j = 0; j < d; ++j) x[j] = uniform(eng, model.marginal.lo[j], model.marginal.hi[j]);
            probe(x);
        }
    }
}

Dataset generate_dataset(const RegressionModel& model, std::size_t n, std::uint64_t seed) {
    const int d = model.marginal.dim();
    Dataset data;
    data.seed = seed;
    data.xs.resize(n, d);
    data.ys.resize(n);
    Engine xeng = make_engine(derive_seed(seed, 0));
    const std::vector<double> eps = sample_noise(model.noise, n, derive_seed(seed, 1));
    Eigen::VectorXd x(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) x[j] = uniform(xeng, model.marginal.lo[j], model.marginal.hi[j]);
        data.xs.row(i) = x.transpose();
        data.ys[static_cast<Eigen::Index>(i)] = model.truth(x) + model.het_scale(x) * eps[i];
    }
    return data;
}

}  // namespace hubreg
