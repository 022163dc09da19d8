#include "hubreg/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hubreg/errors.hpp"
#include "hubreg/quadrature.hpp"

namespace hubreg {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> with_kinks(const NoiseSpec& spec, std::initializer_list<double> extra) {
    std::vector<double> pts = density_breakpoints(spec);
    pts.insert(pts.end(), extra.begin(), extra.end());
    return pts;
}

void require_theory_floor(const ScaleParam& sigma, double M, const char* op) {
    if (!sigma.exceeds_theory_floor(M))
        throw invalid_input_error(std::string(op) + ": requires sigma > max(2*M, 1), got sigma=" +
                                  std::to_string(sigma.value()) + " with M=" + std::to_string(M));
}

void require_finite_moment(const MomentInfo& info, const char* op) {
    if (!(info.epsilon > 0.0)) throw invalid_input_error(std::string(op) + ": epsilon must be > 0");
    if (!std::isfinite(info.moment_1pe) || info.moment_1pe < 0.0)
        throw invalid_input_error(std::string(op) +
                                  ": requires a finite moment E|Y|^{1+epsilon}");
    if (!(info.M > 0.0)) throw invalid_input_error(std::string(op) + ": M must be > 0");
}

struct MeanStderr {
    double mean;
    double se;
};

MeanStderr mean_stderr(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

// Paired per-sample statistics shared by the bound checks.
struct XiSample {
    std::vector<double> xi;        // huber(y - f(x)) - huber(y - f*(x))
    std::vector<double> gap_term;  // xi - (f(x) - f*(x))^2
};

XiSample draw_xi(const RealFunction& f, const RegressionModel& model, const ScaleParam& sigma,
                 double M, std::size_t mc_n, std::uint64_t seed) {
    if (mc_n < 2) throw invalid_input_error("bound check: mc_n must be >= 2");
    const Dataset data = generate_dataset(model, mc_n, seed);
    XiSample out;
    out.xi.resize(mc_n);
    out.gap_term.resize(mc_n);
    Eigen::VectorXd x(data.xs.cols());
    for (std::size_t i = 0; i < mc_n; ++i) {
        x = data.xs.row(static_cast<Eigen::Index>(i)).transpose();
        const double fx = f(x);
        if (!(std::abs(fx) <= M + 1e-6))
            throw invalid_input_error("bound check: |f| exceeds the sup-norm bound M");
        const double fstar = model.truth(x);
        const double y = data.ys[static_cast<Eigen::Index>(i)];
        const double xi = huber(y - fx, sigma) - huber(y - fstar, sigma);
        out.xi[i] = xi;
        out.gap_term[i] = xi - (fx - fstar) * (fx - fstar);
    }
    return out;
}

double comparison_constant(const MomentInfo& info) {
    return std::pow(2.0, 3.0 + info.epsilon) * (info.M + 1.0) * (info.M + 1.0) * info.moment_1pe;
}

double variance_c1(const MomentInfo& info) {
    return 64.0 * (info.M + 1.0) * (info.M + 1.0) * (info.moment_1pe + info.M * info.M + 1.0);
}

double variance_c2(const MomentInfo& info) {
    const double M = info.M;
    return 48.0 * M * M * (info.moment_1pe + std::pow(M, 1.0 + info.epsilon)) +
           16.0 * M * M * info.moment_1pe;
}

}  // namespace

double risk_deriv_at(double nu, const ScaleParam& sigma, const NoiseSpec& spec) {
    if (!std::isfinite(nu)) throw invalid_input_error("risk_deriv_at: nu must be finite");
    const auto [lo, hi] = integration_bounds(spec);
    auto integrand = [&](double u) { return huber_deriv(u - nu, sigma) * noise_pdf(spec, u); };
    return -integrate_split(integrand, lo, hi,
                            with_kinks(spec, {nu - sigma.value(), nu + sigma.value()}),
                            {1e-11, 52});
}

double population_location_risk(double nu, const ScaleParam& sigma, const NoiseSpec& spec) {
    if (!std::isfinite(nu)) throw invalid_input_error("population_location_risk: nu must be finite");
    const auto [lo, hi] = integration_bounds(spec);
    auto integrand = [&](double u) { return huber(u - nu, sigma) * noise_pdf(spec, u); };
    return integrate_split(integrand, lo, hi,
                           with_kinks(spec, {nu - sigma.value(), nu + sigma.value()}), {1e-11, 52});
}

double example1_risk_deriv0_closed(const ScaleParam& sigma) {
    const double s = sigma.value();
    if (s >= 0.25) return std::exp(-s - 0.25) - 0.5 * std::exp(0.5 - 2.0 * s);
    return 2.0 * s + std::exp(-s - 0.25) - std::exp(s - 0.25);
}

double oracle_shift(const NoiseSpec& spec, const ScaleParam& sigma) {
    const double mean_abs = moment(spec, 1.0);
    if (!std::isfinite(mean_abs))
        throw invalid_input_error("oracle_shift: noise must have a finite first absolute moment");
    double a = -(sigma.value() + mean_abs);
    double b = sigma.value() + mean_abs;
    double fa = risk_deriv_at(a, sigma, spec);
    double fb = risk_deriv_at(b, sigma, spec);
    for (int widen = 0; (fa > 0.0 || fb < 0.0) && widen < 8; ++widen) {
        a *= 2.0;
        b *= 2.0;
        fa = risk_deriv_at(a, sigma, spec);
        fb = risk_deriv_at(b, sigma, spec);
    }
    if (fa > 0.0 || fb < 0.0)
        throw numerical_error("oracle_shift: failed to bracket the risk minimizer");
    while (b - a > 1e-12) {
        const double mid = 0.5 * (a + b);
        if (risk_deriv_at(mid, sigma, spec) > 0.0)
            b = mid;
        else
            a = mid;
    }
    return 0.5 * (a + b);
}

double shifted_abs_moment(const NoiseSpec& spec, double a, double b, double p) {
    if (!std::isfinite(a) || !std::isfinite(b) || b < 0.0)
        throw invalid_input_error("shifted_abs_moment: requires finite a and b >= 0");
    if (!std::isfinite(p) || p <= 0.0)
        throw invalid_input_error("shifted_abs_moment: p must be > 0");
    if (b == 0.0) return std::pow(std::abs(a), p);

    const double kink = -a / b;
    auto integrand = [&](double t) {
        return std::pow(std::abs(a + b * t), p) * noise_pdf(spec, t);
    };

    struct Tail {
        double exponent;  // power-law tail index: integral finite iff p < exponent
        double coeff;     // pdf(t) ~ coeff * t^{-(exponent+1)} * smooth(t) for t -> +inf
        double cut;       // |t| >= cut handled by the change of variables
        std::function<double(double)> smooth;  // the bounded factor, in t
    };

    struct Visitor {
        double a, b, p, kink;
        const std::function<double(double)>& integrand;
        const NoiseSpec& spec;

        double light_tail() const {
            const auto [lo0, hi0] = integration_bounds(spec);
            // Widen so the polynomial factor dies under the exponential tail,
            // but keep the original bounds (and 0) as breakpoints: without
            // them the first Simpson samples sit in the dead zones and the
            // recursion accepts before ever seeing the mass.
            const double widen = 60.0 + 10.0 * p;
            const double lo = lo0 - widen;
            const double hi = hi0 + widen;
            auto pts = density_breakpoints(spec);
            pts.insert(pts.end(), {lo0, hi0, 0.0});
            if (kink > lo && kink < hi) pts.push_back(kink);
            return integrate_split(integrand, lo, hi, pts, {1e-10, 52});
        }

        double heavy_tail(const Tail& tail) const {
            if (p >= tail.exponent) return kInf;
            const double A = std::max(tail.cut, 10.0 * (std::abs(a) + 1.0) / b);
            auto pts = density_breakpoints(spec);
            if (kink > -A && kink < A) pts.push_back(kink);
            const double central = integrate_split(integrand, -A, A, pts, {1e-10, 52});
            // int_A^inf |a + b t|^p pdf(t) dt under z = t^{p - e} becomes
            // coeff/(e-p) int_0^{A^{p-e}} |b + a z^{1/(e-p)}|^p smooth(z^{-1/(e-p)}) dz,
            // a bounded smooth integrand: exact even as p -> e. The negative
            // tail is the same with a -> -a (the heavy-tail densities here
            // are symmetric).
            const double e = tail.exponent;
            const double zmax = std::pow(A, p - e);
            double tails = 0.0;
            for (double sign : {1.0, -1.0}) {
                auto g = [&](double z) {
                    if (z <= 0.0) return std::pow(b, p);
                    const double inv_t = std::pow(z, 1.0 / (e - p));
                    return std::pow(std::abs(b + sign * a * inv_t), p) * tail.smooth(1.0 / inv_t);
                };
                tails += tail.coeff / (e - p) * integrate(g, 0.0, zmax, {1e-13, 52});
            }
            return central + tails;
        }

        double operator()(const Example1&) const { return light_tail(); }
        double operator()(const GaussMixture&) const { return light_tail(); }
        double operator()(const StudentT& s) const {
            const double v = s.df;
            const double logC = std::lgamma(0.5 * (v + 1.0)) - std::lgamma(0.5 * v) -
                                0.5 * std::log(v * M_PI) - std::log(s.scale) +
                                0.5 * (v + 1.0) * std::log(v * s.scale * s.scale);
            const double vs2 = v * s.scale * s.scale;
            return heavy_tail({v, std::exp(logC), 2.0 * (1.0 + std::sqrt(v)) * s.scale,
                               [vs2, v](double t) {
                                   return std::pow(1.0 + vs2 / (t * t), -0.5 * (v + 1.0));
                               }});
        }
        double operator()(const SymmetricPareto& pr) const {
            return heavy_tail({pr.tail_index,
                               0.5 * pr.tail_index * std::pow(pr.scale, pr.tail_index),
                               2.0 * pr.scale, [](double) { return 1.0; }});
        }
    };
    return std::visit(Visitor{a, b, p, kink, integrand, spec}, spec.family());
}

double response_moment(const RegressionModel& model, double p) {
    if (model.marginal.dim() != 1)
        throw invalid_input_error("response_moment: quadrature requires a 1-D marginal");
    if (!std::isfinite(moment(model.noise, p))) return kInf;
    const double lo = model.marginal.lo[0];
    const double hi = model.marginal.hi[0];
    Eigen::VectorXd x(1);
    auto integrand = [&](double t) mutable {
        x[0] = t;
        return shifted_abs_moment(model.noise, model.truth(x), model.het_scale(x), p);
    };
    // Fixed composite Simpson over x: the integrand is smooth but carries
    // inner-quadrature jitter that stalls an adaptive error estimate.
    constexpr int kPanels = 1024;
    const double h = (hi - lo) / kPanels;
    double acc = integrand(lo) + integrand(hi);
    for (int i = 1; i < kPanels; ++i) acc += 2.0 * integrand(lo + h * i);
    for (int i = 0; i < kPanels; ++i) acc += 4.0 * integrand(lo + h * (i + 0.5));
    return acc * h / 6.0 / (hi - lo);
}

L2Result l2_distance(const RealFunction& f, const RealFunction& g, const Box& marginal,
                     const L2Mode& mode) {
    if (const auto* mc = std::get_if<MonteCarloMode>(&mode)) {
        if (mc->mc_n < 2) throw invalid_input_error("l2_distance: mc_n must be >= 2");
        Engine eng = make_engine(mc->seed);
        std::vector<double> sq(mc->mc_n);
        Eigen::VectorXd x(marginal.dim());
        for (std::size_t i = 0; i < mc->mc_n; ++i) {
            for (int j = 0; j < marginal.dim(); ++j)
                x[j] = uniform(eng, marginal.lo[j], marginal.hi[j]);
            const double d = f(x) - g(x);
            if (!std::isfinite(d)) throw invalid_input_error("l2_distance: non-finite values");
            sq[i] = d * d;
        }
        const auto [mean, se] = mean_stderr(sq);
        const double value = std::sqrt(std::max(mean, 0.0));
        return {value, value > 0.0 ? se / (2.0 * value) : std::sqrt(se)};
    }
    if (marginal.dim() != 1)
        throw invalid_input_error("l2_distance: quadrature mode requires a 1-D marginal");
    const double lo = marginal.lo[0];
    const double hi = marginal.hi[0];
    Eigen::VectorXd x(1);
    auto sq = [&](double t) mutable {
        x[0] = t;
        const double d = f(x) - g(x);
        if (!std::isfinite(d)) throw invalid_input_error("l2_distance: non-finite values");
        return d * d;
    };
    return {std::sqrt(std::max(integrate(sq, lo, hi, {1e-12, 52}) / (hi - lo), 0.0)), 0.0};
}

MomentInfo make_moment_info(const RegressionModel& model, double epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw invalid_input_error("make_moment_info: epsilon must be > 0");
    return {epsilon, response_moment(model, 1.0 + epsilon), model.bound};
}

BoundCheck comparison_gap(const RealFunction& f, const RegressionModel& model,
                          const ScaleParam& sigma, const MomentInfo& info, std::size_t mc_n,
                          std::uint64_t seed) {
    require_finite_moment(info, "comparison_gap");
    require_theory_floor(sigma, info.M, "comparison_gap");
    const XiSample sample = draw_xi(f, model, sigma, info.M, mc_n, seed);
    const auto [mean, se] = mean_stderr(sample.gap_term);
    BoundCheck check;
    check.label = "comparison_gap";
    check.lhs = std::abs(mean);
    check.mc_stderr = se;
    check.rhs = comparison_constant(info) / std::pow(sigma.value(), info.epsilon);
    check.satisfied = check.lhs <= check.rhs + 3.0 * check.mc_stderr;
    return check;
}

BoundCheck variance_bound_check(const RealFunction& f, const RegressionModel& model,
                                const ScaleParam& sigma, const MomentInfo& info, std::size_t mc_n,
                                std::uint64_t seed) {
    require_finite_moment(info, "variance_bound_check");
    require_theory_floor(sigma, info.M, "variance_bound_check");
    const XiSample sample = draw_xi(f, model, sigma, info.M, mc_n, seed);
    std::vector<double> sq(sample.xi.size());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = sample.xi[i] * sample.xi[i];
    const auto [mean, se] = mean_stderr(sq);
    const double beta = std::max(info.epsilon - 1.0, 0.0) / (info.epsilon + 1.0);
    const double dist =
        l2_distance(f, [&](const Eigen::VectorXd& x) { return model.truth(x); }, model.marginal,
                    model.marginal.dim() == 1 ? L2Mode{QuadratureMode{}}
                                              : L2Mode{MonteCarloMode{mc_n, derive_seed(seed, 2)}})
            .value;
    BoundCheck check;
    check.label = "variance_bound";
    check.lhs = mean;
    check.mc_stderr = se;
    check.rhs = variance_c1(info) * std::pow(dist * dist, beta) +
                variance_c2(info) * std::pow(sigma.value(), 1.0 - info.epsilon);
    check.satisfied = check.lhs <= check.rhs + 3.0 * check.mc_stderr;
    return check;
}

BoundCheck relaxed_bernstein_check(const RealFunction& f, const RegressionModel& model,
                                   const ScaleParam& sigma, const MomentInfo& info,
                                   std::size_t mc_n, std::uint64_t seed) {
    require_finite_moment(info, "relaxed_bernstein_check");
    require_theory_floor(sigma, info.M, "relaxed_bernstein_check");
    const XiSample sample = draw_xi(f, model, sigma, info.M, mc_n, seed);
    std::vector<double> sq(sample.xi.size());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = sample.xi[i] * sample.xi[i];
    const auto [mean_sq, se_sq] = mean_stderr(sq);
    const auto [mean_xi, se_xi] = mean_stderr(sample.xi);
    const double beta = std::max(info.epsilon - 1.0, 0.0) / (info.epsilon + 1.0);
    const double c1 = variance_c1(info);
    BoundCheck check;
    check.label = "relaxed_bernstein";
    check.lhs = mean_sq;
    check.mc_stderr = se_sq;
    check.rhs = c1 * std::pow(std::max(mean_xi, 0.0), beta) +
                c1 * std::pow(comparison_constant(info) * std::pow(sigma.value(), -info.epsilon),
                              beta) +
                variance_c2(info) * std::pow(sigma.value(), 1.0 - info.epsilon);
    check.satisfied = check.lhs <= check.rhs + 3.0 * check.mc_stderr;
    check.skipped = mean_xi < -3.0 * se_xi;  // E xi >= 0 not credible at this sample
    return check;
}

BoundCheck markov_tail_check(const RegressionModel& model, const ScaleParam& sigma,
                             const MomentInfo& info, std::size_t mc_n, std::uint64_t seed) {
    require_finite_moment(info, "markov_tail_check");
    if (mc_n < 2) throw invalid_input_error("markov_tail_check: mc_n must be >= 2");
    const Dataset data = generate_dataset(model, mc_n, seed);
    std::size_t hits = 0;
    for (Eigen::Index i = 0; i < data.ys.size(); ++i)
        if (std::abs(data.ys[i]) >= 0.5 * sigma.value()) ++hits;
    const double n = static_cast<double>(mc_n);
    const double phat = static_cast<double>(hits) / n;
    BoundCheck check;
    check.label = "markov_tail";
    check.lhs = phat;
    check.mc_stderr = std::sqrt(phat * (1.0 - phat) / n);
    check.rhs = std::pow(2.0, 1.0 + info.epsilon) * info.moment_1pe /
                std::pow(sigma.value(), 1.0 + info.epsilon);
    check.satisfied = check.lhs <= check.rhs + 3.0 * check.mc_stderr;
    return check;
}

}  // namespace hubreg
