#include "hubreg/hypothesis.hpp"

#include <algorithm>
#include <cmath>

#include "hubreg/errors.hpp"

namespace hubreg {

HypothesisSpace::HypothesisSpace(std::vector<Basis> basis, double radius, double bound,
                                 double capacity_q, Box domain)
    : basis_(std::move(basis)),
      radius_(radius),
      bound_(bound),
      capacity_q_(capacity_q),
      domain_(std::move(domain)) {
    if (basis_.empty()) throw invalid_input_error("HypothesisSpace: need at least one basis function");
    if (!(radius_ > 0.0) || !(bound_ > 0.0) || !(capacity_q_ > 0.0))
        throw invalid_input_error("HypothesisSpace: radius, bound, q must be > 0");
    for (const auto& b : basis_) {
        if (b.is_constant) continue;
        if (b.center.size() != domain_.dim() || !(b.inv_h_sq > 0.0) || !b.center.allFinite())
            throw invalid_input_error("HypothesisSpace: malformed basis function");
    }
}

void HypothesisSpace::eval_basis(const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> out) const {
    for (int j = 0; j < size(); ++j) {
        const auto& b = basis_[static_cast<std::size_t>(j)];
        out[j] = b.is_constant ? 1.0 : std::exp(-(x - b.center).squaredNorm() * b.inv_h_sq);
    }
}

double HypothesisSpace::eval_raw(const Eigen::VectorXd& coeffs, const Eigen::VectorXd& x) const {
    double acc = 0.0;
    for (int j = 0; j < size(); ++j) {
        const auto& b = basis_[static_cast<std::size_t>(j)];
        acc += coeffs[j] * (b.is_constant ? 1.0 : std::exp(-(x - b.center).squaredNorm() * b.inv_h_sq));
    }
    return acc;
}

SpacePtr make_space(int centers_per_axis, double bandwidth, double radius, double bound,
                    double capacity_q, const Box& domain) {
    if (centers_per_axis < 1) throw invalid_input_error("make_space: centers_per_axis must be >= 1");
    if (!(bandwidth > 0.0)) throw invalid_input_error("make_space: bandwidth must be > 0");
    if (!(radius > 0.0) || !(bound > 0.0) || !(capacity_q > 0.0))
        throw invalid_input_error("make_space: radius, bound, q must be > 0");
    const int d = domain.dim();
    double count = std::pow(static_cast<double>(centers_per_axis), d);
    if (count > 4096.0) throw invalid_input_error("make_space: center grid too large");

    // Per-axis center coordinates: midpoint for a single center, inclusive
    // endpoints otherwise.
    std::vector<std::vector<double>> axes(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        auto& axis = axes[static_cast<std::size_t>(j)];
        if (centers_per_axis == 1) {
            axis.push_back(0.5 * (domain.lo[j] + domain.hi[j]));
        } else {
            for (int i = 0; i < centers_per_axis; ++i)
                axis.push_back(domain.lo[j] +
                               (domain.hi[j] - domain.lo[j]) * i / (centers_per_axis - 1.0));
        }
    }

    std::vector<HypothesisSpace::Basis> basis;
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    const double inv_h_sq = 1.0 / (bandwidth * bandwidth);
    for (;;) {
        Eigen::VectorXd c(d);
        for (int j = 0; j < d; ++j) c[j] = axes[static_cast<std::size_t>(j)][static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
        basis.push_back({false, std::move(c), inv_h_sq});
        int j = d - 1;
        for (; j >= 0; --j) {
            if (++idx[static_cast<std::size_t>(j)] < centers_per_axis) break;
            idx[static_cast<std::size_t>(j)] = 0;
        }
        if (j < 0) break;
    }
    basis.push_back({true, Eigen::VectorXd(), 0.0});
    return std::make_shared<HypothesisSpace>(std::move(basis), radius, bound, capacity_q, domain);
}

SpacePtr constant_space(double radius, double bound, double capacity_q, const Box& domain) {
    std::vector<HypothesisSpace::Basis> basis{{true, Eigen::VectorXd(), 0.0}};
    return std::make_shared<HypothesisSpace>(std::move(basis), radius, bound, capacity_q, domain);
}

double evaluate(const Estimator& est, const Eigen::VectorXd& x) {
    if (!est.space->domain().contains(x))
        throw out_of_domain_error("evaluate: x outside the space domain");
    const double v = est.space->eval_raw(est.coeffs, x);
    return std::clamp(v, -est.space->bound(), est.space->bound());
}

double evaluate_raw(const Estimator& est, const Eigen::VectorXd& x) {
    if (!est.space->domain().contains(x))
        throw out_of_domain_error("evaluate_raw: x outside the space domain");
    return est.space->eval_raw(est.coeffs, x);
}

namespace {

// Uniform grid over the domain, eval_points_per_axis per axis, flattened.
Eigen::MatrixXd domain_grid(const Box& domain, int per_axis) {
    const int d = domain.dim();
    const long total = static_cast<long>(std::pow(static_cast<double>(per_axis), d));
    Eigen::MatrixXd pts(total, d);
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    for (long r = 0; r < total; ++r) {
        for (int j = 0; j < d; ++j) {
            const double t = per_axis == 1 ? 0.5 : idx[static_cast<std::size_t>(j)] / (per_axis - 1.0);
            pts(r, j) = domain.lo[j] + (domain.hi[j] - domain.lo[j]) * t;
        }
        int j = d - 1;
        for (; j >= 0; --j) {
            if (++idx[static_cast<std::size_t>(j)] < per_axis) break;
            idx[static_cast<std::size_t>(j)] = 0;
        }
    }
    return pts;
}

}  // namespace

int covering_number_estimate(const HypothesisSpace& space, double eta, int coeff_grid_resolution,
                             int eval_points_per_axis) {
    if (!(eta > 0.0)) throw invalid_input_error("covering_number_estimate: eta must be > 0");
    if (coeff_grid_resolution < 2 || eval_points_per_axis < 1)
        throw invalid_input_error("covering_number_estimate: grids must be nonempty");
    const int B = space.size();
    const double total = std::pow(static_cast<double>(coeff_grid_resolution), B);
    if (total > 2e6)
        throw invalid_input_error(
            "covering_number_estimate: coefficient grid too large; use fewer basis functions or a "
            "coarser resolution");

    // Enumerate coefficient grid points inside the radius ball.
    const double R = space.radius();
    std::vector<Eigen::VectorXd> coeffs;
    std::vector<int> idx(static_cast<std::size_t>(B), 0);
    const long cells = static_cast<long>(total);
    for (long r = 0; r < cells; ++r) {
        Eigen::VectorXd c(B);
        for (int j = 0; j < B; ++j)
            c[j] = -R + 2.0 * R * idx[static_cast<std::size_t>(j)] / (coeff_grid_resolution - 1.0);
        if (c.norm() <= R + 1e-12) coeffs.push_back(std::move(c));
        int j = B - 1;
        for (; j >= 0; --j) {
            if (++idx[static_cast<std::size_t>(j)] < coeff_grid_resolution) break;
            idx[static_cast<std::size_t>(j)] = 0;
        }
    }

    // Clipped function values on the evaluation grid.
    const Eigen::MatrixXd grid = domain_grid(space.domain(), eval_points_per_axis);
    const long G = grid.rows();
    const long N = static_cast<long>(coeffs.size());
    const double M = space.bound();
    Eigen::MatrixXd vals(N, G);
    Eigen::VectorXd row(B);
    for (long g = 0; g < G; ++g) {
        space.eval_basis(grid.row(g).transpose(), row);
        for (long i = 0; i < N; ++i)
            vals(i, g) = std::clamp(coeffs[static_cast<std::size_t>(i)].dot(row), -M, M);
    }

    auto within = [&](long i, long k) {
        for (long g = 0; g < G; ++g)
            if (std::abs(vals(i, g) - vals(k, g)) > eta) return false;
        return true;
    };

    // Greedy max-coverage: repeatedly take the uncovered grid function whose
    // eta-ball covers the most uncovered points. Near-optimal on these small
    // instances, and the counts it produces are what the capacity sanity
    // tests consume.
    std::vector<bool> covered(static_cast<std::size_t>(N), false);
    std::vector<long> uncovered(static_cast<std::size_t>(N));
    for (long i = 0; i < N; ++i) uncovered[static_cast<std::size_t>(i)] = i;
    int count = 0;
    while (!uncovered.empty()) {
        long best = uncovered.front();
        long best_cover = -1;
        for (long cand : uncovered) {
            long cover = 0;
            for (long other : uncovered)
                if (within(cand, other)) ++cover;
            if (cover > best_cover) {
                best_cover = cover;
                best = cand;
            }
        }
        std::vector<long> still;
        still.reserve(uncovered.size());
        for (long other : uncovered) {
            if (within(best, other))
                covered[static_cast<std::size_t>(other)] = true;
            else
                still.push_back(other);
        }
        uncovered.swap(still);
        ++count;
    }
    return count;
}

}  // namespace hubreg
