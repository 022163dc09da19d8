#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hubreg/errors.hpp"

namespace hubreg {

// Scale parameter of the Huber loss: the residual magnitude where the
// quadratic branch hands over to the linear one. Any positive value is a
// valid loss parameter; the comparison/variance bounds additionally assume
// sigma > max{2M, 1}, which callers check via exceeds_theory_floor.
class ScaleParam {
  public:
    explicit ScaleParam(double value) : value_(value) {
        if (!std::isfinite(value) || value <= 0.0)
            throw invalid_input_error("ScaleParam: sigma must be finite and > 0");
    }
    double value() const { return value_; }
    bool exceeds_theory_floor(double M) const { return value_ > std::max(2.0 * M, 1.0); }

  private:
    double value_;
};

// t^2 inside [-sigma, sigma], 2*sigma*|t| - sigma^2 outside; C^1 at the joint
// (both branches and their derivatives agree at |t| = sigma).
inline double huber(double t, const ScaleParam& sigma) {
    if (!std::isfinite(t)) throw invalid_input_error("huber: t must be finite");
    const double s = sigma.value();
    const double a = std::abs(t);
    return a <= s ? t * t : 2.0 * s * a - s * s;
}

inline double huber_deriv(double t, const ScaleParam& sigma) {
    if (!std::isfinite(t)) throw invalid_input_error("huber_deriv: t must be finite");
    const double s = sigma.value();
    if (std::abs(t) <= s) return 2.0 * t;
    return t > 0.0 ? 2.0 * s : -2.0 * s;
}

// IRLS weight min(1, sigma/|t|), continuous, with the t=0 limit pinned to 1
// so that huber_deriv(t) == 2*t*huber_weight(t) for every t.
inline double huber_weight(double t, const ScaleParam& sigma) {
    if (!std::isfinite(t)) throw invalid_input_error("huber_weight: t must be finite");
    const double a = std::abs(t);
    const double s = sigma.value();
    return a <= s ? 1.0 : s / a;
}

inline double empirical_risk(const std::vector<double>& predictions,
                             const std::vector<double>& targets, const ScaleParam& sigma) {
    if (predictions.empty() || targets.empty())
        throw empty_dataset_error("empirical_risk: empty dataset");
    if (predictions.size() != targets.size())
        throw invalid_input_error("empirical_risk: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        acc += huber(targets[i] - predictions[i], sigma);
    return acc / static_cast<double>(predictions.size());
}

}  // namespace hubreg
