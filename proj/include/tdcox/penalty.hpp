#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>

#include "errors.hpp"

namespace tdcox {

/// Elastic-net mixing (alpha: 1 = lasso, 0 = ridge) and overall strength.
struct PenaltyParams {
    double alpha = 1.0;
    double lambda = 0.0;

    void validate() const
    {
        detail::require(alpha >= 0.0 && alpha <= 1.0,
                        "alpha must lie in [0, 1], got " + std::to_string(alpha));
        detail::require(lambda >= 0.0 && std::isfinite(lambda),
                        "lambda must be finite and >= 0, got " + std::to_string(lambda));
    }
};

/// lambda * (alpha * |beta|_1 + 0.5 * (1 - alpha) * |beta|_2^2)
inline double elastic_net_penalty(const Eigen::VectorXd& beta, const PenaltyParams& p)
{
    return p.lambda * (p.alpha * beta.lpNorm<1>() + 0.5 * (1.0 - p.alpha) * beta.squaredNorm());
}

inline double soft_threshold(double x, double t)
{
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

/**
 * Proximal map of gamma * lambda * alpha * |.|_1. The ridge part of the
 * penalty is smooth and handled by the gradient step, so it does not
 * appear here.
 */
inline Eigen::VectorXd prox(const Eigen::VectorXd& v, double gamma, const PenaltyParams& p)
{
    const double t = gamma * p.lambda * p.alpha;
    return v.unaryExpr([t](double x) { return soft_threshold(x, t); });
}

} // namespace tdcox
