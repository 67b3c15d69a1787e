#pragma once

/*
 * Proximal gradient descent for the elastic-net penalized Cox objective
 *
 *     Omega(beta) = f(beta) + lambda * (alpha |beta|_1 + 0.5 (1 - alpha) |beta|^2)
 *
 * split as g = f + ridge (smooth) and h = lambda alpha |.|_1 (prox).
 * Steps come from the Barzilai-Borwein rule and are backtracked until the
 * objective drops by a sufficient amount, so the objective trace never
 * increases.
 */

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "likelihood.hpp"
#include "penalty.hpp"

namespace tdcox {

struct SolverConfig {
    int max_iter = 10000;
    double tol = 1e-7;       // on max|delta beta| / max(1, max|beta|)
    double kkt_tol = 1e-4;
    double backtrack = 0.5;  // step shrink factor
    double armijo = 1e-4;    // sufficient decrease constant
    double step_init = 1.0;
    double step_min = 1e-10;
    double step_max = 1e10;

    void validate() const
    {
        detail::require(max_iter >= 1, "max_iter must be >= 1");
        detail::require(tol > 0.0 && tol < 1.0, "tol must lie in (0, 1)");
        detail::require(kkt_tol > 0.0, "kkt_tol must be > 0");
        detail::require(backtrack > 0.0 && backtrack < 1.0, "backtrack factor must lie in (0, 1)");
        detail::require(armijo > 0.0 && armijo < 0.5, "armijo constant must lie in (0, 0.5)");
        detail::require(step_min > 0.0 && step_min <= step_init && step_init <= step_max,
                        "step bounds must satisfy 0 < step_min <= step_init <= step_max");
    }
};

struct KktReport {
    std::vector<Eigen::Index> violating;
    double max_violation = 0.0;
    bool ok = true;
};

struct FitResult {
    Eigen::VectorXd beta;          // standardized scale (context columns)
    Eigen::VectorXd beta_original; // raw scale, original column order
    std::vector<double> objective_trace; // Omega at the start and after each accepted step
    int iterations = 0;
    bool converged = false;
    bool kkt_ok = false;
    KktReport kkt;
    PenaltyParams params;
    Eigen::Index n_nonzero = 0;
};

inline double objective(const Eigen::VectorXd& beta, const LikelihoodContext& ctx,
                        const PenaltyParams& p)
{
    return neg_log_partial_likelihood(beta, ctx) + elastic_net_penalty(beta, p);
}

/// Gradient of the smooth part: likelihood term plus ridge term.
inline Eigen::VectorXd smooth_gradient(const Eigen::VectorXd& beta, const LikelihoodContext& ctx,
                                       const PenaltyParams& p)
{
    return gradient(beta, ctx) + p.lambda * (1.0 - p.alpha) * beta;
}

/**
 * Subgradient optimality check. For beta_i != 0 the smooth gradient must
 * cancel the l1 subgradient; for beta_i == 0 it must lie inside
 * [-lambda alpha, lambda alpha].
 */
inline KktReport kkt_check(const Eigen::VectorXd& beta, const LikelihoodContext& ctx,
                           const PenaltyParams& p, double kkt_tol)
{
    const Eigen::VectorXd g = smooth_gradient(beta, ctx, p);
    const double l1 = p.lambda * p.alpha;
    KktReport rep;
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
        double v = 0.0;
        if (beta(i) != 0.0) {
            v = std::abs(g(i) + l1 * (beta(i) > 0 ? 1.0 : -1.0));
        } else {
            v = std::max(0.0, std::abs(g(i)) - l1);
        }
        rep.max_violation = std::max(rep.max_violation, v);
        if (v > kkt_tol) rep.violating.push_back(i);
    }
    rep.ok = rep.violating.empty();
    return rep;
}

inline KktReport kkt_check(const FitResult& fit, const LikelihoodContext& ctx, double kkt_tol = 1e-4)
{
    return kkt_check(fit.beta, ctx, fit.params, kkt_tol);
}

/**
 * Smallest lambda at which beta = 0 is optimal:
 *
 *   (1 / (N alpha')) max_j | sum_i [ sum_{s in D_i} x_sj - d_i / |R_i| sum_{l in R_i} x_lj ] |
 *
 * with alpha' = max(alpha, 0.001).
 */
inline double lambda_max(const LikelihoodContext& ctx, double alpha)
{
    detail::require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1]");
    const auto& risk = ctx.risk;
    Eigen::VectorXd score = Eigen::VectorXd::Zero(ctx.n_cols());
    Eigen::VectorXd risk_total(ctx.n_cols());
    for (std::size_t i = 0; i < risk.n_event_times(); ++i) {
        for (auto s : risk.deaths(i)) score += ctx.x.row(s).transpose();
        risk_total.setZero();
        const auto members = risk.at_risk(i);
        for (auto j : members) risk_total += ctx.x.row(j).transpose();
        score -= (static_cast<double>(risk.tie_count(i)) / static_cast<double>(members.size())) *
                 risk_total;
    }
    if (score.size() == 0) return 0.0;
    const double a = std::max(alpha, 0.001);
    return score.cwiseAbs().maxCoeff() / (static_cast<double>(ctx.n_rows()) * a);
}

struct LambdaGrid {
    std::vector<double> values; // strictly decreasing, values[0] == lambda_max
    double lambda_max = 0.0;
    double epsilon = 0.0;
    int m = 0;
    double lamfract = 1.0;
};

/// lambda_i = lmax * epsilon^(i / (m - 1)), i = 0..m-1, truncated to the
/// first ceil(lamfract * m) values. epsilon defaults to 1e-4 when n_rows >= p,
/// else 1e-2.
inline LambdaGrid make_lambda_grid(double lmax, Eigen::Index n_rows, Eigen::Index p, int m = 100,
                                   double lamfract = 1.0,
                                   std::optional<double> epsilon_override = std::nullopt)
{
    detail::require(lmax > 0.0 && std::isfinite(lmax), "lambda_max must be positive and finite");
    detail::require(m >= 1, "grid length m must be >= 1");
    detail::require(lamfract > 0.0 && lamfract <= 1.0, "lamfract must lie in (0, 1]");
    LambdaGrid grid;
    grid.lambda_max = lmax;
    grid.m = m;
    grid.lamfract = lamfract;
    grid.epsilon = epsilon_override.value_or(n_rows >= p ? 1e-4 : 1e-2);
    detail::require(grid.epsilon > 0.0 && grid.epsilon < 1.0, "epsilon must lie in (0, 1)");
    // slack so that e.g. 0.6 * 100 = 60.000000000000007 keeps 60 values
    const auto keep = std::max(1, static_cast<int>(std::ceil(lamfract * m - 1e-9)));
    for (int i = 0; i < keep; ++i) {
        const double frac = m > 1 ? static_cast<double>(i) / static_cast<double>(m - 1) : 0.0;
        grid.values.push_back(lmax * std::pow(grid.epsilon, frac));
    }
    return grid;
}

/**
 * Minimize Omega for one (alpha, lambda), starting from `init` (zero if absent).
 * Non-convergence is reported through `converged`, not thrown. Likelihood
 * overflow throws NumericError.
 */
inline FitResult fit(const LikelihoodContext& ctx, const PenaltyParams& params,
                     const SolverConfig& cfg = {},
                     const std::optional<Eigen::VectorXd>& init = std::nullopt)
{
    params.validate();
    cfg.validate();
    const auto p = ctx.n_cols();
    Eigen::VectorXd beta = init.value_or(Eigen::VectorXd::Zero(p));
    detail::require(beta.size() == p, "initial coefficient vector has length " +
                                          std::to_string(beta.size()) + ", expected " +
                                          std::to_string(p));

    const double ridge = params.lambda * (1.0 - params.alpha);
    Eigen::VectorXd grad;
    double obj = value_and_gradient(beta, ctx, grad) + elastic_net_penalty(beta, params);
    grad += ridge * beta;

    FitResult res;
    res.params = params;
    res.objective_trace.push_back(obj);

    // zero start already optimal (lambda at or above lambda_max); the slack
    // absorbs rounding between the lambda_max sum and the gradient sum
    if (params.alpha > 0.0 && (beta.array() == 0.0).all() &&
        (p == 0 || grad.cwiseAbs().maxCoeff() <= params.lambda * params.alpha * (1.0 + 1e-10))) {
        res.converged = true;
        res.beta = beta;
        res.beta_original = ctx.scaling ? unstandardize_coefs(beta, *ctx.scaling) : beta;
        res.kkt = kkt_check(beta, ctx, params, cfg.kkt_tol);
        res.kkt_ok = res.kkt.ok;
        return res;
    }

    double step = cfg.step_init;
    Eigen::VectorXd s_prev, y_prev;
    Eigen::VectorXd cand(p), cand_grad(p);

    auto rel_change = [](const Eigen::VectorXd& delta, const Eigen::VectorXd& b) {
        const double scale = std::max(1.0, b.size() ? b.cwiseAbs().maxCoeff() : 0.0);
        return (delta.size() ? delta.cwiseAbs().maxCoeff() : 0.0) / scale;
    };

    for (int it = 1; it <= cfg.max_iter; ++it) {
        if (s_prev.size()) {
            // BB1; keep the previous step when curvature is not positive
            const double sy = s_prev.dot(y_prev);
            if (sy > 0.0) step = std::clamp(s_prev.squaredNorm() / sy, cfg.step_min, cfg.step_max);
        }

        double cand_obj = 0.0;
        bool accepted = false;
        Eigen::VectorXd delta;
        for (;;) {
            cand = prox(beta - step * grad, step, params);
            delta = cand - beta;
            bool finite = true;
            try {
                cand_obj = value_and_gradient(cand, ctx, cand_grad) + elastic_net_penalty(cand, params);
            } catch (const NumericError&) {
                finite = false; // overshoot; a shorter step will do
            }
            if (finite && cand_obj <= obj - (cfg.armijo / step) * delta.squaredNorm()) {
                accepted = true;
                break;
            }
            if (step * cfg.backtrack < cfg.step_min) break;
            step *= cfg.backtrack;
        }
        res.iterations = it;
        if (!accepted) {
            // no decrease even at the smallest step: stalled at rounding level
            res.converged = rel_change(delta, cand) < cfg.tol;
            break;
        }

        cand_grad += ridge * cand;
        s_prev = delta;
        y_prev = cand_grad - grad;
        beta.swap(cand);
        grad.swap(cand_grad);
        obj = cand_obj;
        res.objective_trace.push_back(obj);

        if (rel_change(delta, beta) < cfg.tol) {
            res.converged = true;
            break;
        }
    }

    res.beta = beta;
    res.n_nonzero = (beta.array() != 0.0).count();
    res.beta_original = ctx.scaling ? unstandardize_coefs(beta, *ctx.scaling) : beta;
    res.kkt = kkt_check(beta, ctx, params, cfg.kkt_tol);
    res.kkt_ok = res.kkt.ok;
    return res;
}

struct PathResult {
    std::vector<double> lambdas;
    double alpha = 0.0;
    Eigen::MatrixXd beta;          // p x L, standardized scale
    Eigen::MatrixXd beta_original; // original p x L
    std::vector<Eigen::Index> n_nonzero;
    std::vector<bool> converged;
    std::vector<bool> kkt_ok;
    std::vector<std::string> errors; // empty string when the fit succeeded
};

/// Fits along the grid from the largest lambda, warm-starting each fit at the
/// previous solution. A numeric failure at one lambda is recorded and the path
/// continues from the last good solution.
inline PathResult fit_path(const LikelihoodContext& ctx, double alpha, const LambdaGrid& grid,
                           const SolverConfig& cfg = {})
{
    for (std::size_t i = 1; i < grid.values.size(); ++i)
        detail::require(grid.values[i] < grid.values[i - 1], "lambda grid must be strictly decreasing");
    const auto p = ctx.n_cols();
    const auto L = static_cast<Eigen::Index>(grid.values.size());
    const auto p_orig = ctx.scaling ? ctx.scaling->original_cols() : p;
    PathResult path;
    path.alpha = alpha;
    path.lambdas = grid.values;
    path.beta = Eigen::MatrixXd::Zero(p, L);
    path.beta_original = Eigen::MatrixXd::Zero(p_orig, L);
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(p);
    for (Eigen::Index l = 0; l < L; ++l) {
        try {
            auto f = fit(ctx, {alpha, grid.values[static_cast<std::size_t>(l)]}, cfg, warm);
            path.beta.col(l) = f.beta;
            path.beta_original.col(l) = f.beta_original;
            path.n_nonzero.push_back(f.n_nonzero);
            path.converged.push_back(f.converged);
            path.kkt_ok.push_back(f.kkt_ok);
            path.errors.emplace_back();
            warm = f.beta;
        } catch (const NumericError& e) {
            path.beta.col(l).setConstant(std::numeric_limits<double>::quiet_NaN());
            path.beta_original.col(l).setConstant(std::numeric_limits<double>::quiet_NaN());
            path.n_nonzero.push_back(0);
            path.converged.push_back(false);
            path.kkt_ok.push_back(false);
            path.errors.emplace_back(e.what());
        }
    }
    return path;
}

} // namespace tdcox
