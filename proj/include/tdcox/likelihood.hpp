#pragma once

/*
 * Breslow partial likelihood for counting-process data.
 *
 * Everything here works with the *scaled* negative log partial likelihood
 *
 *     f(beta) = -l(beta) / n_rows,
 *     l(beta) = sum_i [ sum_{s in D_i} x_s.beta - d_i log sum_{j in R_i} exp(x_j.beta) ],
 *
 * where i runs over the distinct event times. The 1/n_rows factor makes
 * lambda values comparable across sample sizes.
 */

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "survdata.hpp"

namespace tdcox {

/**
 * Design matrix + risk sets for one dataset. Immutable once built; share it
 * freely between threads.
 *
 * When built with standardization, `x` holds the standardized retained columns
 * and `scaling` records how to get back to the raw scale.
 */
struct LikelihoodContext {
    Eigen::MatrixXd x;
    RiskIndex risk;
    Eigen::VectorXd death_sum; // sum of x_s over all event rows
    std::optional<ScalingInfo> scaling;
    std::vector<std::string> column_names; // retained columns, in x order

    Eigen::Index n_rows() const { return x.rows(); }
    Eigen::Index n_cols() const { return x.cols(); }
    Eigen::Index n_events() const { return static_cast<Eigen::Index>(risk.death_rows.size()); }
    double scale() const { return 1.0 / static_cast<double>(x.rows()); }
};

enum class Scaling { standardize, none };

namespace detail {

inline LikelihoodContext assemble_context(Eigen::MatrixXd x, const Dataset& d,
                                          std::optional<ScalingInfo> scaling,
                                          std::vector<std::string> names)
{
    LikelihoodContext ctx;
    ctx.risk = build_risk_index(d);
    ctx.death_sum = Eigen::VectorXd::Zero(x.cols());
    for (auto r : ctx.risk.death_rows) ctx.death_sum += x.row(r).transpose();
    ctx.x = std::move(x);
    ctx.scaling = std::move(scaling);
    ctx.column_names = std::move(names);
    return ctx;
}

} // namespace detail

inline LikelihoodContext make_context(const Dataset& d, Scaling mode = Scaling::standardize)
{
    if (mode == Scaling::none) return detail::assemble_context(d.x(), d, std::nullopt, d.column_names());
    auto [std_data, info] = standardize(d);
    return detail::assemble_context(std_data.x(), d, std::move(info), std_data.column_names());
}

namespace detail {

inline void require_same_columns(const std::vector<std::string>& expected,
                                 const std::vector<std::string>& got)
{
    if (expected.empty() || expected == got) return;
    std::string want, have;
    for (const auto& c : expected) want += (want.empty() ? "" : ",") + c;
    for (const auto& c : got) have += (have.empty() ? "" : ",") + c;
    throw ValidationError("covariate columns do not match the fitted model: expected [" + want +
                          "], got [" + have + "]");
}

} // namespace detail

/// Context for `d` using a transform estimated elsewhere (e.g. on training data).
inline LikelihoodContext make_context(const Dataset& d, const ScalingInfo& scaling)
{
    detail::require_same_columns(scaling.column_names, d.column_names());
    std::vector<std::string> names;
    for (auto j : scaling.retained()) names.push_back(d.column_names()[static_cast<std::size_t>(j)]);
    return detail::assemble_context(scaling.apply(d.x()), d, scaling, std::move(names));
}

namespace detail {

/// Returns f(beta); when `grad` is non-null also writes grad f(beta).
inline double evaluate_nll(const Eigen::VectorXd& beta, const LikelihoodContext& ctx,
                           Eigen::VectorXd* grad)
{
    require(beta.size() == ctx.n_cols(),
            "coefficient vector has length " + std::to_string(beta.size()) + ", expected " +
                std::to_string(ctx.n_cols()));
    const Eigen::VectorXd eta = ctx.x * beta;
    if (!eta.allFinite()) throw NumericError("non-finite linear predictor");

    const auto& risk = ctx.risk;
    const auto k = risk.n_event_times();
    double ll = 0.0;
    Eigen::VectorXd row_weight;
    if (grad) row_weight = Eigen::VectorXd::Zero(ctx.n_rows());

    for (std::size_t i = 0; i < k; ++i) {
        const auto members = risk.at_risk(i);
        double shift = -std::numeric_limits<double>::infinity();
        for (auto j : members) shift = std::max(shift, eta(j));
        double denom = 0.0;
        for (auto j : members) denom += std::exp(eta(j) - shift);
        const double d_i = risk.tie_count(i);
        for (auto s : risk.deaths(i)) ll += eta(s);
        ll -= d_i * (shift + std::log(denom));
        if (grad) {
            const double c = d_i / denom;
            for (auto j : members) row_weight(j) += c * std::exp(eta(j) - shift);
        }
    }
    const double value = -ll * ctx.scale();
    if (!std::isfinite(value)) throw NumericError("non-finite partial likelihood");
    if (grad) {
        *grad = (ctx.x.transpose() * row_weight - ctx.death_sum) * ctx.scale();
        if (!grad->allFinite()) throw NumericError("non-finite gradient");
    }
    return value;
}

} // namespace detail

/// -l(beta) / n_rows with Breslow ties. Throws NumericError on overflow.
inline double neg_log_partial_likelihood(const Eigen::VectorXd& beta, const LikelihoodContext& ctx)
{
    return detail::evaluate_nll(beta, ctx, nullptr);
}

/// Gradient of neg_log_partial_likelihood (no penalty terms).
inline Eigen::VectorXd gradient(const Eigen::VectorXd& beta, const LikelihoodContext& ctx)
{
    Eigen::VectorXd g;
    detail::evaluate_nll(beta, ctx, &g);
    return g;
}

inline double value_and_gradient(const Eigen::VectorXd& beta, const LikelihoodContext& ctx,
                                 Eigen::VectorXd& grad)
{
    return detail::evaluate_nll(beta, ctx, &grad);
}

/// Unscaled log partial likelihood l(beta).
inline double log_partial_likelihood(const Eigen::VectorXd& beta, const LikelihoodContext& ctx)
{
    return -neg_log_partial_likelihood(beta, ctx) * static_cast<double>(ctx.n_rows());
}

/**
 * Classic right-censored form: one row per subject, risk set {j : t_j >= t_i},
 * every event contributes its own term. Evaluated through a reverse cumulative
 * sum over time-sorted rows. Returns -l(beta) / n. Only meaningful without
 * tied event times, where it coincides with the Breslow form.
 */
inline double neg_log_partial_likelihood_right_censored(const Eigen::VectorXd& beta,
                                                        const Eigen::MatrixXd& x,
                                                        const Eigen::VectorXd& time,
                                                        const Eigen::VectorXi& status)
{
    const auto n = x.rows();
    const Eigen::VectorXd eta = x * beta;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return time(a) > time(b); });
    const double shift = eta.maxCoeff();
    double ll = 0.0;
    double cum = 0.0;
    for (std::size_t pos = 0; pos < order.size();) {
        // rows sharing a time enter the risk set together
        auto end = pos;
        while (end < order.size() && time(order[end]) == time(order[pos])) {
            cum += std::exp(eta(order[end]) - shift);
            ++end;
        }
        for (auto q = pos; q < end; ++q)
            if (status(order[q]) == 1) ll += eta(order[q]) - shift - std::log(cum);
        pos = end;
    }
    return -ll / static_cast<double>(n);
}

} // namespace tdcox
