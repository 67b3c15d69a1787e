#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>
#include <map>
#include <vector>

#include "errors.hpp"
#include "likelihood.hpp"
#include "survdata.hpp"

namespace tdcox {

/// Breslow cumulative baseline hazard, a right-continuous step function that
/// jumps at each event time.
struct BaselineHazard {
    std::vector<double> times;
    std::vector<double> cumhaz;

    /// H0(t); zero before the first event time.
    double at(double t) const
    {
        const auto it = std::upper_bound(times.begin(), times.end(), t);
        if (it == times.begin()) return 0.0;
        return cumhaz[static_cast<std::size_t>(it - times.begin() - 1)];
    }
};

/// H0(t) = sum_{t_i <= t} d_i / sum_{j in R_i} exp(x_j . beta), with beta on
/// the context's (standardized) scale.
inline BaselineHazard baseline_cumhaz(const Eigen::VectorXd& beta, const LikelihoodContext& ctx)
{
    detail::require(beta.size() == ctx.n_cols(), "coefficient length does not match context");
    const Eigen::VectorXd risk_score = (ctx.x * beta).array().exp();
    if (!risk_score.allFinite()) throw NumericError("relative risk overflow in baseline hazard");
    BaselineHazard bh;
    double total = 0.0;
    for (std::size_t i = 0; i < ctx.risk.n_event_times(); ++i) {
        double denom = 0.0;
        for (auto j : ctx.risk.at_risk(i)) denom += risk_score(j);
        total += static_cast<double>(ctx.risk.tie_count(i)) / denom;
        bh.times.push_back(ctx.risk.event_times[i]);
        bh.cumhaz.push_back(total);
    }
    return bh;
}

struct SurvCurve {
    std::vector<double> times;
    Eigen::MatrixXd surv; // n_new x n_times

    Eigen::VectorXd average() const { return surv.colwise().mean().transpose(); }
};

/// S(t | x) = exp(-H0(t) exp(eta)) for each linear predictor, at every baseline time.
inline SurvCurve survival_curves(const Eigen::VectorXd& eta, const BaselineHazard& bh)
{
    SurvCurve out;
    out.times = bh.times;
    out.surv.resize(eta.size(), static_cast<Eigen::Index>(bh.times.size()));
    const Eigen::VectorXd rel = eta.array().exp();
    for (Eigen::Index i = 0; i < eta.size(); ++i)
        for (std::size_t t = 0; t < bh.cumhaz.size(); ++t)
            out.surv(i, static_cast<Eigen::Index>(t)) = std::exp(-bh.cumhaz[t] * rel(i));
    return out;
}

/// Linear predictor for raw rows of `data`, standardized with the training transform.
inline Eigen::VectorXd linear_predictor(const Eigen::VectorXd& beta_std, const Dataset& data,
                                        const ScalingInfo& scaling)
{
    detail::require_same_columns(scaling.column_names, data.column_names());
    detail::require(data.n_cols() == scaling.original_cols(),
                    "new data has " + std::to_string(data.n_cols()) + " covariates, model has " +
                        std::to_string(scaling.original_cols()));
    detail::require(beta_std.size() == scaling.retained_cols(),
                    "coefficient length does not match the retained columns");
    return scaling.apply(data.x()) * beta_std;
}

inline SurvCurve survival_curves(const Eigen::VectorXd& beta_std, const BaselineHazard& bh,
                                 const Dataset& newdata, const ScalingInfo& scaling)
{
    return survival_curves(linear_predictor(beta_std, newdata, scaling), bh);
}

// ---------------------------------------------------------------------------
// Harrell's C for counting-process data
// ---------------------------------------------------------------------------

struct ConcordanceResult {
    double c = 0.5;
    double concordant = 0;
    double discordant = 0;
    double tied = 0;
    double std_err = 0.0;
    double ci_low = 0.0;
    double ci_high = 1.0;

    double comparable() const { return concordant + discordant + tied; }
};

/**
 * Row a (an event at t_a) and row b form a comparable pair when b is at risk
 * at t_a (t_start_b < t_a <= t_stop_b) and b does not itself fail at t_a.
 * The pair is concordant when a has the higher score, tied when the scores
 * are equal (counted 1/2).
 *
 * The standard error is the usual U-statistic estimate with each subject's
 * pair contributions pooled, giving a 95% normal interval.
 */
inline ConcordanceResult concordance(const Eigen::VectorXd& scores, const Dataset& outcomes)
{
    detail::require(scores.size() == outcomes.n_rows(),
                    "one score per row required: got " + std::to_string(scores.size()) +
                        " scores for " + std::to_string(outcomes.n_rows()) + " rows");
    const auto& start = outcomes.t_start();
    const auto& stop = outcomes.t_stop();
    const auto& status = outcomes.status();
    const auto n = outcomes.n_rows();

    std::vector<double> event_times;
    for (Eigen::Index j = 0; j < n; ++j)
        if (status(j) == 1) event_times.push_back(stop(j));
    std::sort(event_times.begin(), event_times.end());
    event_times.erase(std::unique(event_times.begin(), event_times.end()), event_times.end());

    struct Block {
        std::vector<Eigen::Index> failing;
        std::vector<Eigen::Index> partners;
    };
    // Rows are at risk over a contiguous range of event times.
    std::vector<Block> blocks(event_times.size());
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto lo = std::upper_bound(event_times.begin(), event_times.end(), start(j)) - event_times.begin();
        const auto hi = std::upper_bound(event_times.begin(), event_times.end(), stop(j)) - event_times.begin();
        for (auto i = lo; i < hi; ++i) {
            auto& blk = blocks[static_cast<std::size_t>(i)];
            if (status(j) == 1 && stop(j) == event_times[static_cast<std::size_t>(i)])
                blk.failing.push_back(j);
            else
                blk.partners.push_back(j);
        }
    }

    auto count_below = [](const std::vector<double>& sorted, double v) {
        return static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
    };
    auto count_above = [](const std::vector<double>& sorted, double v) {
        return static_cast<double>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), v));
    };

    ConcordanceResult res;
    std::vector<double> ps, fs;
    for (auto& blk : blocks) {
        if (blk.failing.empty() || blk.partners.empty()) continue;
        ps.clear();
        for (auto b : blk.partners) ps.push_back(scores(b));
        std::sort(ps.begin(), ps.end());
        for (auto a : blk.failing) {
            const double lo = count_below(ps, scores(a));
            const double hi = count_above(ps, scores(a));
            res.concordant += lo;
            res.discordant += hi;
            res.tied += static_cast<double>(ps.size()) - lo - hi;
        }
    }
    const double total = res.comparable();
    if (total == 0.0) throw NumericError("no comparable pairs for concordance");
    res.c = (res.concordant + 0.5 * res.tied) / total;

    // Per-subject sums of (pair score - C) for the variance.
    std::map<std::string, double> influence;
    const auto& ids = outcomes.subject_ids();
    for (auto& blk : blocks) {
        if (blk.failing.empty() || blk.partners.empty()) continue;
        ps.clear();
        fs.clear();
        for (auto b : blk.partners) ps.push_back(scores(b));
        for (auto a : blk.failing) fs.push_back(scores(a));
        std::sort(ps.begin(), ps.end());
        std::sort(fs.begin(), fs.end());
        const double np = static_cast<double>(ps.size());
        const double nf = static_cast<double>(fs.size());
        for (auto a : blk.failing) {
            const double lo = count_below(ps, scores(a));
            const double hi = count_above(ps, scores(a));
            influence[ids[static_cast<std::size_t>(a)]] += lo + 0.5 * (np - lo - hi) - res.c * np;
        }
        for (auto b : blk.partners) {
            // failing rows with a higher score than b are concordant with b
            const double hi = count_above(fs, scores(b));
            const double lo = count_below(fs, scores(b));
            influence[ids[static_cast<std::size_t>(b)]] += hi + 0.5 * (nf - lo - hi) - res.c * nf;
        }
    }
    double ss = 0.0;
    for (const auto& [id, u] : influence) ss += u * u;
    res.std_err = std::sqrt(ss) / total;
    res.ci_low = std::max(0.0, res.c - 1.959963984540054 * res.std_err);
    res.ci_high = std::min(1.0, res.c + 1.959963984540054 * res.std_err);
    return res;
}

} // namespace tdcox
