#pragma once

/*
 * K-fold cross-validation over an (alpha, lambda) grid.
 *
 * Folds are formed at subject level so that all rows of one subject land in
 * the same fold. The full dataset is standardized once; every fold reuses
 * that transform, so per-fold coefficients share one scale with the full-data
 * lambda grid.
 */

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "likelihood.hpp"
#include "parallel.hpp"
#include "predict.hpp"
#include "solver.hpp"
#include "survdata.hpp"

namespace tdcox {

struct FoldAssignment {
    int k = 0;
    std::uint64_t seed = 0;
    std::map<std::string, int> subject_fold;
    std::vector<int> row_fold; // fold of each dataset row

    int fold_of(const std::string& subject) const { return subject_fold.at(subject); }
};

namespace detail {

/// Fisher-Yates on the raw engine output, so the permutation depends only on
/// the seed (std::shuffle's use of the engine is implementation-defined).
template <class T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng)
{
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace detail

/// Subjects are shuffled within two strata (ever had an event / never) and
/// dealt round-robin, events first, so fold sizes differ by at most one
/// subject and every fold gets an event whenever there are >= k event subjects.
inline FoldAssignment make_folds(const Dataset& d, int k, std::uint64_t seed)
{
    detail::require(k >= 2, "number of folds must be >= 2, got " + std::to_string(k));
    std::vector<std::string> order;
    std::map<std::string, bool> has_event;
    for (Eigen::Index i = 0; i < d.n_rows(); ++i) {
        const auto& id = d.subject_ids()[static_cast<std::size_t>(i)];
        auto [it, inserted] = has_event.emplace(id, false);
        if (inserted) order.push_back(id);
        if (d.status()(i) == 1) it->second = true;
    }
    detail::require(static_cast<std::size_t>(k) <= order.size(),
                    "number of folds (" + std::to_string(k) + ") exceeds number of subjects (" +
                        std::to_string(order.size()) + ")");
    std::vector<std::string> events, censored;
    for (const auto& id : order) (has_event[id] ? events : censored).push_back(id);

    std::mt19937_64 rng(seed);
    detail::seeded_shuffle(events, rng);
    detail::seeded_shuffle(censored, rng);

    FoldAssignment fa;
    fa.k = k;
    fa.seed = seed;
    int next = 0;
    for (const auto* group : {&events, &censored})
        for (const auto& id : *group) {
            fa.subject_fold[id] = next;
            next = (next + 1) % k;
        }
    for (const auto& id : d.subject_ids()) fa.row_fold.push_back(fa.subject_fold.at(id));
    return fa;
}

struct TrainTestSplit {
    Dataset train;
    Dataset test;
};

/// Holds out round(test_fraction * n_subjects) whole subjects, drawn within
/// the event / no-event strata in proportion.
inline TrainTestSplit split_by_subject(const Dataset& d, double test_fraction, std::uint64_t seed)
{
    detail::require(test_fraction > 0.0 && test_fraction < 1.0, "test fraction must lie in (0, 1)");
    std::vector<std::string> order;
    std::map<std::string, bool> has_event;
    for (Eigen::Index i = 0; i < d.n_rows(); ++i) {
        const auto& id = d.subject_ids()[static_cast<std::size_t>(i)];
        auto [it, inserted] = has_event.emplace(id, false);
        if (inserted) order.push_back(id);
        if (d.status()(i) == 1) it->second = true;
    }
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(order.size())));
    detail::require(n_test >= 1 && n_test < order.size(),
                    "test fraction leaves an empty train or test set");
    std::vector<std::string> events, censored;
    for (const auto& id : order) (has_event[id] ? events : censored).push_back(id);
    std::mt19937_64 rng(seed);
    detail::seeded_shuffle(events, rng);
    detail::seeded_shuffle(censored, rng);

    const auto n_test_events = std::min(
        events.size(), static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(events.size()))));
    const auto n_test_censored = std::min(censored.size(), n_test - std::min(n_test, n_test_events));
    std::map<std::string, bool> in_test;
    for (std::size_t i = 0; i < n_test_events; ++i) in_test[events[i]] = true;
    for (std::size_t i = 0; i < n_test_censored; ++i) in_test[censored[i]] = true;

    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < d.n_rows(); ++i)
        (in_test.count(d.subject_ids()[static_cast<std::size_t>(i)]) ? test : train).push_back(i);
    return {d.subset(train), d.subset(test)};
}

enum class CvMetric { vv, basic, cindex };

inline std::string to_string(CvMetric m)
{
    switch (m) {
    case CvMetric::vv: return "vv";
    case CvMetric::basic: return "basic";
    case CvMetric::cindex: return "cindex";
    }
    return "?";
}

inline CvMetric parse_metric(const std::string& s)
{
    if (s == "vv") return CvMetric::vv;
    if (s == "basic") return CvMetric::basic;
    if (s == "cindex") return CvMetric::cindex;
    throw ValidationError("unknown metric '" + s + "' (expected vv, basic or cindex)");
}

/// Deviance contribution of one fold at coefficients `beta`:
///   vv:    -2 [ l_full(beta) - l_retained(beta) ]
///   basic: -2 l_heldout(beta)   (zero when the held-out part has no events)
inline double fold_deviance(const LikelihoodContext& full, const LikelihoodContext& retained,
                            const LikelihoodContext* heldout, const Eigen::VectorXd& beta,
                            CvMetric variant)
{
    switch (variant) {
    case CvMetric::vv:
        return -2.0 * (log_partial_likelihood(beta, full) - log_partial_likelihood(beta, retained));
    case CvMetric::basic:
        return heldout ? -2.0 * log_partial_likelihood(beta, *heldout) : 0.0;
    case CvMetric::cindex: break;
    }
    throw ValidationError("fold_deviance needs a deviance variant (vv or basic)");
}

/// Full data standardized once (for the lambda grid) plus per-fold pieces.
/// Each fold estimates its own centering and scaling from its retained rows
/// and applies that transform to the full and held-out data.
struct CvProblem {
    LikelihoodContext full;
    FoldAssignment folds;

    struct Fold {
        std::optional<LikelihoodContext> retained; // absent: no events in retained data
        std::optional<LikelihoodContext> full;     // full data under the fold's transform
        std::optional<LikelihoodContext> heldout;  // absent: no events held out
        Dataset heldout_rows;                      // raw held-out rows
        Eigen::MatrixXd heldout_x;                 // held-out rows under the fold's transform
    };
    std::vector<Fold> parts;
};

inline CvProblem prepare_cv(const Dataset& d, const FoldAssignment& folds)
{
    detail::require(static_cast<Eigen::Index>(folds.row_fold.size()) == d.n_rows(),
                    "fold assignment does not match the dataset");
    CvProblem prob;
    prob.full = make_context(d);
    prob.folds = folds;
    for (int f = 0; f < folds.k; ++f) {
        std::vector<Eigen::Index> keep, out;
        for (Eigen::Index i = 0; i < d.n_rows(); ++i)
            (folds.row_fold[static_cast<std::size_t>(i)] == f ? out : keep).push_back(i);
        CvProblem::Fold part;
        const auto retained = d.subset(keep);
        part.heldout_rows = d.subset(out);
        if (retained.n_events() > 0) {
            part.retained = make_context(retained);
            const auto& scaling = *part.retained->scaling;
            part.full = make_context(d, scaling);
            if (part.heldout_rows.n_rows() > 0) {
                part.heldout_x = scaling.apply(part.heldout_rows.x());
                if (part.heldout_rows.n_events() > 0) part.heldout = make_context(part.heldout_rows, scaling);
            }
        }
        prob.parts.push_back(std::move(part));
    }
    return prob;
}

/// Per-lambda scores of one fold (NaN where unavailable) and an optional warning.
struct FoldScores {
    std::vector<double> values;
    std::string warning;
};

inline FoldScores score_fold(const CvProblem& prob, int fold, double alpha, const LambdaGrid& grid,
                             const SolverConfig& cfg, CvMetric metric)
{
    const auto& part = prob.parts[static_cast<std::size_t>(fold)];
    FoldScores out;
    out.values.assign(grid.values.size(), std::numeric_limits<double>::quiet_NaN());
    const auto tag = "fold " + std::to_string(fold + 1) + " (alpha=" + detail::format_double(alpha) + ")";
    if (!part.retained) {
        out.warning = tag + ": no events in retained data, skipped";
        return out;
    }
    const auto path = fit_path(*part.retained, alpha, grid, cfg);
    std::size_t failed = 0;
    for (std::size_t l = 0; l < grid.values.size(); ++l) {
        if (!path.errors[l].empty()) {
            ++failed;
            continue;
        }
        const Eigen::VectorXd beta = path.beta.col(static_cast<Eigen::Index>(l));
        try {
            if (metric == CvMetric::cindex) {
                if (part.heldout_rows.n_rows() == 0) break;
                const Eigen::VectorXd eta = part.heldout_x * beta;
                out.values[l] = concordance(eta, part.heldout_rows).c;
            } else {
                out.values[l] = fold_deviance(*part.full, *part.retained,
                                              part.heldout ? &*part.heldout : nullptr, beta, metric);
            }
        } catch (const NumericError& e) {
            if (metric == CvMetric::cindex) {
                out.warning = tag + ": no comparable pairs in held-out data, skipped";
                break;
            }
            ++failed;
        }
    }
    if (failed && out.warning.empty())
        out.warning = tag + ": numeric failure at " + std::to_string(failed) + " lambda value(s)";
    return out;
}

/// Cross-validated score along one lambda grid.
struct CvCurve {
    double alpha = 0.0;
    std::vector<double> lambdas;
    std::vector<double> mean;
    std::vector<double> se;
    std::vector<int> n_folds;                   // folds contributing at each lambda
    std::vector<std::vector<double>> per_fold;  // [fold][lambda], NaN when skipped
    std::vector<std::string> warnings;
};

namespace detail {

inline CvCurve summarize(double alpha, const LambdaGrid& grid, std::vector<FoldScores> folds)
{
    CvCurve c;
    c.alpha = alpha;
    c.lambdas = grid.values;
    const auto L = grid.values.size();
    for (auto& f : folds) {
        if (!f.warning.empty()) c.warnings.push_back(f.warning);
        c.per_fold.push_back(std::move(f.values));
    }
    for (std::size_t l = 0; l < L; ++l) {
        double sum = 0.0;
        int cnt = 0;
        for (const auto& f : c.per_fold)
            if (std::isfinite(f[l])) {
                sum += f[l];
                ++cnt;
            }
        const double mean = cnt ? sum / cnt : std::numeric_limits<double>::quiet_NaN();
        double ss = 0.0;
        for (const auto& f : c.per_fold)
            if (std::isfinite(f[l])) ss += (f[l] - mean) * (f[l] - mean);
        const double sd = cnt > 1 ? std::sqrt(ss / (cnt - 1)) : 0.0;
        c.mean.push_back(mean);
        c.se.push_back(cnt ? sd / std::sqrt(static_cast<double>(cnt)) : std::numeric_limits<double>::quiet_NaN());
        c.n_folds.push_back(cnt);
    }
    return c;
}

} // namespace detail

/// Cross-validated partial likelihood deviance (vv or basic) per lambda.
inline CvCurve cv_pld(const Dataset& d, const FoldAssignment& folds, double alpha,
                      const LambdaGrid& grid, const SolverConfig& cfg = {},
                      CvMetric variant = CvMetric::vv, unsigned threads = 1)
{
    detail::require(variant != CvMetric::cindex, "cv_pld takes the vv or basic variant");
    const auto prob = prepare_cv(d, folds);
    std::vector<FoldScores> scores(static_cast<std::size_t>(folds.k));
    parallel_for(scores.size(), threads, [&](std::size_t f) {
        scores[f] = score_fold(prob, static_cast<int>(f), alpha, grid, cfg, variant);
    });
    return detail::summarize(alpha, grid, std::move(scores));
}

/// Mean held-out Harrell's C per lambda.
inline CvCurve cv_cindex(const Dataset& d, const FoldAssignment& folds, double alpha,
                         const LambdaGrid& grid, const SolverConfig& cfg = {}, unsigned threads = 1)
{
    const auto prob = prepare_cv(d, folds);
    std::vector<FoldScores> scores(static_cast<std::size_t>(folds.k));
    parallel_for(scores.size(), threads, [&](std::size_t f) {
        scores[f] = score_fold(prob, static_cast<int>(f), alpha, grid, cfg, CvMetric::cindex);
    });
    return detail::summarize(alpha, grid, std::move(scores));
}

struct CvOptions {
    int k = 10;
    std::uint64_t seed = 1;
    CvMetric metric = CvMetric::vv;
    double lamfract = 1.0;
    int m = 100;
    std::optional<double> epsilon;
    bool refit = false;
    unsigned threads = 1; // 0 = all cores
};

struct CvResult {
    CvMetric metric = CvMetric::vv;
    std::vector<double> alphas;
    std::vector<CvCurve> curves; // one per alpha, same order
    double alpha_optimal = 0.0;
    double lambda_min = 0.0;
    double lambda_1se = 0.0;
    std::size_t alpha_index = 0;
    std::size_t lambda_min_index = 0;
    std::size_t lambda_1se_index = 0;
    std::vector<std::string> warnings;
    std::optional<PathResult> refit;
    FoldAssignment folds;
};

/**
 * Joint (alpha, lambda) search. Each alpha gets its own grid anchored at its
 * full-data lambda_max; all alphas share one fold assignment. lambda_min is
 * the global optimum (lowest deviance or highest C, first alpha on ties);
 * lambda_1se is the largest lambda at alpha_optimal within one SE of it.
 */
inline CvResult cross_validate(const Dataset& d, const std::vector<double>& alphas,
                               const SolverConfig& cfg = {}, const CvOptions& opt = {})
{
    detail::require(!alphas.empty(), "at least one alpha is required");
    for (double a : alphas)
        detail::require(a >= 0.0 && a <= 1.0, "alpha must lie in [0, 1], got " + detail::format_double(a));
    cfg.validate();

    CvResult res;
    res.metric = opt.metric;
    res.alphas = alphas;
    res.folds = make_folds(d, opt.k, opt.seed);
    const auto prob = prepare_cv(d, res.folds);

    std::vector<LambdaGrid> grids;
    for (double a : alphas) {
        const double lmax = lambda_max(prob.full, a);
        if (!(lmax > 0.0))
            throw ValidationError("lambda_max is zero: covariates carry no information about the events");
        grids.push_back(make_lambda_grid(lmax, prob.full.n_rows(), prob.full.n_cols(), opt.m,
                                         opt.lamfract, opt.epsilon));
    }

    const auto k = static_cast<std::size_t>(opt.k);
    std::vector<FoldScores> scores(alphas.size() * k);
    parallel_for(scores.size(), opt.threads, [&](std::size_t t) {
        const auto a = t / k;
        scores[t] = score_fold(prob, static_cast<int>(t % k), alphas[a], grids[a], cfg, opt.metric);
    });

    const bool maximize = opt.metric == CvMetric::cindex;
    bool found = false;
    double best = 0.0;
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        std::vector<FoldScores> mine(std::make_move_iterator(scores.begin() + static_cast<std::ptrdiff_t>(a * k)),
                                     std::make_move_iterator(scores.begin() + static_cast<std::ptrdiff_t>((a + 1) * k)));
        auto curve = detail::summarize(alphas[a], grids[a], std::move(mine));
        for (const auto& w : curve.warnings) res.warnings.push_back(w);
        for (std::size_t l = 0; l < curve.mean.size(); ++l) {
            const double v = curve.mean[l];
            if (!std::isfinite(v)) continue;
            if (!found || (maximize ? v > best : v < best)) {
                found = true;
                best = v;
                res.alpha_index = a;
                res.lambda_min_index = l;
            }
        }
        res.curves.push_back(std::move(curve));
    }
    if (!found) throw NumericError("cross-validation failed in every fold");

    const auto& curve = res.curves[res.alpha_index];
    const double se = curve.se[res.lambda_min_index];
    const double bound = maximize ? best - se : best + se;
    res.lambda_1se_index = res.lambda_min_index;
    for (std::size_t l = 0; l < res.lambda_min_index; ++l) {
        const double v = curve.mean[l];
        if (std::isfinite(v) && (maximize ? v >= bound : v <= bound)) {
            res.lambda_1se_index = l;
            break;
        }
    }
    res.alpha_optimal = alphas[res.alpha_index];
    res.lambda_min = curve.lambdas[res.lambda_min_index];
    res.lambda_1se = curve.lambdas[res.lambda_1se_index];

    if (opt.refit) {
        auto full = make_context(d);
        res.refit = fit_path(full, res.alpha_optimal, grids[res.alpha_index], cfg);
    }
    return res;
}

} // namespace tdcox
