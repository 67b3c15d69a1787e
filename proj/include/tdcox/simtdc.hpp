#pragma once

/*
 * Permutational simulation of survival data with time-fixed and
 * time-dependent covariates.
 *
 * Follow-up times are generated first, independent of the covariates: each
 * slot draws an exponential event time and a uniform censoring time. The
 * sorted times are then matched to subjects. An event time goes to one of
 * the still-unmatched subjects with probability proportional to
 * exp(x(t) . beta) at that time, a censoring time to one chosen uniformly.
 * The marginal distribution of times is therefore exactly the generating
 * one, whatever beta is.
 */

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "survdata.hpp"

namespace tdcox {

struct SimConfig {
    int n_subjects = 120;
    double max_time = 10.0;
    int n_fixed = 0;
    int n_td = 0;
    std::vector<double> beta_true; // fixed effects first, then time-dependent
    double event_rate = 0.2;
    bool censor = true;            // uniform censoring over (0, max_time]
    std::uint64_t seed = 1;

    void validate() const
    {
        detail::require(n_subjects >= 1, "n_subjects must be >= 1");
        detail::require(max_time > 0.0 && std::isfinite(max_time), "max_time must be positive");
        detail::require(n_fixed >= 0 && n_td >= 0, "covariate counts must be >= 0");
        detail::require(n_fixed + n_td >= 1, "at least one covariate is required");
        detail::require(static_cast<int>(beta_true.size()) == n_fixed + n_td,
                        "beta_true has " + std::to_string(beta_true.size()) +
                            " entries, expected n_fixed + n_td = " + std::to_string(n_fixed + n_td));
        detail::require(event_rate > 0.0 && std::isfinite(event_rate), "event_rate must be positive");
    }
};

/// Effect sizes drawn uniformly from [lo, hi].
inline std::vector<double> uniform_effects(int count, double lo, double hi, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> out(static_cast<std::size_t>(std::max(count, 0)));
    for (auto& b : out) b = u(rng);
    return out;
}

struct SimOutput {
    Dataset dataset;
    std::vector<double> beta_true;
    int n_events = 0;
    int n_truncated = 0;                  // times left unmatched (0 unless infeasible)
    std::vector<double> latent_event_times; // generated exponential times, one per slot
};

inline SimOutput simulate(const SimConfig& cfg)
{
    cfg.validate();
    const int n = cfg.n_subjects;
    const int n_int = std::max(1, static_cast<int>(std::ceil(cfg.max_time)));
    const int p = cfg.n_fixed + cfg.n_td;
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // covariate paths
    Eigen::MatrixXd fixed(n, cfg.n_fixed);
    for (int s = 0; s < n; ++s)
        for (int j = 0; j < cfg.n_fixed; ++j) fixed(s, j) = normal(rng);
    std::vector<Eigen::MatrixXd> td(static_cast<std::size_t>(n), Eigen::MatrixXd(n_int, cfg.n_td));
    for (int s = 0; s < n; ++s)
        for (int m = 0; m < n_int; ++m)
            for (int j = 0; j < cfg.n_td; ++j) td[static_cast<std::size_t>(s)](m, j) = normal(rng);

    const Eigen::Map<const Eigen::VectorXd> beta(cfg.beta_true.data(), p);
    const Eigen::VectorXd beta_fixed = beta.head(cfg.n_fixed);
    const Eigen::VectorXd beta_td = beta.tail(cfg.n_td);
    auto interval_of = [&](double t) {
        return std::clamp(static_cast<int>(std::ceil(t)) - 1, 0, n_int - 1);
    };

    // follow-up times, drawn before any matching
    struct Slot {
        double time;
        int status;
    };
    SimOutput out;
    out.beta_true = cfg.beta_true;
    std::vector<Slot> slots;
    for (int s = 0; s < n; ++s) {
        const double t_event = -std::log1p(-unif(rng)) / cfg.event_rate;
        const double t_cens = cfg.censor ? cfg.max_time * (1.0 - unif(rng)) : cfg.max_time;
        out.latent_event_times.push_back(t_event);
        const double t_end = std::min(t_cens, cfg.max_time);
        if (t_event <= t_end) slots.push_back({t_event, 1});
        else slots.push_back({t_end, 0});
    }
    std::stable_sort(slots.begin(), slots.end(),
                     [](const Slot& a, const Slot& b) { return a.time < b.time; });

    // permutational matching
    std::vector<int> unmatched(static_cast<std::size_t>(n));
    std::iota(unmatched.begin(), unmatched.end(), 0);
    std::vector<double> subj_time(static_cast<std::size_t>(n), 0.0);
    std::vector<int> subj_status(static_cast<std::size_t>(n), 0);
    std::vector<double> logw;
    for (const auto& slot : slots) {
        if (unmatched.empty()) {
            ++out.n_truncated;
            continue;
        }
        std::size_t pick = 0;
        if (slot.status == 1) {
            const int m = interval_of(slot.time);
            logw.resize(unmatched.size());
            for (std::size_t q = 0; q < unmatched.size(); ++q) {
                const int s = unmatched[q];
                double eta = fixed.row(s).dot(beta_fixed);
                if (cfg.n_td) eta += td[static_cast<std::size_t>(s)].row(m).dot(beta_td);
                logw[q] = eta;
            }
            const double top = *std::max_element(logw.begin(), logw.end());
            double total = 0.0;
            for (auto& w : logw) total += (w = std::exp(w - top));
            double u = unif(rng) * total;
            pick = logw.size() - 1;
            for (std::size_t q = 0; q < logw.size(); ++q) {
                u -= logw[q];
                if (u < 0.0) {
                    pick = q;
                    break;
                }
            }
        } else {
            pick = std::min(unmatched.size() - 1,
                            static_cast<std::size_t>(unif(rng) * static_cast<double>(unmatched.size())));
        }
        const int s = unmatched[pick];
        unmatched.erase(unmatched.begin() + static_cast<std::ptrdiff_t>(pick));
        subj_time[static_cast<std::size_t>(s)] = slot.time;
        subj_status[static_cast<std::size_t>(s)] = slot.status;
        out.n_events += slot.status;
    }

    // counting-process rows on the unit-time grid
    std::vector<SurvRecord> recs;
    for (int s = 0; s < n; ++s) {
        const double t_end = subj_time[static_cast<std::size_t>(s)];
        if (!(t_end > 0.0)) continue; // unmatched subject (truncated)
        const int last = cfg.n_td ? interval_of(t_end) : 0;
        for (int m = 0; m <= last; ++m) {
            SurvRecord r;
            r.subject_id = std::to_string(s + 1);
            r.t_start = cfg.n_td ? m : 0.0;
            r.t_stop = (!cfg.n_td || m == last) ? t_end : m + 1.0;
            r.status = m == last ? subj_status[static_cast<std::size_t>(s)] : 0;
            r.covariates.resize(p);
            r.covariates.head(cfg.n_fixed) = fixed.row(s).transpose();
            if (cfg.n_td) r.covariates.tail(cfg.n_td) = td[static_cast<std::size_t>(s)].row(m).transpose();
            recs.push_back(std::move(r));
        }
    }
    std::vector<std::string> names;
    for (int j = 0; j < cfg.n_fixed; ++j) names.push_back("fixed" + std::to_string(j + 1));
    for (int j = 0; j < cfg.n_td; ++j) names.push_back("td" + std::to_string(j + 1));
    out.dataset = Dataset::from_records(recs, std::move(names));
    return out;
}

inline void write_csv(const SimOutput& sim, std::ostream& out)
{
    write_csv(sim.dataset, out);
}

} // namespace tdcox
