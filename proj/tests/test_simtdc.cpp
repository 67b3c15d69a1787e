#include <tdcox/simtdc.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

using namespace tdcox;

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b)
{
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

std::vector<double> ranks(const std::vector<double>& v)
{
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < idx.size();) {
        std::size_t e = k;
        while (e + 1 < idx.size() && v[idx[e + 1]] == v[idx[k]]) ++e;
        for (std::size_t q = k; q <= e; ++q) r[idx[q]] = 0.5 * static_cast<double>(k + e) + 1.0;
        k = e + 1;
    }
    return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b)
{
    return pearson(ranks(a), ranks(b));
}

struct SubjectSummary {
    std::vector<std::pair<double, double>> intervals;
    std::vector<int> status;
    std::vector<Eigen::VectorXd> x;
};

std::map<std::string, SubjectSummary> by_subject(const Dataset& d)
{
    std::map<std::string, SubjectSummary> out;
    for (Eigen::Index i = 0; i < d.n_rows(); ++i) {
        auto& s = out[d.subject_ids()[static_cast<std::size_t>(i)]];
        s.intervals.emplace_back(d.t_start()(i), d.t_stop()(i));
        s.status.push_back(static_cast<int>(d.status()(i)));
        s.x.push_back(d.x().row(i).transpose());
    }
    return out;
}

// one-sample KS statistic against a continuous CDF
template <class Cdf>
double ks_statistic(std::vector<double> sample, Cdf&& cdf)
{
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

std::vector<double> event_times(const Dataset& d)
{
    std::vector<double> t;
    for (Eigen::Index i = 0; i < d.n_rows(); ++i)
        if (d.status()(i) == 1) t.push_back(d.t_stop()(i));
    return t;
}

} // namespace

TEST(SimConfig, Validation)
{
    SimConfig cfg;
    EXPECT_THROW(cfg.validate(), ValidationError); // no covariates
    cfg.n_fixed = 2;
    cfg.beta_true = {1.0};
    EXPECT_THROW(cfg.validate(), ValidationError);
    cfg.beta_true = {1.0, 0.0};
    EXPECT_NO_THROW(cfg.validate());
    cfg.event_rate = 0.0;
    EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(UniformEffects, RangeAndDeterminism)
{
    const auto b = uniform_effects(500, 0.0, 2.0, 4);
    EXPECT_EQ(b.size(), 500u);
    for (double v : b) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 2.0);
    }
    EXPECT_EQ(b, uniform_effects(500, 0.0, 2.0, 4));
}

TEST(Simulate, TimeFixedGivesOneRowPerSubject)
{
    SimConfig cfg;
    cfg.n_subjects = 50;
    cfg.n_fixed = 3;
    cfg.beta_true = {0.5, -0.5, 1.0};
    const auto sim = simulate(cfg);
    EXPECT_EQ(sim.dataset.n_rows(), 50);
    EXPECT_EQ(sim.dataset.n_subjects(), 50);
    for (Eigen::Index i = 0; i < sim.dataset.n_rows(); ++i) EXPECT_EQ(sim.dataset.t_start()(i), 0.0);
}

TEST(Simulate, RowsTileFollowUp)
{
    SimConfig cfg;
    cfg.n_subjects = 200;
    cfg.n_fixed = 2;
    cfg.n_td = 2;
    cfg.beta_true = {0.3, 0.0, 0.8, -0.4};
    cfg.seed = 11;
    const auto sim = simulate(cfg);
    const std::set<double> latent(sim.latent_event_times.begin(), sim.latent_event_times.end());
    int events = 0;
    for (const auto& [id, s] : by_subject(sim.dataset)) {
        auto iv = s.intervals;
        ASSERT_TRUE(std::is_sorted(iv.begin(), iv.end()));
        EXPECT_EQ(iv.front().first, 0.0);
        for (std::size_t k = 0; k < iv.size(); ++k) {
            if (k + 1 < iv.size()) {
                EXPECT_EQ(iv[k].second, iv[k + 1].first);
                EXPECT_EQ(iv[k].second - iv[k].first, 1.0);
                EXPECT_EQ(s.status[k], 0);
            } else {
                EXPECT_GT(iv[k].second - iv[k].first, 0.0);
                EXPECT_LE(iv[k].second - iv[k].first, 1.0);
            }
            // fixed covariates are constant along the subject's rows
            EXPECT_EQ(s.x[k].head(2), s.x[0].head(2));
        }
        EXPECT_LE(iv.back().second, cfg.max_time);
        if (s.status.back() == 1) {
            ++events;
            EXPECT_EQ(latent.count(iv.back().second), 1u);
        }
    }
    EXPECT_EQ(events, sim.n_events);
    EXPECT_EQ(sim.dataset.n_subjects(), 200);
}

TEST(Simulate, ThousandCovariateScale)
{
    SimConfig cfg;
    cfg.n_subjects = 120;
    cfg.max_time = 10;
    cfg.n_fixed = 900;
    cfg.n_td = 100;
    cfg.beta_true = uniform_effects(1000, 0.0, 2.0, 1);
    cfg.seed = 1;
    const auto sim = simulate(cfg);
    EXPECT_GE(sim.dataset.n_rows(), 120);
    EXPECT_LE(sim.dataset.n_rows(), 1200);
    EXPECT_EQ(sim.dataset.n_subjects(), 120);
    EXPECT_EQ(sim.n_truncated, 0);
    EXPECT_EQ(sim.dataset.n_cols(), 1000);
    int censored = 0;
    for (const auto& [id, s] : by_subject(sim.dataset)) censored += s.status.back() == 0;
    EXPECT_EQ(sim.n_events + censored, 120);
}

TEST(Simulate, NullEffectUncorrelatedWithEventOrder)
{
    SimConfig cfg;
    cfg.n_subjects = 500;
    cfg.n_fixed = 3;
    cfg.beta_true = {0.0, 0.0, 0.0};
    cfg.censor = false;
    cfg.max_time = 60;
    cfg.seed = 5;
    const auto sim = simulate(cfg);
    for (Eigen::Index j = 0; j < 3; ++j) {
        std::vector<double> x, t;
        for (Eigen::Index i = 0; i < sim.dataset.n_rows(); ++i) {
            x.push_back(sim.dataset.x()(i, j));
            t.push_back(sim.dataset.t_stop()(i));
        }
        EXPECT_LT(std::abs(spearman(x, t)), 0.1) << "covariate " << j;
    }
}

TEST(Simulate, StrongEffectFailsEarlier)
{
    SimConfig cfg;
    cfg.n_subjects = 500;
    cfg.n_fixed = 1;
    cfg.n_td = 1;
    cfg.beta_true = {2.0, 0.0};
    cfg.seed = 6;
    const auto sim = simulate(cfg);
    std::vector<double> xbar, t;
    for (const auto& [id, s] : by_subject(sim.dataset)) {
        if (s.status.back() != 1) continue;
        xbar.push_back(s.x[0](0));
        t.push_back(s.intervals.back().second);
    }
    const double rho = spearman(xbar, t);
    EXPECT_LT(rho, -0.3);
}

TEST(Simulate, TimeDependentEffectTracksCurrentValue)
{
    SimConfig cfg;
    cfg.n_subjects = 500;
    cfg.n_td = 1;
    cfg.beta_true = {2.0};
    cfg.seed = 8;
    const auto sim = simulate(cfg);
    // at failure, the failing row's current value is typically high
    double mean_at_event = 0.0;
    int events = 0;
    for (Eigen::Index i = 0; i < sim.dataset.n_rows(); ++i)
        if (sim.dataset.status()(i) == 1) {
            mean_at_event += sim.dataset.x()(i, 0);
            ++events;
        }
    EXPECT_GT(mean_at_event / events, 0.5);
}

TEST(Simulate, MarginalEventTimesAreExponential)
{
    const double rate = 0.2, horizon = 60.0;
    const double crit = 1.628 / std::sqrt(1000.0); // 1% level
    auto cdf = [&](double t) { return -std::expm1(-rate * t) / -std::expm1(-rate * horizon); };
    for (double effect : {0.0, 3.0}) {
        SimConfig cfg;
        cfg.n_subjects = 1000;
        cfg.max_time = horizon;
        cfg.n_fixed = 1;
        cfg.n_td = 1;
        cfg.beta_true = {effect, effect};
        cfg.censor = false;
        cfg.seed = 2024;
        const auto sim = simulate(cfg);
        const auto times = event_times(sim.dataset);
        ASSERT_GE(times.size(), 990u);
        EXPECT_LT(ks_statistic(times, cdf), crit) << "effect " << effect;
    }
}

TEST(Simulate, EventTimesDoNotDependOnEffects)
{
    SimConfig a;
    a.n_subjects = 300;
    a.n_fixed = 2;
    a.beta_true = {0.0, 0.0};
    a.seed = 77;
    SimConfig b = a;
    b.beta_true = {2.0, -1.5};
    auto ta = event_times(simulate(a).dataset), tb = event_times(simulate(b).dataset);
    std::sort(ta.begin(), ta.end());
    std::sort(tb.begin(), tb.end());
    EXPECT_EQ(ta, tb);
}

TEST(Simulate, CsvRoundTripAndDeterminism)
{
    SimConfig cfg;
    cfg.n_subjects = 40;
    cfg.n_fixed = 2;
    cfg.n_td = 2;
    cfg.beta_true = uniform_effects(4, 0.0, 2.0, 3);
    cfg.seed = 9;
    std::ostringstream first, second;
    write_csv(simulate(cfg), first);
    write_csv(simulate(cfg), second);
    EXPECT_EQ(first.str(), second.str());

    std::istringstream in(first.str());
    const auto parsed = parse_csv(in);
    const auto& orig = simulate(cfg).dataset;
    EXPECT_EQ(parsed.subject_ids(), orig.subject_ids());
    EXPECT_EQ(parsed.column_names(), orig.column_names());
    EXPECT_EQ(parsed.x(), orig.x());
    EXPECT_EQ(parsed.t_start(), orig.t_start());
    EXPECT_EQ(parsed.t_stop(), orig.t_stop());
    EXPECT_EQ(parsed.status(), orig.status());

    cfg.seed = 10;
    std::ostringstream other;
    write_csv(simulate(cfg), other);
    EXPECT_NE(other.str(), first.str());
}
