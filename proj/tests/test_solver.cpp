#include <tdcox/solver.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "support/oracles.hpp"

using namespace tdcox;

namespace {

Dataset parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_csv(in);
}

Dataset make_instance(int n, int p, std::uint64_t seed, bool staggered = false, bool ties = false)
{
    oracle::InstanceSpec spec;
    spec.n_subjects = n;
    spec.p = p;
    spec.max_rows_per_subject = staggered ? 3 : 1;
    spec.ties = ties;
    return oracle::random_instance(spec, seed);
}

// minimizer of a convex scalar function on [lo, hi]
template <class F>
double ternary_min(F&& f, double lo, double hi, int iters = 200)
{
    for (int k = 0; k < iters; ++k) {
        const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
        if (f(m1) < f(m2)) hi = m2;
        else lo = m1;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST(LambdaMax, ZeroCovariatesGiveZero)
{
    const auto d = parse("id,tstop,status,x\n1,1,1,0\n2,2,1,0\n3,3,0,0\n");
    EXPECT_EQ(lambda_max(make_context(d, Scaling::none), 0.5), 0.0);
}

TEST(LambdaMax, EqualsScaledGradientAtZero)
{
    const auto d = parse("id,tstart,tstop,status,x,z\n"
                         "1,0,1,1,0.5,2\n2,0,2,1,-1,0.3\n3,0.5,3,0,2,-1\n4,0,3,1,0.1,0.4\n5,0,4,0,-0.7,1.1\n");
    const auto ctx = make_context(d, Scaling::none);
    const double g0 = gradient(Eigen::VectorXd::Zero(2), ctx).cwiseAbs().maxCoeff();
    for (double alpha : {1.0, 0.5, 0.1})
        EXPECT_NEAR(lambda_max(ctx, alpha), g0 / alpha, 1e-14);
    EXPECT_NEAR(lambda_max(ctx, 0.0), g0 / 0.001, 1e-11);
    EXPECT_THROW(lambda_max(ctx, 1.5), ValidationError);
}

TEST(LambdaMax, Nullity)
{
    for (double alpha : {0.1, 0.5, 1.0}) {
        int active = 0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const auto ctx = make_context(make_instance(20, 4, seed, seed % 2 == 0));
            const double lmax = lambda_max(ctx, alpha);
            const auto above = fit(ctx, {alpha, 1.0001 * lmax});
            EXPECT_TRUE((above.beta.array() == 0.0).all()) << "alpha " << alpha << " seed " << seed;
            EXPECT_TRUE(above.converged);
            EXPECT_LE(above.iterations, 2);
            EXPECT_TRUE(above.kkt_ok);
            active += fit(ctx, {alpha, 0.99 * lmax}).n_nonzero >= 1;
        }
        EXPECT_GE(active, 16) << "alpha " << alpha;
    }
}

TEST(LambdaGrid, FormulaExample)
{
    const auto g = make_lambda_grid(1.0, 10, 2, 5, 1.0, 0.01);
    const std::vector<double> expect{1.0, std::pow(10.0, -0.5), 0.1, std::pow(10.0, -1.5), 0.01};
    ASSERT_EQ(g.values.size(), expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_NEAR(g.values[i], expect[i], 1e-15);
}

TEST(LambdaGrid, EpsilonDependsOnShape)
{
    EXPECT_EQ(make_lambda_grid(1.0, 115, 549).epsilon, 0.01);
    EXPECT_EQ(make_lambda_grid(1.0, 200, 13).epsilon, 1e-4);
    EXPECT_EQ(make_lambda_grid(1.0, 13, 13).epsilon, 1e-4);
}

TEST(LambdaGrid, Lamfract)
{
    EXPECT_EQ(make_lambda_grid(1.0, 100, 5, 100, 0.8).values.size(), 80u);
    EXPECT_EQ(make_lambda_grid(1.0, 100, 5, 100, 0.6).values.size(), 60u);
    EXPECT_EQ(make_lambda_grid(1.0, 100, 5, 10, 0.25).values.size(), 3u);
    EXPECT_EQ(make_lambda_grid(1.0, 100, 5, 100).values.size(), 100u);
}

TEST(LambdaGrid, Validation)
{
    EXPECT_THROW(make_lambda_grid(0.0, 10, 2), ValidationError);
    EXPECT_THROW(make_lambda_grid(1.0, 10, 2, 100, 0.0), ValidationError);
    EXPECT_THROW(make_lambda_grid(1.0, 10, 2, 100, 1.2), ValidationError);
}

TEST(LambdaGrid, StrictlyDecreasing)
{
    const auto g = make_lambda_grid(3.7, 50, 20, 37, 1.0);
    EXPECT_EQ(g.values.front(), 3.7);
    for (std::size_t i = 1; i < g.values.size(); ++i) EXPECT_LT(g.values[i], g.values[i - 1]);
    EXPECT_NEAR(g.values.back(), 3.7 * 1e-4, 1e-15);
}

TEST(Fit, MatchesNewtonInUnpenalizedLimit)
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto d = make_instance(30, 3, seed, seed % 3 == 0, seed % 4 == 0);
        const auto ctx = make_context(d);
        const auto f = fit(ctx, {0.5, 1e-6 * lambda_max(ctx, 0.5)});
        ASSERT_TRUE(f.converged) << "seed " << seed;
        const auto reference = oracle::newton_mle(d, d.x());
        for (Eigen::Index j = 0; j < 3; ++j)
            EXPECT_NEAR(f.beta_original(j), reference(j), 1e-3) << "seed " << seed << " coef " << j;
    }
}

TEST(Fit, SingleCovariateMatchesScalarMinimizer)
{
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto ctx = make_context(make_instance(15, 1, seed), Scaling::none);
        const double lam = 0.3 * lambda_max(ctx, 1.0);
        const auto f = fit(ctx, {1.0, lam});
        auto omega = [&](double b) { return objective(Eigen::VectorXd::Constant(1, b), ctx, {1.0, lam}); };
        double best = ternary_min(omega, -20.0, 20.0);
        if (omega(0.0) <= omega(best)) best = 0.0;
        EXPECT_NEAR(f.beta(0), best, 1e-5) << "seed " << seed;
    }
}

TEST(Fit, TwoCovariatesMatchNestedScalarMinimizer)
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto ctx = make_context(make_instance(20, 2, seed));
        const PenaltyParams p{0.7, 0.2 * lambda_max(ctx, 0.7)};
        const auto f = fit(ctx, p);
        auto inner = [&](double b0) {
            auto g = [&](double b1) { return objective(Eigen::Vector2d(b0, b1), ctx, p); };
            return g(ternary_min(g, -10.0, 10.0, 100));
        };
        const double b0 = ternary_min(inner, -10.0, 10.0, 100);
        EXPECT_NEAR(objective(f.beta, ctx, p), inner(b0), 1e-9) << "seed " << seed;
    }
}

TEST(Fit, ObjectiveNonIncreasingAndKkt)
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto ctx = make_context(make_instance(20, 5, seed, seed % 2 == 1, seed % 3 == 0));
        for (double alpha : {0.2, 1.0}) {
            for (double frac : {0.5, 0.1, 0.01}) {
                const auto f = fit(ctx, {alpha, frac * lambda_max(ctx, alpha)});
                ASSERT_TRUE(f.converged);
                for (std::size_t k = 1; k < f.objective_trace.size(); ++k)
                    EXPECT_LE(f.objective_trace[k] - f.objective_trace[k - 1], 1e-12);
                EXPECT_LT(f.kkt.max_violation, 1e-4);
                EXPECT_TRUE(f.kkt_ok);
                EXPECT_EQ(f.n_nonzero, (f.beta.array() != 0.0).count());
            }
        }
    }
}

TEST(Fit, TruncatedFitFailsKkt)
{
    const auto ctx = make_context(make_instance(20, 5, 3));
    SolverConfig cfg;
    cfg.max_iter = 1;
    const auto f = fit(ctx, {1.0, 0.05 * lambda_max(ctx, 1.0)}, cfg);
    EXPECT_FALSE(f.converged);
    EXPECT_FALSE(f.kkt_ok);
    EXPECT_FALSE(f.kkt.violating.empty());
    EXPECT_EQ(f.iterations, 1);
}

TEST(Fit, ZeroAtLambdaMaxPassesKkt)
{
    const auto ctx = make_context(make_instance(25, 4, 9));
    const PenaltyParams p{0.5, lambda_max(ctx, 0.5)};
    EXPECT_TRUE(kkt_check(Eigen::VectorXd::Zero(4), ctx, p, 1e-12).ok);
}

TEST(Fit, Deterministic)
{
    const auto ctx = make_context(make_instance(30, 6, 4, true));
    const PenaltyParams p{0.5, 0.05 * lambda_max(ctx, 0.5)};
    const auto a = fit(ctx, p);
    const auto b = fit(ctx, p);
    EXPECT_EQ(a.beta, b.beta);
    EXPECT_EQ(a.objective_trace, b.objective_trace);
}

TEST(Fit, RejectsBadInputs)
{
    const auto ctx = make_context(make_instance(10, 3, 1));
    EXPECT_THROW(fit(ctx, {0.5, 0.1}, {}, Eigen::VectorXd::Zero(2)), ValidationError);
    EXPECT_THROW(fit(ctx, {-0.1, 0.1}), ValidationError);
    SolverConfig cfg;
    cfg.tol = 0.0;
    EXPECT_THROW(fit(ctx, {0.5, 0.1}, cfg), ValidationError);
}

TEST(FitPath, WarmMatchesCold)
{
    const auto ctx = make_context(make_instance(50, 20, 11, true));
    const auto grid = make_lambda_grid(lambda_max(ctx, 0.5), ctx.n_rows(), ctx.n_cols(), 20);
    const auto path = fit_path(ctx, 0.5, grid);
    EXPECT_TRUE((path.beta.col(0).array() == 0.0).all());
    for (std::size_t l = 0; l < grid.values.size(); ++l) {
        const auto cold = fit(ctx, {0.5, grid.values[l]});
        const auto col = static_cast<Eigen::Index>(l);
        EXPECT_LT((path.beta.col(col) - cold.beta).cwiseAbs().maxCoeff(), 1e-5) << "lambda index " << l;
        EXPECT_TRUE(path.converged[l]);
        EXPECT_TRUE(path.errors[l].empty());
    }
}

TEST(FitPath, DenserGridShrinksJumps)
{
    const auto ctx = make_context(make_instance(40, 8, 12));
    const double lmax = lambda_max(ctx, 0.8);
    auto max_jump = [&](int m) {
        const auto path = fit_path(ctx, 0.8, make_lambda_grid(lmax, ctx.n_rows(), ctx.n_cols(), m, 1.0, 0.05));
        double jump = 0.0;
        for (Eigen::Index l = 1; l < path.beta.cols(); ++l)
            jump = std::max(jump, (path.beta.col(l) - path.beta.col(l - 1)).cwiseAbs().maxCoeff());
        return jump;
    };
    // the path is piecewise smooth, so each doubling roughly halves the largest jump
    const double coarse = max_jump(11), fine = max_jump(21), finer = max_jump(41);
    EXPECT_LE(fine, 0.6 * coarse);
    EXPECT_LE(finer, 0.6 * fine);
}

TEST(FitPath, RejectsIncreasingGrid)
{
    const auto ctx = make_context(make_instance(10, 2, 2));
    LambdaGrid g;
    g.values = {0.1, 0.2};
    EXPECT_THROW(fit_path(ctx, 0.5, g), ValidationError);
}

TEST(Fit, CgdFixtureSparsity)
{
    std::ifstream in(TDCOX_FIXTURE_DIR "/cgd.csv");
    ASSERT_TRUE(in);
    const auto d = parse_csv(in);
    ASSERT_EQ(d.n_rows(), 203);
    ASSERT_EQ(d.n_events(), 76);
    ASSERT_EQ(d.n_cols(), 13);
    const auto ctx = make_context(d);
    const auto f = fit(ctx, {0.5, 0.01477729});
    EXPECT_TRUE(f.converged);
    EXPECT_NEAR(static_cast<double>(f.n_nonzero), 11.0, 2.0);
}
