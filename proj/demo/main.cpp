#include <tdcox/tdcox.hpp>

#include <iomanip>
#include <iostream>

int main()
{
    using namespace tdcox;
    try {
        SimConfig cfg;
        cfg.n_subjects = 300;
        cfg.n_fixed = 5;
        cfg.n_td = 3;
        cfg.beta_true = {1.0, -0.8, 0.0, 0.0, 0.0, 0.6, 0.0, 0.0};
        cfg.seed = 42;
        const auto sim = simulate(cfg);
        const auto split = split_by_subject(sim.dataset, 0.3, 42);
        std::cout << "simulated " << sim.dataset.n_rows() << " rows, " << sim.n_events << " events\n";

        CvOptions opt;
        opt.k = 5;
        opt.threads = 0;
        const auto cv = cross_validate(split.train, {0.5, 1.0}, {}, opt);
        std::cout << "alpha.optimal " << cv.alpha_optimal << ", lambda.min " << cv.lambda_min << '\n';

        const auto ctx = make_context(split.train);
        const auto f = fit(ctx, {cv.alpha_optimal, cv.lambda_min});
        std::cout << std::setw(8) << "column" << std::setw(12) << "estimate" << std::setw(8) << "truth" << '\n';
        for (Eigen::Index j = 0; j < f.beta_original.size(); ++j)
            std::cout << std::setw(8) << split.train.column_names()[static_cast<std::size_t>(j)] << std::setw(12)
                      << std::setprecision(4) << f.beta_original(j) << std::setw(8)
                      << cfg.beta_true[static_cast<std::size_t>(j)] << '\n';

        const auto eta = linear_predictor(f.beta, split.test, *ctx.scaling);
        const auto c = concordance(eta, split.test);
        std::cout << "held-out C " << c.c << " [" << c.ci_low << ", " << c.ci_high << "]\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
