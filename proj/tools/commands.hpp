#pragma once

// Subcommands of the tdcox command-line tool. Each command reads its inputs,
// writes its outputs into --out-dir together with manifest.json, and returns
// a process exit code.

#include <tdcox/tdcox.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace tdcox::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* tool_version = "0.1.0";

enum ExitCode : int { ok = 0, usage_error = 2, numeric_error = 3 };

struct CommonOptions {
    std::string data;
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    unsigned threads = 0; // 0: all available cores
    bool quiet = false;
    CsvSchema schema;
};

// ---------------------------------------------------------------------------
// I/O helpers
// ---------------------------------------------------------------------------

inline std::string fmt(double v)
{
    return std::isfinite(v) ? detail::format_double(v) : "NA";
}

inline json number_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

inline Dataset read_dataset(const std::string& path, const CsvSchema& schema)
{
    detail::require(!path.empty(), "--data is required");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open data file '" + path + "'");
    try {
        return parse_csv(in, schema);
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

inline json read_json(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(path + ": invalid JSON (" + e.what() + ")");
    }
}

/// Collects what a command wrote and emits manifest.json at the end.
class Run {
public:
    Run(std::string command, const CommonOptions& common, std::ostream& log)
        : command_(std::move(command)), common_(common), log_(log),
          started_(std::chrono::steady_clock::now())
    {
        std::filesystem::create_directories(common_.out_dir);
        manifest_["command"] = command_;
        manifest_["inputs"] = json::object();
        manifest_["config"] = json::object();
        manifest_["seed"] = common_.seed;
        manifest_["versions"] = {
            {"tdcox", tool_version},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                          "." + std::to_string(EIGEN_MINOR_VERSION)},
        };
    }

    void input(const std::string& name, const std::string& path) { manifest_["inputs"][name] = path; }
    json& config() { return manifest_["config"]; }

    std::string path(const std::string& name) const
    {
        return (std::filesystem::path(common_.out_dir) / name).string();
    }

    void write_text(const std::string& name, const std::string& text)
    {
        std::ofstream out(path(name), std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + path(name) + "'");
        out << text;
        if (!out) throw std::runtime_error("write failed for '" + path(name) + "'");
        outputs_.push_back(name);
    }

    void write_json(const std::string& name, const json& j) { write_text(name, j.dump(2) + "\n"); }

    void say(const std::string& line) const
    {
        if (!common_.quiet) log_ << line << '\n';
    }

    void finish()
    {
        manifest_["outputs"] = outputs_;
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started_;
        manifest_["wall_time_seconds"] = elapsed.count();
        std::ofstream out(path("manifest.json"), std::ios::binary);
        out << manifest_.dump(2) << '\n';
    }

private:
    std::string command_;
    CommonOptions common_;
    std::ostream& log_;
    std::chrono::steady_clock::time_point started_;
    json manifest_;
    std::vector<std::string> outputs_;
};

// ---------------------------------------------------------------------------
// fit.json
// ---------------------------------------------------------------------------

inline json fit_to_json(const FitResult& f, const LikelihoodContext& ctx, const Dataset& d)
{
    const auto& s = *ctx.scaling;
    const auto keep = s.retained();
    std::vector<std::optional<double>> std_coef(static_cast<std::size_t>(s.original_cols()));
    for (std::size_t k = 0; k < keep.size(); ++k)
        std_coef[static_cast<std::size_t>(keep[k])] = f.beta(static_cast<Eigen::Index>(k));

    json cols = json::array();
    for (Eigen::Index j = 0; j < s.original_cols(); ++j) {
        const auto& sc = std_coef[static_cast<std::size_t>(j)];
        cols.push_back({
            {"name", d.column_names()[static_cast<std::size_t>(j)]},
            {"coef", f.beta_original(j)},
            {"coef_standardized", sc ? json(*sc) : json(nullptr)},
            {"mean", s.means(j)},
            {"sd", s.sds(j)},
            {"dropped", !sc.has_value()},
        });
    }
    json violating = json::array();
    for (auto i : f.kkt.violating) violating.push_back(ctx.column_names[static_cast<std::size_t>(i)]);

    return {
        {"format", "tdcox-fit"},
        {"version", 1},
        {"alpha", f.params.alpha},
        {"lambda", f.params.lambda},
        {"data", {{"n_rows", d.n_rows()}, {"n_subjects", d.n_subjects()}, {"n_events", d.n_events()}, {"p", d.n_cols()}}},
        {"n_nonzero", f.n_nonzero},
        {"converged", f.converged},
        {"iterations", f.iterations},
        {"objective", f.objective_trace.back()},
        {"kkt", {{"ok", f.kkt_ok}, {"max_violation", f.kkt.max_violation}, {"violating", violating}}},
        {"columns", cols},
    };
}

struct Model {
    double alpha = 0.0;
    double lambda = 0.0;
    ScalingInfo scaling;
    Eigen::VectorXd beta_std; // retained columns only
};

inline Model model_from_json(const json& j, const std::string& source)
{
    try {
        if (j.at("format") != "tdcox-fit") throw ValidationError(source + ": not a tdcox fit file");
        Model m;
        m.alpha = j.at("alpha").get<double>();
        m.lambda = j.at("lambda").get<double>();
        const auto& cols = j.at("columns");
        const auto p = static_cast<Eigen::Index>(cols.size());
        m.scaling.means.resize(p);
        m.scaling.sds.resize(p);
        std::vector<double> beta;
        for (Eigen::Index c = 0; c < p; ++c) {
            const auto& col = cols.at(static_cast<std::size_t>(c));
            m.scaling.column_names.push_back(col.at("name").get<std::string>());
            m.scaling.means(c) = col.at("mean").get<double>();
            m.scaling.sds(c) = col.at("sd").get<double>();
            if (col.at("dropped").get<bool>()) m.scaling.dropped.push_back(c);
            else beta.push_back(col.at("coef_standardized").get<double>());
        }
        m.beta_std = Eigen::Map<Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
        return m;
    } catch (const json::exception& e) {
        throw ValidationError(source + ": malformed fit file (" + e.what() + ")");
    }
}

inline std::string summary_line(const FitResult& f, const Dataset& d)
{
    return std::to_string(f.n_nonzero) + " out of " + std::to_string(d.n_cols()) +
           " coefficients are nonzero\nn = " + std::to_string(d.n_rows()) +
           ", number of events = " + std::to_string(d.n_events());
}

inline std::string coefficient_table(const FitResult& f, const LikelihoodContext& ctx, const Dataset& d,
                                     bool standardized)
{
    std::ostringstream out;
    const auto keep = ctx.scaling->retained();
    for (std::size_t k = 0; k < keep.size(); ++k) {
        const auto j = keep[k];
        const double b = standardized ? f.beta(static_cast<Eigen::Index>(k)) : f.beta_original(j);
        if (b == 0.0) continue;
        out << "  " << d.column_names()[static_cast<std::size_t>(j)] << "  " << fmt(b) << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// path.csv
// ---------------------------------------------------------------------------

inline std::string path_csv(const PathResult& path, const Dataset& d)
{
    std::ostringstream out;
    out << "lambda,n_nonzero,converged";
    for (const auto& c : d.column_names()) out << ',' << detail::csv_field(c);
    out << '\n';
    for (std::size_t l = 0; l < path.lambdas.size(); ++l) {
        const auto col = static_cast<Eigen::Index>(l);
        out << fmt(path.lambdas[l]) << ',' << path.n_nonzero[l] << ',' << (path.converged[l] ? 1 : 0);
        for (Eigen::Index j = 0; j < path.beta_original.rows(); ++j) out << ',' << fmt(path.beta_original(j, col));
        out << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct SimulateOptions {
    std::string config;
    int n_subjects = 120;
    double max_time = 10.0;
    int n_fixed = 0;
    int n_td = 0;
    std::vector<double> beta;
    std::vector<double> beta_uniform{0.0, 2.0};
    double event_rate = 0.2;
    bool no_censor = false;
    double test_fraction = 0.0;
};

inline int cmd_simulate(const CommonOptions& common, SimulateOptions opt, const CLI::App& sub,
                        std::ostream& log)
{
    Run run("simulate", common, log);
    std::uint64_t seed = common.seed;
    if (!opt.config.empty()) {
        run.input("config", opt.config);
        const auto j = read_json(opt.config);
        // explicit flags win over the config file
        auto take = [&](const char* key, const char* flag, auto& target) {
            if (j.contains(key) && sub.count(flag) == 0) target = j.at(key).get<std::decay_t<decltype(target)>>();
        };
        try {
            take("n_subjects", "--n-subjects", opt.n_subjects);
            take("max_time", "--max-time", opt.max_time);
            take("n_fixed", "--n-fixed", opt.n_fixed);
            take("n_td", "--n-td", opt.n_td);
            take("beta_true", "--beta", opt.beta);
            take("beta_uniform", "--beta-uniform", opt.beta_uniform);
            take("event_rate", "--event-rate", opt.event_rate);
            take("test_fraction", "--test-fraction", opt.test_fraction);
            if (j.contains("censor") && sub.count("--no-censor") == 0) opt.no_censor = !j.at("censor").get<bool>();
            if (j.contains("seed") && sub.count("--seed") == 0) seed = j.at("seed").get<std::uint64_t>();
        } catch (const json::exception& e) {
            throw ValidationError(opt.config + ": " + e.what());
        }
    }

    SimConfig cfg;
    cfg.n_subjects = opt.n_subjects;
    cfg.max_time = opt.max_time;
    cfg.n_fixed = opt.n_fixed;
    cfg.n_td = opt.n_td;
    cfg.event_rate = opt.event_rate;
    cfg.censor = !opt.no_censor;
    cfg.seed = seed;
    const int p = opt.n_fixed + opt.n_td;
    if (!opt.beta.empty()) {
        cfg.beta_true = opt.beta;
    } else {
        detail::require(opt.beta_uniform.size() == 2 && opt.beta_uniform[0] <= opt.beta_uniform[1],
                        "--beta-uniform takes two values lo,hi with lo <= hi");
        // separate stream from the simulation's own draws
        cfg.beta_true = uniform_effects(p, opt.beta_uniform[0], opt.beta_uniform[1], seed ^ 0x9E3779B97F4A7C15ULL);
    }
    const auto sim = simulate(cfg);

    run.config() = {{"n_subjects", cfg.n_subjects}, {"max_time", cfg.max_time}, {"n_fixed", cfg.n_fixed},
                    {"n_td", cfg.n_td}, {"event_rate", cfg.event_rate}, {"censor", cfg.censor},
                    {"test_fraction", opt.test_fraction}};
    run.config()["seed"] = seed;

    std::ostringstream csv;
    write_csv(sim, csv);
    run.write_text("sim.csv", csv.str());

    json truth = {
        {"format", "tdcox-truth"},
        {"version", 1},
        {"seed", seed},
        {"n_subjects", cfg.n_subjects},
        {"n_rows", sim.dataset.n_rows()},
        {"n_events", sim.n_events},
        {"n_truncated", sim.n_truncated},
        {"max_time", cfg.max_time},
        {"event_rate", cfg.event_rate},
        {"censor", cfg.censor},
        {"n_fixed", cfg.n_fixed},
        {"n_td", cfg.n_td},
        {"column_names", sim.dataset.column_names()},
        {"beta_true", sim.beta_true},
    };
    if (opt.test_fraction > 0.0) {
        const auto split = split_by_subject(sim.dataset, opt.test_fraction, seed);
        std::ostringstream train, test;
        write_csv(split.train, train);
        write_csv(split.test, test);
        run.write_text("train.csv", train.str());
        run.write_text("test.csv", test.str());
        truth["split"] = {{"test_fraction", opt.test_fraction},
                          {"train_rows", split.train.n_rows()},
                          {"train_subjects", split.train.n_subjects()},
                          {"test_rows", split.test.n_rows()},
                          {"test_subjects", split.test.n_subjects()}};
    }
    run.write_json("truth.json", truth);
    run.say("n = " + std::to_string(sim.dataset.n_rows()) + ", number of events = " +
            std::to_string(sim.n_events) + ", subjects = " + std::to_string(cfg.n_subjects));
    if (sim.n_truncated) run.say("warning: " + std::to_string(sim.n_truncated) + " follow-up times left unmatched");
    run.finish();
    return ok;
}

struct SolverOptions {
    double tol = 1e-7;
    int max_iter = 10000;
    double kkt_tol = 1e-4;

    SolverConfig config() const
    {
        SolverConfig c;
        c.tol = tol;
        c.max_iter = max_iter;
        c.kkt_tol = kkt_tol;
        return c;
    }

    json to_json() const { return {{"tol", tol}, {"max_iter", max_iter}, {"kkt_tol", kkt_tol}}; }
};

struct FitOptions {
    double alpha = 0.0;
    double lambda = 0.0;
    bool standardized_coefs = false;
    SolverOptions solver;
};

inline int cmd_fit(const CommonOptions& common, const FitOptions& opt, std::ostream& log)
{
    Run run("fit", common, log);
    run.input("data", common.data);
    run.config() = {{"alpha", opt.alpha}, {"lambda", opt.lambda}, {"solver", opt.solver.to_json()}};
    const auto d = read_dataset(common.data, common.schema);
    const auto ctx = make_context(d);
    const auto f = fit(ctx, {opt.alpha, opt.lambda}, opt.solver.config());
    run.write_json("fit.json", fit_to_json(f, ctx, d));
    run.say(summary_line(f, d));
    if (!common.quiet) log << coefficient_table(f, ctx, d, opt.standardized_coefs);
    if (!f.converged) run.say("warning: solver stopped after " + std::to_string(f.iterations) + " iterations without converging");
    if (!f.kkt_ok) run.say("warning: KKT check failed (max violation " + fmt(f.kkt.max_violation) + ")");
    run.finish();
    return ok;
}

struct PathOptions {
    double alpha = 1.0;
    int m = 100;
    double lamfract = 1.0;
    std::optional<double> epsilon;
    SolverOptions solver;
};

inline int cmd_path(const CommonOptions& common, const PathOptions& opt, std::ostream& log)
{
    Run run("path", common, log);
    run.input("data", common.data);
    const auto d = read_dataset(common.data, common.schema);
    const auto ctx = make_context(d);
    const double lmax = lambda_max(ctx, opt.alpha);
    if (!(lmax > 0.0)) throw ValidationError("lambda_max is zero: covariates carry no information about the events");
    const auto grid = make_lambda_grid(lmax, ctx.n_rows(), ctx.n_cols(), opt.m, opt.lamfract, opt.epsilon);
    run.config() = {{"alpha", opt.alpha}, {"m", opt.m}, {"lamfract", opt.lamfract},
                    {"epsilon", grid.epsilon}, {"lambda_max", lmax}, {"solver", opt.solver.to_json()}};
    const auto path = fit_path(ctx, opt.alpha, grid, opt.solver.config());
    run.write_text("path.csv", path_csv(path, d));
    run.say(std::to_string(path.lambdas.size()) + " lambda values from " + fmt(path.lambdas.front()) +
            " to " + fmt(path.lambdas.back()) + "; " + std::to_string(path.n_nonzero.back()) + " out of " +
            std::to_string(d.n_cols()) + " coefficients are nonzero at the smallest");
    for (std::size_t l = 0; l < path.errors.size(); ++l)
        if (!path.errors[l].empty()) run.say("warning: lambda " + fmt(path.lambdas[l]) + ": " + path.errors[l]);
    run.finish();
    return ok;
}

struct CvCommandOptions {
    std::vector<double> alphas{1.0};
    int k = 10;
    std::string metric = "vv";
    double lamfract = 1.0;
    int m = 100;
    std::optional<double> epsilon;
    bool refit = false;
    SolverOptions solver;
};

inline int cmd_cv(const CommonOptions& common, const CvCommandOptions& opt, std::ostream& log)
{
    Run run("cv", common, log);
    run.input("data", common.data);
    const auto d = read_dataset(common.data, common.schema);
    CvOptions cv;
    cv.k = opt.k;
    cv.seed = common.seed;
    cv.metric = parse_metric(opt.metric);
    cv.lamfract = opt.lamfract;
    cv.m = opt.m;
    cv.epsilon = opt.epsilon;
    cv.refit = opt.refit;
    cv.threads = common.threads;
    run.config() = {{"alphas", opt.alphas}, {"k", opt.k}, {"metric", opt.metric}, {"lamfract", opt.lamfract},
                    {"m", opt.m}, {"refit", opt.refit}, {"threads", common.threads},
                    {"solver", opt.solver.to_json()}};
    if (cv.refit) run.say("cross-validating, then refitting at the optimum");
    const auto res = cross_validate(d, opt.alphas, opt.solver.config(), cv);

    json surface = json::array();
    std::ostringstream err;
    err << "alpha,lambda,mean,se,n_folds\n";
    for (const auto& c : res.curves) {
        json mean = json::array(), se = json::array();
        for (std::size_t l = 0; l < c.lambdas.size(); ++l) {
            mean.push_back(number_or_null(c.mean[l]));
            se.push_back(number_or_null(c.se[l]));
            err << fmt(c.alpha) << ',' << fmt(c.lambdas[l]) << ',' << fmt(c.mean[l]) << ',' << fmt(c.se[l])
                << ',' << c.n_folds[l] << '\n';
        }
        surface.push_back({{"alpha", c.alpha}, {"lambda_max", c.lambdas.front()}, {"lambdas", c.lambdas},
                           {"mean", mean}, {"se", se}, {"n_folds", c.n_folds}});
    }
    const auto& best = res.curves[res.alpha_index];
    json out = {
        {"format", "tdcox-cv"},
        {"version", 1},
        {"metric", to_string(res.metric)},
        {"k", opt.k},
        {"seed", common.seed},
        {"alphas", res.alphas},
        {"lambda_min", res.lambda_min},
        {"lambda_1se", res.lambda_1se},
        {"alpha_optimal", res.alpha_optimal},
        {"score_min", best.mean[res.lambda_min_index]},
        {"se_min", number_or_null(best.se[res.lambda_min_index])},
        {"warnings", res.warnings},
        {"surface", surface},
    };
    run.write_json("cv.json", out);
    run.write_text("cv_error.csv", err.str());
    for (const auto& w : res.warnings) run.say("warning: " + w);
    run.say("Optimal parameter values\nlambda.min lambda.1se alpha.optimal\n" + fmt(res.lambda_min) + " " +
            fmt(res.lambda_1se) + " " + fmt(res.alpha_optimal));

    if (res.refit) {
        run.write_text("path.csv", path_csv(*res.refit, d));
        const auto ctx = make_context(d);
        const auto f = fit(ctx, {res.alpha_optimal, res.lambda_min}, opt.solver.config());
        run.write_json("fit.json", fit_to_json(f, ctx, d));
        run.say(summary_line(f, d));
    }
    run.finish();
    return ok;
}

struct PredictOptions {
    std::string fit;
    std::string newdata;
};

inline int cmd_predict(const CommonOptions& common, const PredictOptions& opt, std::ostream& log)
{
    Run run("predict", common, log);
    run.input("fit", opt.fit);
    run.input("data", common.data);
    run.input("newdata", opt.newdata);
    const auto model = model_from_json(read_json(opt.fit), opt.fit);
    const auto train = read_dataset(common.data, common.schema);
    const auto newdata = read_dataset(opt.newdata, common.schema);
    detail::require(static_cast<Eigen::Index>(newdata.n_subjects()) == newdata.n_rows(),
                    opt.newdata + ": survival curves need one row per subject (time-dependent new data is not supported)");
    const auto ctx = make_context(train, model.scaling);
    const auto bh = baseline_cumhaz(model.beta_std, ctx);
    const auto sc = survival_curves(model.beta_std, bh, newdata, model.scaling);

    std::ostringstream surv, avg;
    surv << "subject,time,surv\n";
    for (Eigen::Index i = 0; i < sc.surv.rows(); ++i)
        for (std::size_t t = 0; t < sc.times.size(); ++t)
            surv << detail::csv_field(newdata.subject_ids()[static_cast<std::size_t>(i)]) << ','
                 << fmt(sc.times[t]) << ',' << fmt(sc.surv(i, static_cast<Eigen::Index>(t))) << '\n';
    const auto mean = sc.average();
    avg << "time,surv\n";
    for (std::size_t t = 0; t < sc.times.size(); ++t)
        avg << fmt(sc.times[t]) << ',' << fmt(mean(static_cast<Eigen::Index>(t))) << '\n';
    run.write_text("surv.csv", surv.str());
    run.write_text("surv_avg.csv", avg.str());
    run.say(std::to_string(sc.surv.rows()) + " survival curves at " + std::to_string(sc.times.size()) + " event times");
    run.finish();
    return ok;
}

struct ConcordanceOptions {
    std::string fit;
};

inline int cmd_concordance(const CommonOptions& common, const ConcordanceOptions& opt, std::ostream& out,
                           std::ostream& log)
{
    Run run("concordance", common, log);
    run.input("fit", opt.fit);
    run.input("data", common.data);
    const auto model = model_from_json(read_json(opt.fit), opt.fit);
    const auto d = read_dataset(common.data, common.schema);
    const auto c = concordance(linear_predictor(model.beta_std, d, model.scaling), d);
    const json j = {
        {"format", "tdcox-concordance"},
        {"version", 1},
        {"c", c.c},
        {"ci_low", c.ci_low},
        {"ci_high", c.ci_high},
        {"std_err", c.std_err},
        {"concordant", c.concordant},
        {"discordant", c.discordant},
        {"tied", c.tied},
        {"n_rows", d.n_rows()},
        {"n_events", d.n_events()},
    };
    run.write_json("concordance.json", j);
    out << j.dump() << '\n';
    run.finish();
    return ok;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Penalized Cox regression with time-dependent covariates", "tdcox"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version);

    CommonOptions common;
    auto add_common = [&](CLI::App* sub, bool needs_data) {
        auto* d = sub->add_option("--data", common.data, "input CSV (id, tstart, tstop, status, covariates...)");
        if (needs_data) d->required();
        sub->add_option("--out-dir", common.out_dir, "directory for output files")->capture_default_str();
        sub->add_option("--seed", common.seed, "random seed")->capture_default_str();
        sub->add_option("--threads", common.threads, "worker threads (0 = all cores)")->capture_default_str();
        sub->add_flag("--quiet", common.quiet, "suppress the summary printout");
        sub->add_option("--id-col", common.schema.id, "subject id column")->capture_default_str();
        sub->add_option("--start-col", common.schema.start, "interval start column")->capture_default_str();
        sub->add_option("--stop-col", common.schema.stop, "interval stop column")->capture_default_str();
        sub->add_option("--status-col", common.schema.status, "event indicator column")->capture_default_str();
    };
    auto add_solver = [](CLI::App* sub, SolverOptions& s) {
        sub->add_option("--tol", s.tol, "convergence tolerance on relative coefficient change")->capture_default_str();
        sub->add_option("--max-iter", s.max_iter, "iteration cap per fit")->capture_default_str();
        sub->add_option("--kkt-tol", s.kkt_tol, "KKT violation tolerance")->capture_default_str();
    };

    std::function<int()> action;

    SimulateOptions sim;
    auto* s = app.add_subcommand("simulate", "simulate counting-process data with time-dependent covariates");
    add_common(s, false);
    s->add_option("--config", sim.config, "JSON file with simulation settings (flags override)");
    s->add_option("--n-subjects", sim.n_subjects, "number of subjects")->capture_default_str();
    s->add_option("--max-time", sim.max_time, "follow-up length in time units")->capture_default_str();
    s->add_option("--n-fixed", sim.n_fixed, "time-fixed covariates")->capture_default_str();
    s->add_option("--n-td", sim.n_td, "time-dependent covariates")->capture_default_str();
    s->add_option("--beta", sim.beta, "true effects, fixed first (comma list)")->delimiter(',');
    s->add_option("--beta-uniform", sim.beta_uniform, "draw true effects uniformly from lo,hi")
        ->delimiter(',')->expected(2);
    s->add_option("--event-rate", sim.event_rate, "constant marginal hazard")->capture_default_str();
    s->add_flag("--no-censor", sim.no_censor, "no uniform censoring");
    s->add_option("--test-fraction", sim.test_fraction, "also write train.csv/test.csv, split by subject");
    s->callback([&] { action = [&] { return cmd_simulate(common, sim, *s, err); }; });

    FitOptions fo;
    auto* f = app.add_subcommand("fit", "fit at one (alpha, lambda)");
    add_common(f, true);
    f->add_option("--alpha", fo.alpha, "elastic-net mixing in [0, 1]")->required();
    f->add_option("--lambda", fo.lambda, "penalty strength")->required();
    f->add_flag("--standardized-coefs", fo.standardized_coefs, "print coefficients on the standardized scale");
    add_solver(f, fo.solver);
    f->callback([&] { action = [&] { return cmd_fit(common, fo, err); }; });

    PathOptions po;
    auto* p = app.add_subcommand("path", "fit a warm-started regularization path");
    add_common(p, true);
    p->add_option("--alpha", po.alpha)->capture_default_str();
    p->add_option("--m", po.m, "grid length")->capture_default_str();
    p->add_option("--lamfract", po.lamfract, "fraction of the grid to fit")->capture_default_str();
    p->add_option("--epsilon", po.epsilon, "lambda_min / lambda_max");
    add_solver(p, po.solver);
    p->callback([&] { action = [&] { return cmd_path(common, po, err); }; });

    CvCommandOptions co;
    auto* c = app.add_subcommand("cv", "cross-validate over alpha and lambda");
    add_common(c, true);
    c->add_option("--alphas", co.alphas, "comma list of alpha values")->delimiter(',');
    c->add_option("--k", co.k, "number of folds")->capture_default_str();
    c->add_option("--metric", co.metric, "vv, basic or cindex")->capture_default_str();
    c->add_option("--lamfract", co.lamfract, "fraction of the grid to fit")->capture_default_str();
    c->add_option("--m", co.m, "grid length")->capture_default_str();
    c->add_option("--epsilon", co.epsilon, "lambda_min / lambda_max");
    c->add_flag("--refit", co.refit, "refit the full data at the optimum (path.csv, fit.json)");
    add_solver(c, co.solver);
    c->callback([&] { action = [&] { return cmd_cv(common, co, err); }; });

    PredictOptions pr;
    auto* pd = app.add_subcommand("predict", "survival curves for new subjects");
    add_common(pd, true);
    pd->add_option("--fit", pr.fit, "fit.json")->required();
    pd->add_option("--newdata", pr.newdata, "CSV with one row per new subject")->required();
    pd->callback([&] { action = [&] { return cmd_predict(common, pr, err); }; });

    ConcordanceOptions cc;
    auto* cd = app.add_subcommand("concordance", "Harrell's C of a fit on (held-out) data");
    add_common(cd, true);
    cd->add_option("--fit", cc.fit, "fit.json")->required();
    cd->callback([&] { action = [&] { return cmd_concordance(common, cc, out, err); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : usage_error;
    }
    try {
        return action();
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return numeric_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return numeric_error;
    }
}

} // namespace tdcox::cli
