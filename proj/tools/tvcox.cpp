// tvcox: fit, simulate, bench and cv subcommands over the header library.
#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>
#include <CLI11.hpp>
#include <tvcox/error.hpp>
#include <tvcox/inference.hpp>
#include <tvcox/io.hpp>
#include <tvcox/model.hpp>
#include <tvcox/simulate.hpp>
#include <tvcox/version.hpp>

namespace fs = std::filesystem;
using tvcox::Error;
using tvcox::ErrorCode;
using tvcox::io::json;

namespace {

/// Applies a flat JSON object of long-flag names, e.g. {"K": 8, "nu": 0.02},
/// to options the command line left unset.
void apply_json_config(CLI::App* sub, const std::string& path)
{
    if (path.empty()) return;
    json j;
    try {
        j = json::parse(tvcox::io::read_file(path));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::usage, "config file '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::usage, "config file '" + path + "' must hold a JSON object");
    for (const auto& [key, value] : j.items()) {
        CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr || key == "config") {
            throw Error(ErrorCode::usage, "config file '" + path + "': unknown key '" + key + "'");
        }
        if (opt->count() > 0) continue;
        const auto text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
        std::vector<std::string> inputs;
        if (value.is_array()) {
            for (const auto& v : value) inputs.push_back(text(v));
        } else {
            inputs.push_back(text(value));
        }
        try {
            opt->add_result(inputs);
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw Error(ErrorCode::usage, "config key '" + key + "': " + e.what());
        }
    }
}

struct SolverFlags
{
    int degree = 3;
    double nu = 0.05;
    double eta = 1.0;
    double tol = 1e-6;
    double loglik_tol = 1e-6;
    int max_iter = 20000;
    std::uint64_t seed = 1;
    long hessian_guard = tvcox::likelihood::default_hessian_guard;
    bool no_standardize = false;

    void add_to(CLI::App* app)
    {
        app->add_option("--degree", degree, "spline degree")->capture_default_str()->check(CLI::NonNegativeNumber);
        app->add_option("--nu", nu, "learning rate")->capture_default_str();
        app->add_option("--eta", eta, "subsample fraction per iteration")->capture_default_str();
        app->add_option("--tol", tol, "score tolerance")->capture_default_str();
        app->add_option("--loglik-tol", loglik_tol, "relative log-likelihood tolerance, 0 disables")->capture_default_str();
        app->add_option("--max-iter", max_iter, "iteration cap")->capture_default_str();
        app->add_option("--seed", seed, "random seed")->capture_default_str();
        app->add_option("--hessian-guard", hessian_guard, "largest PK for full Hessians")->capture_default_str();
        app->add_flag("--no-standardize", no_standardize, "fit on raw covariates");
    }

    tvcox::optim::MmsaConfig config() const
    {
        tvcox::optim::MmsaConfig c;
        c.learning_rate = nu;
        c.subsample_fraction = eta;
        c.tol = tol;
        c.loglik_tol = loglik_tol;
        c.max_iterations = max_iter;
        c.seed = seed;
        c.hessian_guard = hessian_guard;
        c.validate();
        return c;
    }

    void echo(json& j) const
    {
        j["degree"] = degree;
        j["nu"] = nu;
        j["eta"] = eta;
        j["tol"] = tol;
        j["loglik-tol"] = loglik_tol;
        j["max-iter"] = max_iter;
        j["seed"] = seed;
        j["hessian-guard"] = hessian_guard;
        j["standardize"] = !no_standardize;
    }
};

tvcox::inference::Information parse_information(const std::string& s)
{
    if (s == "empirical") return tvcox::inference::Information::empirical;
    if (s == "observed") return tvcox::inference::Information::observed;
    throw Error(ErrorCode::usage, "information must be 'empirical' or 'observed'");
}

std::vector<double> linspace(double lo, double hi, int points)
{
    std::vector<double> g(static_cast<size_t>(points));
    for (int i = 0; i < points; ++i) {
        g[static_cast<size_t>(i)] = points == 1 ? lo : lo + (hi - lo) * i / (points - 1);
    }
    g.back() = hi;
    return g;
}

fs::path with_suffix(const fs::path& p, const std::string& suffix)
{
    return p.parent_path() / (p.stem().string() + suffix + p.extension().string());
}

// ---- fit ------------------------------------------------------------------

struct FitArgs
{
    std::string data;
    int K = 5;
    std::string optimizer = "mmsa";
    std::string information = "empirical";
    int grid_points = 100;
    size_t trace_limit = 1000;
    std::string out = ".";
    SolverFlags solver;
};

int cmd_fit(const FitArgs& a)
{
    json config = {{"command", "fit"}, {"data", a.data}, {"K", a.K}, {"optimizer", a.optimizer}};
    a.solver.echo(config);
    config["information"] = a.information;
    config["grid-points"] = a.grid_points;
    config["trace-limit"] = a.trace_limit;
    config["out"] = a.out;
    if (a.grid_points < 2) throw Error(ErrorCode::usage, "--grid-points must be at least 2");

    const auto data = tvcox::survdata::load_csv(a.data);
    tvcox::FitOptions opts;
    opts.K = a.K;
    opts.degree = a.solver.degree;
    opts.optimizer = tvcox::optim::parse_optimizer(a.optimizer);
    opts.config = a.solver.config();
    opts.standardize = !a.solver.no_standardize;
    const auto kind = parse_information(a.information);

    const auto m = tvcox::fit_model(data, opts);
    const auto tests = tvcox::inference::test_time_varying(m, kind, true);
    const auto grid = linspace(m.spec.t_min(), m.spec.t_max(), a.grid_points);
    const auto curves = tvcox::inference::curves_for(m, kind, grid);

    const std::string fit_json = tvcox::io::fit_document(m, &tests, config, a.trace_limit).dump(2) + "\n";
    const std::string curves_csv = tvcox::io::curves_csv(curves, m.covariate_names, config);
    const std::string tests_csv = tvcox::io::tests_csv(tests, config);
    const fs::path dir(a.out);
    tvcox::io::write_atomic(dir / "fit.json", fit_json);
    tvcox::io::write_atomic(dir / "curves.csv", curves_csv);
    tvcox::io::write_atomic(dir / "tests.csv", tests_csv);

    std::cout << "optimizer=" << m.fit.optimizer << " iterations=" << m.fit.iterations
              << " loglik=" << tvcox::io::format_double(m.fit.loglik)
              << " stop=" << tvcox::optim::to_string(m.fit.reason) << '\n';
    for (const auto& e : tests.entries) {
        std::cout << "  " << e.name << ": S=" << tvcox::io::format_double(e.statistic) << " df=" << e.df
                  << " p=" << tvcox::io::format_double(e.p_value) << '\n';
    }
    return m.fit.converged ? 0 : 2;
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs
{
    int setting = 1;
    size_t n = 1000;
    int P = 0;
    int J = 1;
    double gamma = 1.0;
    std::uint64_t seed = 1;
    std::string out;
};

tvcox::sim::ScenarioSpec scenario_or_usage(int setting, size_t n, int P, int J, double gamma, std::uint64_t seed)
{
    if (setting < 1 || setting > 3) throw Error(ErrorCode::usage, "--setting must be 1, 2 or 3");
    if (setting == 3 && P != 2) throw Error(ErrorCode::usage, "setting 3 has exactly two covariates; pass --P 2");
    if (P < 1) throw Error(ErrorCode::usage, "--P must be at least 1");
    if (n < 1) throw Error(ErrorCode::usage, "--n must be at least 1");
    if (J < 1) throw Error(ErrorCode::usage, "--J must be at least 1");
    if (!(gamma >= 0.0 && gamma <= 3.0)) throw Error(ErrorCode::usage, "--gamma must lie in [0, 3]");
    return tvcox::sim::ScenarioSpec::make(setting, n, P, J, gamma, seed);
}

json coefficients_json(const tvcox::sim::ScenarioSpec& spec)
{
    json out = json::array();
    for (const auto& c : spec.coefficients) {
        out.push_back({{"tag", tvcox::sim::to_string(c.tag)}, {"value", c.value}});
    }
    return out;
}

int cmd_simulate(SimulateArgs a, bool p_given)
{
    if (a.setting == 3 && !p_given) a.P = 2;
    if (a.setting != 3 && !p_given) throw Error(ErrorCode::usage, "--P is required for settings 1 and 2");
    const auto spec = scenario_or_usage(a.setting, a.n, a.P, a.J, a.gamma, a.seed);
    json config = {{"command", "simulate"}, {"setting", a.setting}, {"n", a.n}, {"P", a.P}, {"J", a.J},
        {"gamma", a.gamma}, {"seed", a.seed}, {"out", a.out}};

    const auto ds = tvcox::sim::generate(spec);
    json sidecar = {
        {"tvcox_version", std::string(tvcox::version)},
        {"config", config},
        {"coefficients", coefficients_json(spec)},
        {"events", ds.n_events()},
        {"censored_fraction", 1.0 - static_cast<double>(ds.n_events()) / static_cast<double>(ds.n())},
    };
    const fs::path out(a.out);
    tvcox::io::write_atomic(out, tvcox::io::dataset_csv(ds));
    tvcox::io::write_atomic(fs::path(out.string() + ".json"), sidecar.dump(2) + "\n");
    std::cout << "wrote " << ds.n() << " rows (" << ds.n_events() << " events) to " << a.out << '\n';
    return 0;
}

// ---- bench ----------------------------------------------------------------

struct BenchArgs
{
    int setting = 1;
    size_t n = 1000;
    int P = 4;
    int J = 1;
    int K = 5;
    double gamma = 1.0;
    std::vector<std::string> optimizers{"mmsa", "newton"};
    int replicates = 10;
    std::string out;
    SolverFlags solver;
};

struct BenchRow
{
    int replicate = 0;
    std::string optimizer;
    bool ok = false;
    std::string error;
    int iterations = 0;
    bool converged = false;
    double loglik = 0.0;
    double seconds = 0.0;
    double bias = 0.0;
    double imse = 0.0;
    double rejection = std::numeric_limits<double>::quiet_NaN();
    Eigen::MatrixXd curves;
    std::vector<int> rejected;  // per tested covariate, 0/1; empty when untested
};

/// Covariates whose constancy test counts toward the rejection rate: the
/// gamma-driven effect in setting 3, every covariate otherwise.
std::vector<int> tested_covariates(const tvcox::sim::ScenarioSpec& spec)
{
    std::vector<int> out;
    for (int p = 0; p < spec.P; ++p) {
        if (spec.setting != 3 || spec.coefficients[static_cast<size_t>(p)].tag == tvcox::sim::CoefTag::gamma_sin_tv) {
            out.push_back(p);
        }
    }
    return out;
}

int thread_count(int tasks)
{
    int threads = 1;
    if (const char* env = std::getenv("TVCOX_THREADS")) {
        try {
            threads = std::stoi(env);
        } catch (const std::exception&) {
            throw Error(ErrorCode::usage, "TVCOX_THREADS must be a positive integer");
        }
        if (threads < 1) throw Error(ErrorCode::usage, "TVCOX_THREADS must be a positive integer");
    }
    return std::max(1, std::min(threads, tasks));
}

int cmd_bench(const BenchArgs& a)
{
    if (a.replicates < 1) throw Error(ErrorCode::usage, "--replicates must be at least 1");
    if (a.optimizers.empty()) throw Error(ErrorCode::usage, "--optimizers is empty");
    std::vector<tvcox::optim::Optimizer> kinds;
    for (const auto& name : a.optimizers) kinds.push_back(tvcox::optim::parse_optimizer(name));
    const auto base = scenario_or_usage(a.setting, a.n, a.P, a.J, a.gamma, a.solver.seed);
    const auto config_solver = a.solver.config();

    json config = {{"command", "bench"}, {"setting", a.setting}, {"n", a.n}, {"P", a.P}, {"J", a.J}, {"K", a.K},
        {"gamma", a.gamma}, {"optimizers", a.optimizers}, {"replicates", a.replicates}};
    a.solver.echo(config);
    config["out"] = a.out;

    const auto grid = tvcox::sim::metric_grid();
    const Eigen::MatrixXd truth = tvcox::sim::true_curves(base, grid);
    const auto tested = tested_covariates(base);
    const size_t n_opt = kinds.size();
    std::vector<BenchRow> rows(static_cast<size_t>(a.replicates) * n_opt);

    auto run_replicate = [&](int r) {
        auto spec = base;
        spec.seed = tvcox::sim::replicate_seed(a.solver.seed, static_cast<std::uint64_t>(r));
        tvcox::survdata::SurvivalDataset ds;
        std::string data_error;
        try {
            ds = tvcox::sim::generate(spec);
        } catch (const Error& e) {
            data_error = std::string(tvcox::to_string(e.code()));
        }
        for (size_t o = 0; o < n_opt; ++o) {
            BenchRow& row = rows[static_cast<size_t>(r) * n_opt + o];
            row.replicate = r + 1;
            row.optimizer = a.optimizers[o];
            if (!data_error.empty()) {
                row.error = data_error;
                continue;
            }
            try {
                tvcox::FitOptions opts;
                opts.K = a.K;
                opts.degree = a.solver.degree;
                opts.optimizer = kinds[o];
                opts.config = config_solver;
                opts.standardize = !a.solver.no_standardize;
                const auto m = tvcox::fit_model(ds, opts);
                row.iterations = m.fit.iterations;
                row.converged = m.fit.converged;
                row.loglik = m.fit.loglik;
                row.seconds = m.fit.seconds;
                row.curves = tvcox::sim::fitted_curves(m, grid);
                const Eigen::MatrixXd err = row.curves - truth;
                row.bias = err.rowwise().mean().cwiseAbs().mean();
                row.imse = err.array().square().rowwise().mean().mean();
                if (m.fit.converged) {
                    try {
                        const auto rep = tvcox::inference::test_time_varying(m, tvcox::inference::Information::empirical);
                        int hits = 0;
                        for (int p : tested) {
                            const int hit = rep.entries[static_cast<size_t>(p)].p_value < 0.05 ? 1 : 0;
                            row.rejected.push_back(hit);
                            hits += hit;
                        }
                        row.rejection = static_cast<double>(hits) / static_cast<double>(tested.size());
                    } catch (const Error&) {
                        row.rejected.clear();
                    }
                }
                row.ok = true;
            } catch (const Error& e) {
                row.error = std::string(tvcox::to_string(e.code()));
            }
        }
    };

    const int threads = thread_count(a.replicates);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int r = next++; r < a.replicates; r = next++) run_replicate(r);
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    const auto f = [](double v) { return tvcox::io::format_double(v); };
    const std::string scenario = "setting" + std::to_string(a.setting);
    std::ostringstream detail;
    detail << tvcox::io::csv_preamble(config)
           << "replicate,optimizer,status,scenario,n,P,K,time_sec,iterations,converged,loglik,bias,imse,rejection_rate,error\n";
    for (const auto& row : rows) {
        detail << row.replicate << ',' << row.optimizer << ',' << (row.ok ? "ok" : "error") << ',' << scenario << ','
               << a.n << ',' << a.P << ',' << a.K << ',' << f(row.seconds) << ',' << row.iterations << ','
               << (row.converged ? 1 : 0) << ',' << f(row.ok ? row.loglik : std::nan("")) << ','
               << f(row.ok ? row.bias : std::nan("")) << ',' << f(row.ok ? row.imse : std::nan("")) << ','
               << f(row.rejection) << ',' << row.error << '\n';
    }

    std::ostringstream summary;
    summary << tvcox::io::csv_preamble(config)
            << "scenario,optimizer,n,P,K,time_sec,bias,imse,rejection_rate,replicates,failures\n";
    bool any_clean = false;
    for (size_t o = 0; o < n_opt; ++o) {
        tvcox::sim::MetricsAccumulator acc(truth);
        int failures = 0;
        for (int r = 0; r < a.replicates; ++r) {
            const auto& row = rows[static_cast<size_t>(r) * n_opt + o];
            if (!row.ok) {
                ++failures;
                continue;
            }
            acc.add(row.curves, row.seconds);
            for (int hit : row.rejected) acc.add_test(hit == 1);
        }
        any_clean = any_clean || failures == 0;
        const auto rep = acc.report();
        summary << scenario << ',' << a.optimizers[o] << ',' << a.n << ',' << a.P << ',' << a.K << ','
                << f(rep.mean_seconds) << ',' << f(rep.replicates ? rep.mean_abs_bias : std::nan("")) << ','
                << f(rep.replicates ? rep.mean_imse : std::nan("")) << ',' << f(rep.rejection_rate) << ','
                << rep.replicates << ',' << failures << '\n';
        std::cout << a.optimizers[o] << ": replicates=" << rep.replicates << " failures=" << failures
                  << " bias=" << f(rep.mean_abs_bias) << " imse=" << f(rep.mean_imse)
                  << " rejection=" << f(rep.rejection_rate) << " time=" << f(rep.mean_seconds) << "s\n";
    }

    const fs::path out(a.out);
    tvcox::io::write_atomic(out, detail.str());
    tvcox::io::write_atomic(with_suffix(out, "_summary"), summary.str());
    return any_clean ? 0 : 1;
}

// ---- cv -------------------------------------------------------------------

struct CvArgs
{
    std::string data;
    std::vector<int> K_grid{4, 6, 8, 10};
    int folds = 5;
    std::string optimizer = "mmsa";
    std::string out = ".";
    SolverFlags solver;
};

int cmd_cv(const CvArgs& a)
{
    json config = {{"command", "cv"}, {"data", a.data}, {"K-grid", a.K_grid}, {"folds", a.folds},
        {"optimizer", a.optimizer}};
    a.solver.echo(config);
    config["out"] = a.out;

    const auto data = tvcox::survdata::load_csv(a.data);
    tvcox::FitOptions base;
    base.degree = a.solver.degree;
    base.optimizer = tvcox::optim::parse_optimizer(a.optimizer);
    base.config = a.solver.config();
    base.standardize = !a.solver.no_standardize;
    const auto cv = tvcox::inference::cross_validate_K(data, a.K_grid, a.folds, base, a.solver.seed);

    std::ostringstream csv;
    csv << tvcox::io::csv_preamble(config) << "K,score";
    for (int k = 1; k <= a.folds; ++k) csv << ",fold" << k;
    csv << ",chosen\n";
    for (size_t i = 0; i < cv.candidates.size(); ++i) {
        csv << cv.candidates[i] << ',' << tvcox::io::format_double(cv.scores[i]);
        for (double s : cv.fold_scores[i]) csv << ',' << tvcox::io::format_double(s);
        csv << ',' << (cv.candidates[i] == cv.chosen_K ? 1 : 0) << '\n';
        std::cout << "K=" << cv.candidates[i] << " score=" << tvcox::io::format_double(cv.scores[i]) << '\n';
    }
    tvcox::io::write_atomic(fs::path(a.out) / "cv.csv", csv.str());
    std::cout << "chosen K=" << cv.chosen_K << '\n';
    return 0;
}

/// Required flags may come from the command line or the --config file.
void require_flags(const CLI::App* sub, std::initializer_list<const char*> names)
{
    for (const char* name : names) {
        if (sub->get_option(name)->count() == 0) {
            throw Error(ErrorCode::usage, std::string(name) + " is required (flag or --config key)");
        }
    }
}

CLI::App* add_subcommand(CLI::App& app, const std::string& name, const std::string& about)
{
    auto* sub = app.add_subcommand(name, about);
    auto path = std::make_shared<std::string>();
    sub->add_option("--config", *path, "JSON file of flag values; flags given on the command line win");
    sub->final_callback([sub, path] { apply_json_config(sub, *path); });
    return sub;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Time-varying coefficient Cox models fitted by block-wise MM steepest ascent"};
    app.set_version_flag("--version", std::string(tvcox::version));
    app.require_subcommand(1);

    FitArgs fit;
    auto* fit_cmd = add_subcommand(app, "fit", "fit a model to a CSV file and test each effect for time variation");
    fit_cmd->add_option("--data", fit.data, "input CSV (time,status,stratum,covariates...)");
    fit_cmd->add_option("--K", fit.K, "basis functions per covariate");
    fit_cmd->add_option("--optimizer", fit.optimizer, "mmsa|newton|gradient|coordinate|adagrad")->capture_default_str();
    fit_cmd->add_option("--information", fit.information, "empirical|observed")->capture_default_str();
    fit_cmd->add_option("--grid-points", fit.grid_points, "curve grid size")->capture_default_str();
    fit_cmd->add_option("--trace-limit", fit.trace_limit, "trace entries kept in fit.json")->capture_default_str();
    fit_cmd->add_option("--out", fit.out, "output directory")->capture_default_str();
    fit.solver.add_to(fit_cmd);

    SimulateArgs simulate;
    auto* sim_cmd = add_subcommand(app, "simulate", "draw a dataset from a simulation setting");
    sim_cmd->add_option("--setting", simulate.setting, "1, 2 or 3");
    sim_cmd->add_option("--n", simulate.n, "subjects");
    auto* p_opt = sim_cmd->add_option("--P", simulate.P, "covariates (setting 3: 2)");
    sim_cmd->add_option("--J", simulate.J, "strata")->capture_default_str();
    sim_cmd->add_option("--gamma", simulate.gamma, "setting 3 effect size")->capture_default_str();
    sim_cmd->add_option("--seed", simulate.seed, "random seed");
    sim_cmd->add_option("--out", simulate.out, "output CSV");

    BenchArgs bench;
    auto* bench_cmd = add_subcommand(app, "bench", "paired Monte Carlo comparison of optimizers");
    bench_cmd->add_option("--setting", bench.setting, "1, 2 or 3");
    bench_cmd->add_option("--n", bench.n, "subjects");
    bench_cmd->add_option("--P", bench.P, "covariates");
    bench_cmd->add_option("--K", bench.K, "basis functions per covariate");
    bench_cmd->add_option("--J", bench.J, "strata")->capture_default_str();
    bench_cmd->add_option("--gamma", bench.gamma, "setting 3 effect size")->capture_default_str();
    bench_cmd->add_option("--optimizers", bench.optimizers, "comma-separated list")->delimiter(',');
    bench_cmd->add_option("--replicates", bench.replicates, "replicates");
    bench_cmd->add_option("--out", bench.out, "per-replicate CSV; a _summary CSV is written beside it");
    bench.solver.add_to(bench_cmd);

    CvArgs cv;
    auto* cv_cmd = add_subcommand(app, "cv", "choose K by cross-validated partial likelihood");
    cv_cmd->add_option("--data", cv.data, "input CSV");
    cv_cmd->add_option("--K-grid", cv.K_grid, "candidate K values")->delimiter(',')->capture_default_str();
    cv_cmd->add_option("--folds", cv.folds, "folds")->capture_default_str();
    cv_cmd->add_option("--optimizer", cv.optimizer, "optimizer for the fold fits")->capture_default_str();
    cv_cmd->add_option("--out", cv.out, "output directory for cv.csv")->capture_default_str();
    cv.solver.add_to(cv_cmd);

    try {
        app.parse(argc, argv);
        if (*fit_cmd) {
            require_flags(fit_cmd, {"--data", "--K"});
            return cmd_fit(fit);
        }
        if (*sim_cmd) {
            require_flags(sim_cmd, {"--setting", "--n", "--seed", "--out"});
            return cmd_simulate(simulate, p_opt->count() > 0);
        }
        if (*bench_cmd) {
            require_flags(bench_cmd, {"--setting", "--n", "--P", "--K", "--optimizers", "--replicates", "--seed", "--out"});
            return cmd_bench(bench);
        }
        if (*cv_cmd) {
            require_flags(cv_cmd, {"--data", "--seed"});
            return cmd_cv(cv);
        }
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: USAGE: " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << tvcox::to_string(e.code()) << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: INTERNAL: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
