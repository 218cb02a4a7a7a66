#include "cli.hpp"

#include <CLI11.hpp>

#include <onestep/error.hpp>
#include <onestep/estimators.hpp>
#include <onestep/io.hpp>
#include <onestep/lars.hpp>
#include <onestep/oracle.hpp>
#include <onestep/simulation.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <random>
#include <thread>

namespace fs = std::filesystem;

namespace onestep::cli {
namespace {

struct Outputs
{
    fs::path dir;
    std::vector<std::string> written;

    void write(const std::string& name, const std::string& text)
    {
        write_text(dir / name, text);
        written.push_back(name);
    }
};

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

int threads_from_env()
{
    const char* env = std::getenv("ONESTEP_THREADS");
    if (!env || !*env) return 1;
    int t = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), t);
    if (ec != std::errc() || ptr != s.data() + s.size() || t < 1)
        throw ValidationError("ONESTEP_THREADS must be a positive integer, got '" + std::string(s) + "'");
    return t;
}

Likelihood family_of(const RunConfig& c) { return likelihood_from_name(c.family); }

// Penalty at a given lambda, from the command line choices.
PenaltySpec penalty_of(const RunConfig& c, double lambda)
{
    PenaltySpec s;
    if (c.penalty == "lasso") s = PenaltySpec::l1(lambda);
    else if (c.penalty == "scad") s = PenaltySpec::scad(lambda, c.shape.value_or(3.7));
    else if (c.penalty == "mcp") s = PenaltySpec::mcp(lambda, c.shape.value_or(3.0));
    else if (c.penalty == "adalasso") s = PenaltySpec::adaptive(lambda, c.gamma.value_or(1.0), c.epsilon);
    else if (c.penalty == "bridge") s = PenaltySpec::bridge(lambda, c.shape.value_or(0.5), c.epsilon);
    else if (c.penalty == "log") s = PenaltySpec::log_penalty(lambda, c.epsilon);
    else throw ValidationError("unknown penalty '" + c.penalty + "'");
    validate(s);
    return s;
}

void check_config(const RunConfig& c)
{
    if (int(c.cv) + int(c.bic) + int(c.lambda.has_value()) > 1)
        throw ValidationError("--lambda, --cv and --bic are mutually exclusive");
    if (c.gamma && c.gamma_cv) throw ValidationError("--gamma and --gamma-cv are mutually exclusive");
    if (c.gamma_cv && c.penalty != "adalasso") throw ValidationError("--gamma-cv applies only to --penalty adalasso");
    if (c.lambda && !(*c.lambda >= 0.0)) throw ValidationError("--lambda must be nonnegative");
    if (c.steps < 1) throw ValidationError("--steps must be at least 1");
    if (c.folds < 2) throw ValidationError("--folds must be at least 2");
    if (c.threads < 1) throw ValidationError("--threads must be at least 1");
    if (c.algorithm != "lla" && c.algorithm != "lqa") throw ValidationError("--algorithm must be lla or lqa");
    if (c.algorithm == "lqa" && c.penalty == "lasso")
        throw ValidationError("--algorithm lqa needs a nonconvex penalty");
    penalty_of(c, 1.0);
    initial_from_name(c.initial);
    likelihood_from_name(c.family);
}

Ingested load(const RunConfig& c, Outputs& out)
{
    Ingested in = ingest_csv(c.data, c.response, family_of(c));
    for (const auto& w : in.manifest.warnings) std::cerr << "warning: " << w << "\n";
    out.write("manifest.json", dump_json(to_json(in.manifest)));
    return in;
}

// Coefficients in original units, keeping exact zeros.
nlohmann::ordered_json estimate_json(const Estimate& est, const Dataset& std_data, double lmax)
{
    Estimate raw = est;
    raw.beta = to_original_scale(std_data, est.beta);
    raw.intercept = original_intercept(std_data, est.beta, est.intercept);
    auto j = to_json(raw);
    j["beta_standardized"] = to_vector(est.beta);
    j["columns"] = std_data.column_names;
    j["lambda_max"] = lmax;
    return j;
}

void cmd_fit(const RunConfig& c, Outputs& out)
{
    const Ingested in = load(c, out);
    const Dataset d = standardize(in.data);
    const auto p = d.p();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(p);
    const double lmax = lambda_max(d, ones);

    InitialConfig icfg;
    icfg.folds = c.folds;
    icfg.seed = c.seed;
    const bool lasso = c.penalty == "lasso";
    const Eigen::VectorXd beta0 = lasso ? Eigen::VectorXd::Zero(p) : fit_initial(initial_from_name(c.initial), d, icfg);

    LlaOptions lla;
    lla.initial_name = lasso ? "none" : c.initial;
    lla.max_steps = c.steps;

    double gamma = c.gamma.value_or(1.0);
    std::optional<double> lambda = c.lambda;
    if (c.gamma_cv) {
        const auto sel = select_gamma(d, {0.5, 1.0, 2.0}, beta0, c.folds, c.seed);
        gamma = sel.gamma_best;
        lambda = sel.lambda_best;
    }
    RunConfig resolved = c;
    resolved.gamma = gamma;

    auto estimate_at = [&](const Dataset& data, double lam) -> Estimate {
        const PenaltySpec spec = penalty_of(resolved, lam);
        if (c.algorithm == "lqa") return lqa_fit(data, spec, beta0);
        if (c.penalty == "adalasso") return adaptive_lasso(data, gamma, lam, beta0, c.epsilon, lla);
        if (c.steps == 1) return one_step_lla(data, spec, beta0, lla);
        auto traj = multi_step_lla(data, spec, beta0, lla);
        Estimate last = traj.iterates.back();
        for (const auto& f : traj.flags) last.flags.push_back(f);
        if (!traj.converged) last.flags.push_back("max_steps_reached");
        return last;
    };

    if (!lambda) {
        double top = lmax;
        if (c.penalty == "adalasso") {
            Eigen::VectorXd w(p);
            for (Eigen::Index j = 0; j < p; ++j) w[j] = lla_weight(PenaltySpec::adaptive(1.0, gamma, c.epsilon), beta0[j]);
            top = lambda_max(d, w);
        }
        GridFitter fit = [&](const Dataset& data, double lam, const Fit*) {
            const Estimate e = estimate_at(data, lam);
            return Fit{e.beta, e.intercept};
        };
        lambda = tune_lambda(fit, d, lambda_grid(top), c.bic ? Tuner::BIC : Tuner::CV, c.folds, c.seed);
    }
    const Estimate est = estimate_at(d, *lambda);
    out.write("estimate.json", dump_json(estimate_json(est, d, lmax)));
}

void cmd_path(const RunConfig& c, Outputs& out)
{
    if (c.penalty != "lasso" && c.penalty != "adalasso")
        throw ValidationError("path supports --penalty lasso or adalasso");
    if (family_of(c) != Likelihood::Gaussian) throw ValidationError("path supports the gaussian family only");
    const Ingested in = load(c, out);
    const Dataset d = standardize(in.data);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(d.p());
    if (c.penalty == "adalasso") {
        InitialConfig icfg;
        icfg.folds = c.folds;
        icfg.seed = c.seed;
        const Eigen::VectorXd beta0 = fit_initial(initial_from_name(c.initial), d, icfg);
        for (Eigen::Index j = 0; j < d.p(); ++j)
            w[j] = lla_weight(PenaltySpec::adaptive(1.0, c.gamma.value_or(1.0), c.epsilon), beta0[j]);
    }
    SolutionPath path = lars_path(d, w);
    for (std::size_t i = 0; i < path.size(); ++i) {
        path.intercepts[i] = original_intercept(d, path.coefficients[i], path.intercepts[i]);
        path.coefficients[i] = to_original_scale(d, path.coefficients[i]);
    }
    out.write("path.csv", to_csv(path));
}

std::vector<EstimatorConfig> load_battery(const RunConfig& c)
{
    if (c.battery.empty()) return default_battery();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(c.battery));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("cannot parse battery JSON: " + std::string(e.what()));
    }
    if (!j.is_array()) throw ValidationError("battery JSON must be an array of estimator configs");
    std::vector<EstimatorConfig> b;
    for (const auto& e : j) b.push_back(estimator_from_json(e));
    return b;
}

void cmd_simulate(const RunConfig& c, Outputs& out)
{
    if (!c.from_report.empty()) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_text(c.from_report));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("cannot parse report JSON: " + std::string(e.what()));
        }
        out.write("summary.csv", summary_csv(report_from_json(j)));
        return;
    }
    if (c.reps < 1) throw ValidationError("--reps must be at least 1");
    ScenarioSpec spec = default_scenario();
    if (!c.scenario.empty()) {
        try {
            spec = scenario_from_json(nlohmann::json::parse(read_text(c.scenario)));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("cannot parse scenario JSON: " + std::string(e.what()));
        }
    }
    spec.seed = c.seed;
    const auto report = run_comparison(load_battery(c), spec, c.reps, c.seed, c.threads);
    out.write("report.json", dump_json(to_json(report)));
    out.write("summary.csv", summary_csv(report));
}

void cmd_compare(const RunConfig& c, Outputs& out)
{
    const Ingested in = load(c, out);
    const Dataset d = standardize(in.data);
    std::vector<EstimatorConfig> battery;
    for (const auto& e : load_battery(c))
        if (e.kind != EstimatorKind::OracleOls) battery.push_back(e);

    struct Row
    {
        bool failed = false;
        std::string error;
        FittedModel model;
    };
    std::vector<Row> rows(battery.size());
    auto work = [&](std::size_t i) {
        try {
            rows[i].model = fit_configured(battery[i], d, c.seed, Eigen::VectorXd());
        } catch (const std::exception& e) {
            rows[i].failed = true;
            rows[i].error = e.what();
        }
    };
    const int workers = std::clamp<int>(c.threads, 1, std::max<int>(1, static_cast<int>(battery.size())));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w)
        pool.emplace_back([&] {
            for (auto i = next.fetch_add(1); i < battery.size(); i = next.fetch_add(1)) work(i);
        });
    for (auto i = next.fetch_add(1); i < battery.size(); i = next.fetch_add(1)) work(i);
    for (auto& t : pool) t.join();

    nlohmann::ordered_json j;
    j["columns"] = d.column_names;
    j["estimators"] = nlohmann::ordered_json::array();
    std::string csv = "estimator,lambda,active_size,intercept";
    for (const auto& name : d.column_names) csv += "," + name;
    csv += "\n";
    for (std::size_t i = 0; i < battery.size(); ++i) {
        nlohmann::ordered_json e;
        e["name"] = battery[i].name;
        e["config"] = to_json(battery[i]);
        e["failed"] = rows[i].failed;
        if (rows[i].failed) {
            e["error"] = rows[i].error;
            j["estimators"].push_back(e);
            continue;
        }
        const auto& m = rows[i].model;
        const Eigen::VectorXd beta = to_original_scale(d, m.beta);
        const double b0 = original_intercept(d, m.beta, m.intercept);
        e["lambda"] = m.lambda;
        e["intercept"] = b0;
        e["beta"] = to_vector(beta);
        e["active_set"] = support_of(m.beta);
        j["estimators"].push_back(e);

        char buf[64];
        std::snprintf(buf, sizeof buf, "%.12g,%zu,%.12g", m.lambda, support_of(m.beta).size(), b0);
        csv += battery[i].name + "," + buf;
        for (Eigen::Index k = 0; k < beta.size(); ++k) {
            std::snprintf(buf, sizeof buf, ",%.12g", beta[k]);
            csv += buf;
        }
        csv += "\n";
    }
    out.write("compare.json", dump_json(j));
    out.write("compare.csv", csv);
}

void cmd_subset(const RunConfig& c, Outputs& out)
{
    if (!c.lambda) throw ValidationError("subset needs --lambda");
    if (family_of(c) != Likelihood::Gaussian) throw ValidationError("subset supports the gaussian family only");
    const Ingested in = load(c, out);
    const SubsetSolution sol = best_subset_l0(in.data, *c.lambda, c.p_cap, c.threads);
    auto j = to_json(sol);
    j["columns"] = in.data.column_names;
    out.write("subset.json", dump_json(j));
}

void cmd_recovery(const RunConfig& c, Outputs& out)
{
    if (c.n < 2 || c.p < 1) throw ValidationError("recovery needs --n >= 2 and --p >= 1");
    if (c.k < 1 || c.k > c.p) throw ValidationError("recovery needs 1 <= --k <= --p");
    if (c.instances < 1) throw ValidationError("--instances must be at least 1");
    if (!(c.noise >= 0.0)) throw ValidationError("--noise must be nonnegative");
    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> magnitude(1.0, 2.0);
    std::string lines;
    for (int i = 0; i < c.instances; ++i) {
        Eigen::MatrixXd X(c.n, c.p);
        for (int col = 0; col < c.p; ++col)
            for (int row = 0; row < c.n; ++row) X(row, col) = normal(rng);
        std::vector<int> idx(static_cast<std::size_t>(c.p));
        for (int j = 0; j < c.p; ++j) idx[static_cast<std::size_t>(j)] = j;
        std::shuffle(idx.begin(), idx.end(), rng);
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(c.p);
        for (int j = 0; j < c.k; ++j) {
            const double sign = rng() % 2 ? 1.0 : -1.0;
            beta[idx[static_cast<std::size_t>(j)]] = sign * magnitude(rng);
        }
        RecoveryOptions opts;
        opts.noise_sigma = c.noise;
        opts.seed = c.seed ^ static_cast<std::uint64_t>(i);
        opts.p_cap = c.p_cap;
        opts.l0_lambda = c.l0_lambda;
        nlohmann::ordered_json line;
        line["instance"] = i;
        const auto rec = to_json(exact_recovery_check(X, beta, opts));
        for (const auto& [key, value] : rec.items()) line[key] = value;
        lines += line.dump() + "\n";
    }
    out.write("recovery.jsonl", lines);
}

nlohmann::ordered_json error_json(int code, const std::string& kind, const std::string& error_code,
                                  const std::string& message)
{
    nlohmann::ordered_json j;
    j["status"] = "error";
    j["exit_code"] = code;
    j["kind"] = kind;
    j["code"] = error_code;
    j["message"] = message;
    return j;
}

} // namespace

nlohmann::ordered_json to_json(const RunConfig& c)
{
    nlohmann::ordered_json j;
    j["command"] = c.command;
    j["args"] = c.args;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["out"] = c.out;
    nlohmann::ordered_json o;
    if (c.command == "fit" || c.command == "path" || c.command == "compare" || c.command == "subset") {
        o["data"] = c.data;
        o["response"] = c.response;
        o["family"] = c.family;
    }
    if (c.command == "fit" || c.command == "path") {
        o["penalty"] = c.penalty;
        o["shape"] = c.shape ? nlohmann::ordered_json(*c.shape) : nlohmann::ordered_json();
        o["epsilon"] = c.epsilon;
        o["gamma"] = c.gamma ? nlohmann::ordered_json(*c.gamma) : nlohmann::ordered_json();
        o["gamma_cv"] = c.gamma_cv;
        o["initial"] = c.initial;
        o["folds"] = c.folds;
    }
    if (c.command == "fit") {
        o["lambda"] = c.lambda ? nlohmann::ordered_json(*c.lambda) : nlohmann::ordered_json();
        o["tuning"] = c.lambda || c.gamma_cv ? "fixed" : (c.bic ? "bic" : "cv");
        o["steps"] = c.steps;
        o["algorithm"] = c.algorithm;
    }
    if (c.command == "subset") o["lambda"] = c.lambda ? nlohmann::ordered_json(*c.lambda) : nlohmann::ordered_json();
    if (c.command == "simulate" || c.command == "compare") o["battery"] = c.battery;
    if (c.command == "simulate") {
        o["reps"] = c.reps;
        o["scenario"] = c.scenario;
        o["from_report"] = c.from_report;
    }
    if (c.command == "subset" || c.command == "recovery") o["p_cap"] = c.p_cap;
    if (c.command == "recovery") {
        o["n"] = c.n;
        o["p"] = c.p;
        o["k"] = c.k;
        o["instances"] = c.instances;
        o["noise"] = c.noise;
        o["l0_lambda"] = c.l0_lambda;
    }
    j["options"] = o;
    return j;
}

void execute(const RunConfig& c)
{
    if (c.out.empty()) throw ValidationError("--out is required");
    check_config(c);
    Outputs out{c.out, {}};
    ensure_directory(out.dir);
    out.write("config.json", dump_json(to_json(c)));

    if (c.command == "fit") cmd_fit(c, out);
    else if (c.command == "path") cmd_path(c, out);
    else if (c.command == "simulate") cmd_simulate(c, out);
    else if (c.command == "compare") cmd_compare(c, out);
    else if (c.command == "subset") cmd_subset(c, out);
    else if (c.command == "recovery") cmd_recovery(c, out);
    else throw ValidationError("unknown command '" + c.command + "'");

    nlohmann::ordered_json status;
    status["status"] = "ok";
    status["command"] = c.command;
    status["artifacts"] = out.written;
    std::cout << status.dump() << "\n";
}

int run(const std::vector<std::string>& args)
{
    RunConfig c;
    c.args = args;
    std::optional<int> threads;

    CLI::App app{"One-step sparse estimation and simulation tool", "onestep"};
    app.require_subcommand(1, 1);

    auto add_data = [&](CLI::App* sub) {
        sub->add_option("--data", c.data, "Input CSV with a header row")->required()->check(CLI::ExistingFile);
        sub->add_option("--response", c.response, "Response column name")->capture_default_str();
        sub->add_option("--family", c.family, "gaussian or binomial")
            ->check(CLI::IsMember({"gaussian", "binomial"}))
            ->capture_default_str();
    };
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", c.out, "Output directory")->required();
        sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
        sub->add_option("--threads", threads, "Worker threads (overrides ONESTEP_THREADS)");
    };
    auto add_penalty = [&](CLI::App* sub) {
        sub->add_option("--penalty", c.penalty, "lasso, scad, mcp, adalasso, bridge or log")
            ->check(CLI::IsMember({"lasso", "scad", "mcp", "adalasso", "bridge", "log"}))
            ->capture_default_str();
        sub->add_option("--shape", c.shape, "SCAD a, MCP gamma or bridge exponent");
        sub->add_option("--epsilon", c.epsilon, "Offset for adalasso, bridge and log weights")->capture_default_str();
        sub->add_option("--gamma", c.gamma, "Adaptive lasso power");
        sub->add_flag("--gamma-cv", c.gamma_cv, "Choose the adaptive lasso power by cross-validation");
        sub->add_option("--initial", c.initial, "Initial estimator: ols, ridge, lasso or enet")
            ->check(CLI::IsMember({"ols", "ridge", "lasso", "enet"}))
            ->capture_default_str();
        sub->add_option("--folds", c.folds, "Cross-validation folds")->capture_default_str();
    };

    auto* fit = app.add_subcommand("fit", "Fit one penalized estimator");
    add_data(fit);
    add_common(fit);
    add_penalty(fit);
    fit->add_option("--lambda", c.lambda, "Fixed regularization level");
    fit->add_flag("--cv", c.cv, "Tune lambda by cross-validation (default)");
    fit->add_flag("--bic", c.bic, "Tune lambda by BIC");
    fit->add_option("--steps", c.steps, "LLA steps")->capture_default_str();
    fit->add_option("--algorithm", c.algorithm, "lla or lqa")
        ->check(CLI::IsMember({"lla", "lqa"}))
        ->capture_default_str();

    auto* path = app.add_subcommand("path", "Exact lasso or adaptive lasso solution path");
    add_data(path);
    add_common(path);
    add_penalty(path);

    auto* sim = app.add_subcommand("simulate", "Monte Carlo comparison of the estimator battery");
    add_common(sim);
    sim->add_option("--reps", c.reps, "Replications")->capture_default_str();
    sim->add_option("--scenario", c.scenario, "Scenario JSON")->check(CLI::ExistingFile);
    sim->add_option("--battery", c.battery, "Battery JSON (array of estimator configs)")->check(CLI::ExistingFile);
    sim->add_option("--from-report", c.from_report, "Re-emit the summary CSV of a saved report")
        ->check(CLI::ExistingFile);

    auto* cmp = app.add_subcommand("compare", "Run the estimator battery on a data file");
    add_data(cmp);
    add_common(cmp);
    cmp->add_option("--battery", c.battery, "Battery JSON (array of estimator configs)")->check(CLI::ExistingFile);

    auto* sub = app.add_subcommand("subset", "Exhaustive best-subset L0 search");
    add_data(sub);
    add_common(sub);
    sub->add_option("--lambda", c.lambda, "L0 level: objective 1/2 RSS + 1/2 lambda^2 |S|")->required();
    sub->add_option("--p-cap", c.p_cap, "Largest p searched exhaustively")->capture_default_str();

    auto* rec = app.add_subcommand("recovery", "L0/L1 exact recovery check on random designs");
    add_common(rec);
    rec->add_option("--n", c.n, "Rows")->capture_default_str();
    rec->add_option("--p", c.p, "Columns")->capture_default_str();
    rec->add_option("--k", c.k, "True support size")->capture_default_str();
    rec->add_option("--instances", c.instances, "Number of random instances")->capture_default_str();
    rec->add_option("--noise", c.noise, "Noise SD")->capture_default_str();
    rec->add_option("--l0-lambda", c.l0_lambda, "L0 level (negative: 1e-4 ||y||)")->capture_default_str();
    rec->add_option("--p-cap", c.p_cap, "Largest p searched exhaustively")->capture_default_str();

    auto fail = [&](int code, const std::string& kind, const std::string& error_code, const std::string& message) {
        const auto j = error_json(code, kind, error_code, message);
        std::cout << j.dump() << "\n";
        if (!c.out.empty()) {
            try {
                ensure_directory(c.out);
                write_text(fs::path(c.out) / "error.json", dump_json(j));
            } catch (const std::exception&) {
            }
        }
        return code;
    };

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
        for (auto* s : app.get_subcommands()) c.command = s->get_name();
        if (c.command == "path" && path->count("--penalty") == 0) c.penalty = "lasso";
        c.threads = threads ? *threads : threads_from_env();
        execute(c);
        return 0;
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        return fail(1, "validation", "usage", e.what());
    } catch (const ValidationError& e) {
        return fail(1, "validation", "invalid_input", e.what());
    } catch (const ComputationError& e) {
        return fail(2, "computation", e.code(), e.what());
    } catch (const std::exception& e) {
        return fail(2, "computation", "internal", e.what());
    }
}

} // namespace onestep::cli
