#include <onestep/simulation.hpp>
#include <onestep/error.hpp>
#include <onestep/lars.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <thread>

namespace onestep {
namespace {

constexpr std::uint64_t fold_stream = 0x9E3779B97F4A7C15ULL;

double sigmoid(double e) { return e >= 0.0 ? 1.0 / (1.0 + std::exp(-e)) : std::exp(e) / (1.0 + std::exp(e)); }

std::vector<double> tuning_grid(const Dataset& data) { return lambda_grid(lambda_max(data, Eigen::VectorXd::Ones(data.p()))); }

PenaltySpec make_spec(const EstimatorConfig& c, double lambda)
{
    PenaltySpec s{c.penalty, lambda, c.shape, 0.0};
    if (c.penalty == PenaltyFamily::L1 || c.penalty == PenaltyFamily::LogPenalty) s.shape = 0.0;
    return s;
}

double median(std::vector<double> v)
{
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const auto m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string fmt6(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double json_number(const nlohmann::json& j)
{
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

} // namespace

ScenarioSpec default_scenario()
{
    ScenarioSpec s;
    s.beta_star = (Eigen::VectorXd(8) << 3.0, 1.5, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0).finished();
    return s;
}

void validate(const ScenarioSpec& spec)
{
    if (spec.n < 4) throw ValidationError("scenario needs n >= 4");
    if (spec.p < 1 || spec.beta_star.size() != spec.p) throw ValidationError("scenario beta_star length must equal p");
    if (!(std::abs(spec.rho) < 1.0)) throw ValidationError("scenario correlation must satisfy |rho| < 1");
    if (spec.family == Likelihood::Gaussian && !(spec.sigma >= 0.0))
        throw ValidationError("scenario noise SD must be nonnegative");
    if (!spec.beta_star.allFinite()) throw ValidationError("scenario beta_star must be finite");
}

Scenario generate_scenario(const ScenarioSpec& spec)
{
    validate(spec);
    const int n = spec.n, p = spec.p;
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double innov = std::sqrt(1.0 - spec.rho * spec.rho);

    Eigen::MatrixXd X(n, p);
    for (int i = 0; i < n; ++i) {
        // Stationary AR(1) across columns gives Cov = rho^|i-j|.
        double prev = normal(rng);
        X(i, 0) = prev;
        for (int j = 1; j < p; ++j) {
            prev = spec.rho * prev + innov * normal(rng);
            X(i, j) = prev;
        }
    }
    const Eigen::VectorXd eta = X * spec.beta_star;
    Eigen::VectorXd y(n);
    if (spec.family == Likelihood::Gaussian) {
        for (int i = 0; i < n; ++i) y[i] = eta[i] + spec.sigma * normal(rng);
    } else {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int i = 0; i < n; ++i) y[i] = unif(rng) < sigmoid(eta[i]) ? 1.0 : 0.0;
    }
    Eigen::MatrixXd Sigma(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) Sigma(i, j) = std::pow(spec.rho, std::abs(i - j));
    return {make_dataset(std::move(X), std::move(y), spec.family, true), spec.beta_star, Sigma};
}

Metrics evaluate(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_star, const Eigen::MatrixXd& Sigma)
{
    const auto p = beta_star.size();
    if (beta_hat.size() != p || Sigma.rows() != p || Sigma.cols() != p)
        throw ValidationError("evaluate: dimension mismatch");
    Metrics m;
    const Eigen::VectorXd d = beta_hat - beta_star;
    m.model_error = d.dot(Sigma * d);
    for (Eigen::Index j = 0; j < p; ++j) {
        const bool truly_zero = beta_star[j] == 0.0;
        const bool est_zero = beta_hat[j] == 0.0;
        if (truly_zero && est_zero) ++m.correct_zeros;
        if (truly_zero && !est_zero) ++m.false_positives;
        if (!truly_zero && est_zero) ++m.incorrect_zeros;
        if (!est_zero) ++m.active_size;
    }
    m.false_negatives = m.incorrect_zeros;
    return m;
}

std::string_view kind_name(EstimatorKind kind)
{
    switch (kind) {
        case EstimatorKind::Lasso: return "lasso";
        case EstimatorKind::OneStep: return "one_step";
        case EstimatorKind::FullLla: return "full_lla";
        case EstimatorKind::AdaptiveLasso: return "adaptive_lasso";
        case EstimatorKind::MsaLasso: return "msa_lasso";
        case EstimatorKind::Lqa: return "lqa";
        case EstimatorKind::OracleOls: return "oracle_ols";
    }
    return "unknown";
}

EstimatorKind kind_from_name(std::string_view name)
{
    for (auto k : {EstimatorKind::Lasso, EstimatorKind::OneStep, EstimatorKind::FullLla, EstimatorKind::AdaptiveLasso,
                   EstimatorKind::MsaLasso, EstimatorKind::Lqa, EstimatorKind::OracleOls})
        if (kind_name(k) == name) return k;
    throw ValidationError("unknown estimator kind '" + std::string(name) + "'");
}

std::vector<EstimatorConfig> default_battery()
{
    std::vector<EstimatorConfig> b;
    b.push_back({.name = "lasso_cv", .kind = EstimatorKind::Lasso, .penalty = PenaltyFamily::L1, .shape = 0.0});
    b.push_back({.name = "onestep_scad", .kind = EstimatorKind::OneStep});
    b.push_back({.name = "lla_scad", .kind = EstimatorKind::FullLla});
    b.push_back({.name = "onestep_mcp", .kind = EstimatorKind::OneStep, .penalty = PenaltyFamily::MCP, .shape = 3.0});
    b.push_back({.name = "adaptive_lasso", .kind = EstimatorKind::AdaptiveLasso, .penalty = PenaltyFamily::AdaptivePower,
                 .shape = 1.0});
    b.push_back({.name = "msa_lasso", .kind = EstimatorKind::MsaLasso, .penalty = PenaltyFamily::AdaptivePower,
                 .shape = 1.0, .steps = 3});
    b.push_back({.name = "lqa_scad", .kind = EstimatorKind::Lqa, .initial = InitialMethod::OLS_MLE});
    b.push_back({.name = "oracle_ols", .kind = EstimatorKind::OracleOls, .penalty = PenaltyFamily::L1, .shape = 0.0});
    return b;
}

FittedModel fit_configured(const EstimatorConfig& c, const Dataset& data, std::uint64_t seed,
                           const Eigen::VectorXd& beta_star_std)
{
    const auto p = data.p();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(p);
    InitialConfig init_cfg;
    init_cfg.folds = c.folds;
    init_cfg.seed = seed;

    auto finish = [&](const GridFitter& fit, double lam) {
        const Fit f = fit(data, lam, nullptr);
        return FittedModel{f.beta, f.intercept, lam};
    };

    switch (c.kind) {
        case EstimatorKind::Lasso: {
            GridFitter fit = [ones](const Dataset& d, double lam, const Fit* warm) {
                return fit_weighted_l1(d, lam, ones, warm);
            };
            double lam;
            if (c.tuner == Tuner::BIC)
                lam = bic_select(lars_path(data, ones), data).lambda_best;
            else
                lam = tune_lambda(fit, data, tuning_grid(data), Tuner::CV, c.folds, seed);
            return finish(fit, lam);
        }
        case EstimatorKind::OneStep:
        case EstimatorKind::FullLla: {
            const Eigen::VectorXd beta0 = fit_initial(c.initial, data, init_cfg);
            const bool full = c.kind == EstimatorKind::FullLla;
            GridFitter fit = [c, beta0, full](const Dataset& d, double lam, const Fit*) {
                const PenaltySpec spec = make_spec(c, lam);
                if (full) {
                    const auto traj = multi_step_lla(d, spec, beta0);
                    return Fit{traj.iterates.back().beta, traj.iterates.back().intercept};
                }
                const Estimate e = one_step_lla(d, spec, beta0);
                return Fit{e.beta, e.intercept};
            };
            return finish(fit, tune_lambda(fit, data, tuning_grid(data), c.tuner, c.folds, seed));
        }
        case EstimatorKind::AdaptiveLasso: {
            const Eigen::VectorXd beta0 = fit_initial(c.initial, data, init_cfg);
            double gamma = c.gamma;
            if (c.gamma_cv) {
                const auto sel = select_gamma(data, {0.5, 1.0, 2.0}, beta0, c.folds, seed);
                const Estimate e = adaptive_lasso(data, sel.gamma_best, sel.lambda_best, beta0);
                return {e.beta, e.intercept, sel.lambda_best};
            }
            Eigen::VectorXd w(p);
            for (Eigen::Index j = 0; j < p; ++j) w[j] = lla_weight(PenaltySpec::adaptive(1.0, gamma), beta0[j]);
            GridFitter fit = [gamma, beta0](const Dataset& d, double lam, const Fit*) {
                const Estimate e = adaptive_lasso(d, gamma, lam, beta0);
                return Fit{e.beta, e.intercept};
            };
            return finish(fit, tune_lambda(fit, data, lambda_grid(lambda_max(data, w)), c.tuner, c.folds, seed));
        }
        case EstimatorKind::MsaLasso: {
            MsaOptions opts;
            opts.tuner = c.tuner;
            opts.folds = c.folds;
            opts.seed = seed;
            const auto traj = msa_lasso(data, c.steps, opts);
            const Estimate& last = traj.iterates.back();
            return {last.beta, last.intercept, last.provenance.lambda};
        }
        case EstimatorKind::Lqa: {
            const Eigen::VectorXd beta0 = fit_initial(c.initial, data, init_cfg);
            GridFitter fit = [c, beta0](const Dataset& d, double lam, const Fit*) {
                const Estimate e = lqa_fit(d, make_spec(c, lam), beta0);
                return Fit{e.beta, e.intercept};
            };
            return finish(fit, tune_lambda(fit, data, tuning_grid(data), c.tuner, c.folds, seed));
        }
        case EstimatorKind::OracleOls: {
            if (beta_star_std.size() != p) throw ValidationError("oracle estimator needs the true coefficients");
            Eigen::VectorXd diag = Eigen::VectorXd::Zero(p);
            for (Eigen::Index j = 0; j < p; ++j)
                if (beta_star_std[j] == 0.0) diag[j] = std::numeric_limits<double>::infinity();
            const Eigen::VectorXd b = solve_ridge_weighted(data, diag);
            return {b, gaussian_intercept(data, b), 0.0};
        }
    }
    throw ValidationError("unhandled estimator kind");
}

const Aggregate& SimulationReport::aggregate_for(const std::string& estimator) const
{
    for (const auto& a : aggregates)
        if (a.estimator == estimator) return a;
    throw ValidationError("no aggregate for estimator '" + estimator + "'");
}

std::vector<Aggregate> aggregate(const std::vector<ReplicationRow>& rows)
{
    std::map<std::string, std::vector<const ReplicationRow*>> groups;
    for (const auto& r : rows) groups[r.estimator].push_back(&r);
    std::vector<Aggregate> out;
    for (const auto& [name, group] : groups) {
        Aggregate a;
        a.estimator = name;
        std::vector<double> me;
        double fp = 0, fn = 0, act = 0, cz = 0, iz = 0;
        for (const auto* r : group) {
            if (r->failed) {
                ++a.failed;
                continue;
            }
            ++a.ok;
            me.push_back(r->metrics.model_error);
            fp += r->metrics.false_positives;
            fn += r->metrics.false_negatives;
            act += r->metrics.active_size;
            cz += r->metrics.correct_zeros;
            iz += r->metrics.incorrect_zeros;
        }
        const double k = a.ok;
        double me_sum = 0.0;
        for (double v : me) me_sum += v;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        a.mean_model_error = a.ok ? me_sum / k : nan;
        a.median_model_error = median(me);
        a.mean_false_positives = a.ok ? fp / k : nan;
        a.mean_false_negatives = a.ok ? fn / k : nan;
        a.mean_active_size = a.ok ? act / k : nan;
        a.mean_correct_zeros = a.ok ? cz / k : nan;
        a.mean_incorrect_zeros = a.ok ? iz / k : nan;
        out.push_back(a);
    }
    return out;
}

SimulationReport run_comparison(const std::vector<EstimatorConfig>& battery, const ScenarioSpec& spec, int reps,
                                std::uint64_t seed, int threads)
{
    if (reps < 1) throw ValidationError("simulation needs reps >= 1");
    validate(spec);

    std::vector<std::vector<ReplicationRow>> by_rep(static_cast<std::size_t>(reps));
    auto run_rep = [&](int r) {
        ScenarioSpec s = spec;
        s.seed = seed ^ static_cast<std::uint64_t>(r);
        auto& rows = by_rep[static_cast<std::size_t>(r)];
        try {
            const Scenario sc = generate_scenario(s);
            const Dataset std_data = standardize(sc.data);
            const Eigen::VectorXd beta_star_std = sc.beta_star.cwiseProduct(std_data.column_scales);
            for (const auto& cfg : battery) {
                ReplicationRow row;
                row.replication = r;
                row.estimator = cfg.name;
                try {
                    const FittedModel fm = fit_configured(cfg, std_data, s.seed ^ fold_stream, beta_star_std);
                    row.metrics = evaluate(to_original_scale(std_data, fm.beta), sc.beta_star, sc.Sigma);
                    row.lambda_chosen = fm.lambda;
                } catch (const std::exception& e) {
                    row.failed = true;
                    row.error = e.what();
                }
                rows.push_back(std::move(row));
            }
        } catch (const std::exception& e) {
            rows.clear();
            for (const auto& cfg : battery) {
                ReplicationRow row;
                row.replication = r;
                row.estimator = cfg.name;
                row.failed = true;
                row.error = e.what();
                rows.push_back(std::move(row));
            }
        }
    };

    const int workers = std::clamp(threads, 1, reps);
    if (workers == 1) {
        for (int r = 0; r < reps; ++r) run_rep(r);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (int r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) run_rep(r);
            });
        }
        for (auto& t : pool) t.join();
    }

    SimulationReport report;
    report.scenario = spec;
    report.battery = battery;
    report.reps = reps;
    report.seed = seed;
    for (auto& rows : by_rep)
        for (auto& row : rows) report.per_rep.push_back(std::move(row));
    report.aggregates = aggregate(report.per_rep);
    return report;
}

nlohmann::ordered_json to_json(const ScenarioSpec& spec)
{
    nlohmann::ordered_json j;
    j["n"] = spec.n;
    j["p"] = spec.p;
    j["beta_star"] = std::vector<double>(spec.beta_star.data(), spec.beta_star.data() + spec.beta_star.size());
    j["rho"] = spec.rho;
    j["sigma"] = spec.sigma;
    j["family"] = likelihood_name(spec.family);
    j["seed"] = spec.seed;
    return j;
}

ScenarioSpec scenario_from_json(const nlohmann::json& j)
{
    try {
        ScenarioSpec s = default_scenario();
        if (j.contains("beta_star")) {
            const auto b = j.at("beta_star").get<std::vector<double>>();
            s.beta_star = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
        }
        s.p = j.value("p", static_cast<int>(s.beta_star.size()));
        s.n = j.value("n", s.n);
        s.rho = j.value("rho", s.rho);
        s.sigma = j.value("sigma", s.sigma);
        s.family = likelihood_from_name(j.value("family", std::string("gaussian")));
        s.seed = j.value("seed", std::uint64_t{0});
        validate(s);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed scenario JSON: ") + e.what());
    }
}

nlohmann::ordered_json to_json(const EstimatorConfig& c)
{
    nlohmann::ordered_json j;
    j["name"] = c.name;
    j["kind"] = kind_name(c.kind);
    j["penalty"] = family_name(c.penalty);
    j["shape"] = c.shape;
    j["initial"] = initial_name(c.initial);
    j["tuner"] = tuner_name(c.tuner);
    j["gamma"] = c.gamma;
    j["gamma_cv"] = c.gamma_cv;
    j["steps"] = c.steps;
    j["folds"] = c.folds;
    return j;
}

EstimatorConfig estimator_from_json(const nlohmann::json& j)
{
    try {
        EstimatorConfig c;
        c.name = j.at("name").get<std::string>();
        c.kind = kind_from_name(j.at("kind").get<std::string>());
        c.penalty = family_from_name(j.value("penalty", std::string("SCAD")));
        c.shape = j.value("shape", 3.7);
        c.initial = initial_from_name(j.value("initial", std::string("lasso")));
        c.tuner = tuner_from_name(j.value("tuner", std::string("cv")));
        c.gamma = j.value("gamma", 1.0);
        c.gamma_cv = j.value("gamma_cv", false);
        c.steps = j.value("steps", 1);
        c.folds = j.value("folds", 5);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed estimator JSON: ") + e.what());
    }
}

nlohmann::ordered_json to_json(const SimulationReport& report)
{
    nlohmann::ordered_json j;
    nlohmann::ordered_json config;
    config["scenario"] = to_json(report.scenario);
    config["battery"] = nlohmann::ordered_json::array();
    for (const auto& c : report.battery) config["battery"].push_back(to_json(c));
    config["reps"] = report.reps;
    config["seed"] = report.seed;
    j["config"] = config;
    j["per_rep"] = nlohmann::ordered_json::array();
    for (const auto& r : report.per_rep) {
        nlohmann::ordered_json row;
        row["replication"] = r.replication;
        row["estimator"] = r.estimator;
        row["failed"] = r.failed;
        if (r.failed) row["error"] = r.error;
        row["model_error"] = r.metrics.model_error;
        row["correct_zeros"] = r.metrics.correct_zeros;
        row["incorrect_zeros"] = r.metrics.incorrect_zeros;
        row["false_positives"] = r.metrics.false_positives;
        row["false_negatives"] = r.metrics.false_negatives;
        row["active_size"] = r.metrics.active_size;
        row["lambda_chosen"] = r.lambda_chosen;
        j["per_rep"].push_back(row);
    }
    j["aggregates"] = nlohmann::ordered_json::array();
    for (const auto& a : report.aggregates) {
        nlohmann::ordered_json row;
        row["estimator"] = a.estimator;
        row["ok"] = a.ok;
        row["failed"] = a.failed;
        row["mean_model_error"] = a.mean_model_error;
        row["median_model_error"] = a.median_model_error;
        row["mean_false_positives"] = a.mean_false_positives;
        row["mean_false_negatives"] = a.mean_false_negatives;
        row["mean_active_size"] = a.mean_active_size;
        row["mean_correct_zeros"] = a.mean_correct_zeros;
        row["mean_incorrect_zeros"] = a.mean_incorrect_zeros;
        j["aggregates"].push_back(row);
    }
    return j;
}

SimulationReport report_from_json(const nlohmann::json& j)
{
    try {
        SimulationReport report;
        const auto& config = j.at("config");
        report.scenario = scenario_from_json(config.at("scenario"));
        for (const auto& c : config.at("battery")) report.battery.push_back(estimator_from_json(c));
        report.reps = config.at("reps").get<int>();
        report.seed = config.at("seed").get<std::uint64_t>();
        for (const auto& row : j.at("per_rep")) {
            ReplicationRow r;
            r.replication = row.at("replication").get<int>();
            r.estimator = row.at("estimator").get<std::string>();
            r.failed = row.at("failed").get<bool>();
            r.error = row.value("error", std::string());
            r.metrics.model_error = json_number(row.at("model_error"));
            r.metrics.correct_zeros = row.at("correct_zeros").get<int>();
            r.metrics.incorrect_zeros = row.at("incorrect_zeros").get<int>();
            r.metrics.false_positives = row.at("false_positives").get<int>();
            r.metrics.false_negatives = row.at("false_negatives").get<int>();
            r.metrics.active_size = row.at("active_size").get<int>();
            r.lambda_chosen = json_number(row.at("lambda_chosen"));
            report.per_rep.push_back(std::move(r));
        }
        report.aggregates = aggregate(report.per_rep);
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed simulation report JSON: ") + e.what());
    }
}

std::string summary_csv(const SimulationReport& report)
{
    std::string out = "estimator,mean_ME,median_ME,mean_FP,mean_FN,mean_active_size\n";
    for (const auto& a : report.aggregates) {
        out += a.estimator + ',' + fmt6(a.mean_model_error) + ',' + fmt6(a.median_model_error) + ',' +
               fmt6(a.mean_false_positives) + ',' + fmt6(a.mean_false_negatives) + ',' + fmt6(a.mean_active_size) + '\n';
    }
    return out;
}

} // namespace onestep
