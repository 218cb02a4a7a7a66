#include <onestep/estimators.hpp>
#include <onestep/error.hpp>
#include <onestep/lars.hpp>

#include "cd_engine.hpp"

#include <cmath>
#include <iostream>
#include <limits>

namespace onestep {
namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double null_intercept(const Dataset& data)
{
    if (!data.intercept) return 0.0;
    const double ybar = data.y.mean();
    if (data.family == Likelihood::Gaussian) return ybar;
    return std::log(ybar / (1.0 - ybar));
}

double loss(const Dataset& data, const Eigen::VectorXd& beta, double intercept)
{
    if (data.family == Likelihood::Binomial) return binomial_deviance_half(data, beta, intercept);
    const Eigen::VectorXd r = data.y - data.X * beta - Eigen::VectorXd::Constant(data.n(), intercept);
    return 0.5 * r.squaredNorm();
}

// Whether sum_j p(|beta_j|) is finite and meaningful for this spec at beta.
bool criterion_defined(const PenaltySpec& spec, const Eigen::VectorXd& beta)
{
    if (spec.family == PenaltyFamily::AdaptivePower) return spec.shape < 1.0;
    if (spec.family == PenaltyFamily::LogPenalty && spec.epsilon == 0.0) return (beta.array() != 0.0).all();
    return true;
}

double surrogate_objective(const Dataset& data, const Eigen::VectorXd& weights, const Eigen::VectorXd& beta,
                           double intercept)
{
    double pen = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j)
        if (beta[j] != 0.0) pen += weights[j] * std::abs(beta[j]);
    return loss(data, beta, intercept) + pen;
}

Eigen::VectorXd lla_weights(const PenaltySpec& spec, const Eigen::VectorXd& beta0)
{
    Eigen::VectorXd w(beta0.size());
    for (Eigen::Index j = 0; j < beta0.size(); ++j) w[j] = lla_weight(spec, beta0[j]);
    return w;
}

void set_objective(Estimate& est, const Dataset& data, const PenaltySpec& spec, const Eigen::VectorXd& weights)
{
    if (criterion_defined(spec, est.beta)) {
        est.objective = objective(data, spec, est.beta, est.intercept);
    } else {
        est.objective = surrogate_objective(data, weights, est.beta, est.intercept);
        est.flags.push_back("surrogate_objective");
    }
}

struct LassoCvFit
{
    Fit fit;
    double lambda = 0.0;
};

LassoCvFit lasso_cv(const Dataset& data, const Eigen::VectorXd& weights, double ridge_share,
                    int folds, std::uint64_t seed, int grid_size, double grid_ratio, bool one_se)
{
    // Elastic net: lambda * (l1 |b| + (1 - l1)/2 b^2); plain lasso when ridge_share = 0.
    const double l1_share = 1.0 - ridge_share;
    const Eigen::VectorXd w = weights * l1_share;
    const auto grid = lambda_grid(lambda_max(data, w), grid_size, grid_ratio);
    auto fitter = path_fitter([w, ridge_share](const Dataset& train, double lam, const Fit* warm) {
        return fit_weighted_l1(train, lam, w, warm, lam * ridge_share);
    });
    const auto cv = cross_validate(fitter, data, grid, folds, seed, one_se);
    return {fit_weighted_l1(data, cv.lambda_best, w, nullptr, cv.lambda_best * ridge_share), cv.lambda_best};
}

} // namespace

std::string_view initial_name(InitialMethod method)
{
    switch (method) {
        case InitialMethod::OLS_MLE: return "ols";
        case InitialMethod::Ridge: return "ridge";
        case InitialMethod::LassoCV: return "lasso";
        case InitialMethod::ElasticNet: return "enet";
    }
    return "unknown";
}

InitialMethod initial_from_name(std::string_view name)
{
    for (auto m : {InitialMethod::OLS_MLE, InitialMethod::Ridge, InitialMethod::LassoCV, InitialMethod::ElasticNet})
        if (initial_name(m) == name) return m;
    throw ValidationError("unknown initial estimator '" + std::string(name) + "'");
}

std::string_view tuner_name(Tuner tuner) { return tuner == Tuner::CV ? "cv" : "bic"; }

Tuner tuner_from_name(std::string_view name)
{
    if (name == "cv") return Tuner::CV;
    if (name == "bic") return Tuner::BIC;
    throw ValidationError("unknown tuner '" + std::string(name) + "'");
}

Fit fit_weighted_l1(const Dataset& data, double lambda, const Eigen::VectorXd& weights, const Fit* warm,
                    double ridge)
{
    const Eigen::VectorXd init = warm ? warm->beta : Eigen::VectorXd::Zero(data.p());
    if (data.family == Likelihood::Gaussian) {
        const detail::CdProblem cd{data.X, data.y, nullptr, data.intercept, lambda, weights, ridge};
        auto res = detail::cd_solve(cd, init, 1e-8, 200000);
        return {std::move(res.beta), res.intercept};
    }
    const WeightedL1Problem prob{data, lambda, weights};
    IrlsOptions opts;
    opts.ridge = ridge;
    auto res = irls_penalized_trace(prob, init, opts);
    return {std::move(res.estimate.beta), res.estimate.intercept};
}

Eigen::VectorXd fit_initial(InitialMethod method, const Dataset& data, const InitialConfig& config)
{
    validate(data);
    const auto p = data.p();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(p);
    switch (method) {
        case InitialMethod::OLS_MLE: {
            if (p >= data.n())
                throw ValidationError("OLS/MLE initial estimator needs n > p; use the ridge or lasso initial instead");
            if (data.family == Likelihood::Gaussian) return solve_ridge_weighted(data, Eigen::VectorXd::Zero(p));
            return fit_weighted_l1(data, 0.0, ones).beta;
        }
        case InitialMethod::Ridge: {
            if (!(config.ridge_penalty > 0.0)) throw ValidationError("ridge initial needs a positive penalty");
            if (data.family == Likelihood::Gaussian)
                return solve_ridge_weighted(data, Eigen::VectorXd::Constant(p, 0.5 * config.ridge_penalty));
            return fit_weighted_l1(data, 0.0, ones, nullptr, config.ridge_penalty).beta;
        }
        case InitialMethod::LassoCV:
            return lasso_cv(data, ones, 0.0, config.folds, config.seed, config.grid_size, config.grid_ratio,
                            config.one_se).fit.beta;
        case InitialMethod::ElasticNet:
            if (!(config.enet_alpha > 0.0 && config.enet_alpha <= 1.0))
                throw ValidationError("elastic-net alpha must lie in (0, 1]");
            return lasso_cv(data, ones, 1.0 - config.enet_alpha, config.folds, config.seed, config.grid_size,
                            config.grid_ratio, config.one_se).fit.beta;
    }
    return Eigen::VectorXd::Zero(p);
}

double objective(const Dataset& data, const PenaltySpec& spec, const Eigen::VectorXd& beta, double intercept)
{
    if (beta.size() != data.p() || !beta.allFinite())
        throw ValidationError("objective needs finite coefficients of length p");
    double pen = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) pen += penalty_value(spec, std::abs(beta[j]));
    return loss(data, beta, intercept) + pen;
}

Estimate one_step_lla(const Dataset& data, const PenaltySpec& spec, const Eigen::VectorXd& beta0,
                      const LlaOptions& opts)
{
    validate(data);
    validate(spec);
    if (!is_differentiable(spec.family))
        throw ValidationError("LLA needs a differentiable penalty; use the exhaustive oracle for L0");
    if (beta0.size() != data.p() || !beta0.allFinite())
        throw ValidationError("initial coefficients must be finite with length p");

    const Eigen::VectorXd w = lla_weights(spec, beta0);
    Estimate est;
    const bool all_excluded = (w.array() == inf).all();
    if (all_excluded) {
        est.beta = Eigen::VectorXd::Zero(data.p());
        est.intercept = null_intercept(data);
        est.flags.push_back("fully_excluded");
    } else {
        const WeightedL1Problem prob{data, 1.0, w};
        const Eigen::VectorXd zero = Eigen::VectorXd::Zero(data.p());
        if (data.family == Likelihood::Binomial)
            est = irls_penalized(prob, zero);
        else if (opts.solver == SubproblemSolver::Lars)
            est = solve_weighted_lasso_lars(prob);
        else
            est = solve_weighted_lasso_cd(prob, zero, opts.cd);
    }
    est.active_set = support_of(est.beta);
    est.provenance = {"one_step_lla", spec, spec.lambda, 1, opts.initial_name};
    set_objective(est, data, spec, w);
    return est;
}

LlaTrajectory multi_step_lla(const Dataset& data, const PenaltySpec& spec, const Eigen::VectorXd& beta0,
                             const LlaOptions& opts)
{
    if (opts.max_steps < 1) throw ValidationError("max_steps must be positive");
    validate(spec);
    if (beta0.size() != data.p() || !beta0.allFinite())
        throw ValidationError("initial coefficients must be finite with length p");

    LlaTrajectory traj;
    Estimate start;
    start.beta = beta0;
    start.intercept = data.family == Likelihood::Gaussian ? gaussian_intercept(data, beta0) : null_intercept(data);
    start.active_set = support_of(beta0);
    start.provenance = {"initial", spec, spec.lambda, 0, opts.initial_name};
    set_objective(start, data, spec, lla_weights(spec, beta0));
    traj.objectives.push_back(start.objective);
    traj.iterates.push_back(std::move(start));

    for (int step = 1; step <= opts.max_steps; ++step) {
        Estimate est = one_step_lla(data, spec, traj.iterates.back().beta, opts);
        const double change = (est.beta - traj.iterates.back().beta).cwiseAbs().maxCoeff();
        est.provenance.algorithm = "multi_step_lla";
        est.provenance.steps = step;
        traj.objectives.push_back(est.objective);
        traj.iterates.push_back(std::move(est));
        if (change < opts.tol && !traj.converged) {
            traj.converged = true;
            if (!opts.run_all_steps) break;
        }
    }
    traj.steps = static_cast<int>(traj.iterates.size()) - 1;
    if (data.family == Likelihood::Binomial) {
        for (std::size_t k = 1; k < traj.objectives.size(); ++k) {
            if (traj.objectives[k] > traj.objectives[k - 1] + 1e-10) {
                std::clog << "warning: binomial LLA objective increased at step " << k << '\n';
                traj.flags.push_back("objective_increase");
                break;
            }
        }
    }
    return traj;
}

Estimate adaptive_lasso(const Dataset& data, double gamma, double lambda, const Eigen::VectorXd& beta0,
                        double epsilon, const LlaOptions& opts)
{
    if (!(gamma > 0.0)) throw ValidationError("adaptive lasso gamma must be positive");
    Estimate est = one_step_lla(data, PenaltySpec::adaptive(lambda, gamma, epsilon), beta0, opts);
    est.provenance.algorithm = "adaptive_lasso";
    return est;
}

LlaTrajectory msa_lasso(const Dataset& data, int steps, const MsaOptions& opts)
{
    validate(data);
    if (steps < 1) throw ValidationError("MSA-LASSO needs at least one step");
    if (!(opts.epsilon >= 0.0)) throw ValidationError("MSA-LASSO epsilon must be nonnegative");
    if (opts.tuner == Tuner::BIC && data.family != Likelihood::Gaussian)
        throw ValidationError("BIC tuning is available for Gaussian data only");

    LlaTrajectory traj;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(data.p());
    const auto init = lasso_cv(data, ones, 0.0, opts.folds, opts.seed, opts.grid_size, opts.grid_ratio, false);
    Estimate start;
    start.beta = init.fit.beta;
    start.intercept = init.fit.intercept;
    start.active_set = support_of(start.beta);
    start.provenance = {"lasso_cv", PenaltySpec::l1(init.lambda), init.lambda, 0, "lasso"};
    start.objective = objective(data, PenaltySpec::l1(init.lambda), start.beta, start.intercept);
    traj.objectives.push_back(start.objective);
    traj.iterates.push_back(std::move(start));

    for (int step = 1; step <= steps; ++step) {
        const Eigen::VectorXd& prev = traj.iterates.back().beta;
        if (prev.isZero(0.0)) {
            traj.flags.push_back("empty_model");
            break;
        }
        const Eigen::VectorXd w = lla_weights(PenaltySpec::adaptive(1.0, 1.0, opts.epsilon), prev);
        double lam = 0.0;
        if (opts.tuner == Tuner::CV) {
            const auto grid = lambda_grid(lambda_max(data, w), opts.grid_size, opts.grid_ratio);
            auto fitter = path_fitter([w](const Dataset& train, double l, const Fit* warm) {
                return fit_weighted_l1(train, l, w, warm);
            });
            lam = cross_validate(fitter, data, grid, opts.folds, opts.seed).lambda_best;
        } else {
            lam = bic_select(lars_path(data, w), data).lambda_best;
        }
        LlaOptions lla;
        lla.initial_name = step == 1 ? "lasso" : "msa_lasso";
        Estimate est = adaptive_lasso(data, 1.0, lam, prev, opts.epsilon, lla);
        est.provenance.algorithm = "msa_lasso";
        est.provenance.steps = step;
        traj.objectives.push_back(est.objective);
        const bool empty = est.active_set.empty();
        traj.iterates.push_back(std::move(est));
        if (empty) {
            traj.flags.push_back("empty_model");
            break;
        }
    }
    traj.steps = static_cast<int>(traj.iterates.size()) - 1;
    traj.converged = true;
    return traj;
}

Estimate lqa_fit(const Dataset& data, const PenaltySpec& spec, const Eigen::VectorXd& init, const LqaOptions& opts)
{
    validate(data);
    validate(spec);
    if (data.family != Likelihood::Gaussian) throw ValidationError("LQA is implemented for Gaussian data");
    if (!is_differentiable(spec.family)) throw ValidationError("LQA needs a differentiable penalty");
    if (!(opts.tau > 0.0)) throw ValidationError("LQA threshold tau must be positive");
    if (init.size() != data.p() || !init.allFinite())
        throw ValidationError("initial coefficients must be finite with length p");

    const auto p = data.p();
    Eigen::VectorXd beta = init;
    std::vector<bool> dropped(static_cast<std::size_t>(p), false);
    Eigen::VectorXd diag(p);
    Estimate est;
    int iter = 0;
    bool converged = false;
    for (; iter < opts.max_iter; ++iter) {
        bool any_left = false;
        for (Eigen::Index j = 0; j < p; ++j) {
            const auto jj = static_cast<std::size_t>(j);
            if (!dropped[jj]) {
                const auto c = lqa_coefficient(spec, beta[j], opts.tau);
                if (!c) dropped[jj] = true;
                else diag[j] = *c;
            }
            if (dropped[jj]) diag[j] = inf;
            any_left = any_left || !dropped[jj];
        }
        if (!any_left) {
            beta.setZero();
            est.flags.push_back("all_dropped");
            converged = true;
            break;
        }
        const Eigen::VectorXd next = solve_ridge_weighted(data, diag);
        const double change = (next - beta).cwiseAbs().maxCoeff();
        beta = next;
        if (change < opts.tol) {
            converged = true;
            ++iter;
            break;
        }
    }
    // The thresholding rule applied one final time so the output carries exact zeros.
    for (Eigen::Index j = 0; j < p; ++j)
        if (std::abs(beta[j]) < opts.tau) beta[j] = 0.0;
    if (!converged) est.flags.push_back("not_converged");

    est.beta = beta;
    est.intercept = gaussian_intercept(data, beta);
    est.active_set = support_of(beta);
    est.provenance = {"lqa", spec, spec.lambda, iter, "user"};
    if (criterion_defined(spec, beta))
        est.objective = objective(data, spec, beta, est.intercept);
    else {
        est.objective = loss(data, beta, est.intercept);
        est.flags.push_back("surrogate_objective");
    }
    return est;
}

} // namespace onestep
