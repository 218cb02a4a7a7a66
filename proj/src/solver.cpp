#include <onestep/solver.hpp>
#include <onestep/error.hpp>

#include "cd_engine.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace onestep {
namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double sign(double x) { return (x > 0.0) - (x < 0.0); }

double sigmoid(double eta)
{
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

// log(1 + exp(eta)) without overflow.
double log1pexp(double eta)
{
    return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

double weighted_l1(double lambda, const Eigen::VectorXd& weights, const Eigen::VectorXd& beta)
{
    double s = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j)
        if (beta[j] != 0.0) s += lambda * weights[j] * std::abs(beta[j]);
    return s;
}

double max_violation(const Eigen::VectorXd& g, double lambda, const Eigen::VectorXd& weights,
                     const Eigen::VectorXd& beta)
{
    double worst = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        const double thresh = std::isinf(weights[j]) ? inf : lambda * weights[j];
        double v;
        if (beta[j] != 0.0)
            v = std::isinf(thresh) ? inf : std::abs(g[j] + thresh * sign(beta[j]));
        else
            v = std::max(std::abs(g[j]) - thresh, 0.0);
        worst = std::max(worst, v);
    }
    return worst;
}

} // namespace

void validate(const WeightedL1Problem& prob)
{
    validate(prob.data);
    if (!(prob.lambda >= 0.0) || !std::isfinite(prob.lambda))
        throw ValidationError("lambda must be finite and nonnegative");
    if (prob.weights.size() != prob.data.p())
        throw ValidationError("weight vector length must equal the number of predictors");
    for (Eigen::Index j = 0; j < prob.weights.size(); ++j)
        if (!(prob.weights[j] >= 0.0)) throw ValidationError("weights must be nonnegative (or +infinity)");
}

Estimate solve_weighted_lasso_cd(const WeightedL1Problem& prob, const Eigen::VectorXd& init,
                                 const CdOptions& opts)
{
    validate(prob);
    if (prob.data.family != Likelihood::Gaussian)
        throw ValidationError("coordinate descent lasso expects Gaussian data; use irls_penalized");
    if (init.size() != prob.data.p() || !init.allFinite())
        throw ValidationError("initial coefficients must be finite with length p");
    if (!(opts.tol > 0.0)) throw ValidationError("tolerance must be positive");

    const detail::CdProblem cd{prob.data.X, prob.data.y, nullptr, prob.data.intercept,
                               prob.lambda, prob.weights, 0.0};
    auto res = detail::cd_solve(cd, init, opts.tol, opts.max_iter);

    Estimate est;
    est.beta = std::move(res.beta);
    est.intercept = res.intercept;
    est.active_set = support_of(est.beta);
    est.provenance = {"coordinate_descent", std::nullopt, prob.lambda, res.sweeps, ""};
    const Eigen::VectorXd r = prob.data.y - prob.data.X * est.beta - Eigen::VectorXd::Constant(prob.data.n(), est.intercept);
    est.objective = 0.5 * r.squaredNorm() + weighted_l1(prob.lambda, prob.weights, est.beta);
    est.kkt_residual = res.kkt;
    return est;
}

double kkt_check(const WeightedL1Problem& prob, const Eigen::VectorXd& beta, std::optional<double> intercept)
{
    validate(prob);
    const auto& d = prob.data;
    if (beta.size() != d.p()) throw ValidationError("coefficient length must equal p");
    Eigen::VectorXd g;
    if (d.family == Likelihood::Gaussian) {
        const double b0 = intercept ? *intercept : gaussian_intercept(d, beta);
        const Eigen::VectorXd r = d.y - d.X * beta - Eigen::VectorXd::Constant(d.n(), b0);
        g = -(d.X.transpose() * r);
    } else {
        if (d.intercept && !intercept)
            throw ValidationError("binomial KKT check needs the fitted intercept");
        const double b0 = intercept.value_or(0.0);
        const Eigen::VectorXd eta = (d.X * beta).array() + b0;
        const Eigen::VectorXd mu = eta.unaryExpr([](double e) { return sigmoid(e); });
        g = -(d.X.transpose() * (d.y - mu));
    }
    return max_violation(g, prob.lambda, prob.weights, beta);
}

Eigen::VectorXd solve_ridge_weighted(const Dataset& data, const Eigen::VectorXd& diag)
{
    validate(data);
    if (diag.size() != data.p()) throw ValidationError("ridge diagonal length must equal p");
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < diag.size(); ++j) {
        if (!(diag[j] >= 0.0)) throw ValidationError("ridge diagonal must be nonnegative");
        if (!std::isinf(diag[j])) keep.push_back(j);
    }
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(data.p());
    if (keep.empty()) return beta;

    const auto k = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd xk(data.n(), k);
    for (Eigen::Index a = 0; a < k; ++a) xk.col(a) = data.X.col(keep[a]);
    Eigen::VectorXd yk = data.y;
    if (data.intercept) {
        xk = xk.rowwise() - xk.colwise().mean();
        yk.array() -= yk.mean();
    }
    Eigen::MatrixXd a = xk.transpose() * xk;
    for (Eigen::Index i = 0; i < k; ++i) a(i, i) += 2.0 * diag[keep[i]];
    const Eigen::VectorXd b = xk.transpose() * yk;

    Eigen::LLT<Eigen::MatrixXd> llt(a);
    const double scale = std::max(a.diagonal().maxCoeff(), 1.0);
    bool ok = llt.info() == Eigen::Success;
    if (ok) {
        // LLT succeeds on numerically singular matrices; check the pivots too.
        const Eigen::VectorXd piv = Eigen::MatrixXd(llt.matrixL()).diagonal();
        ok = piv.array().square().minCoeff() > 1e-12 * scale;
    }
    if (!ok) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
        const auto null_dim = (eig.eigenvalues().array() <= 1e-12 * scale).count();
        throw ComputationError("singular_system",
                               "weighted ridge system is singular: null space dimension " +
                                   std::to_string(null_dim));
    }
    Eigen::VectorXd sol = llt.solve(b);
    // One step of iterative refinement.
    sol += llt.solve(b - a * sol);
    const double rel = (a * sol - b).norm() / std::max(b.norm(), std::numeric_limits<double>::min());
    if (b.norm() > 0.0 && rel > 1e-10)
        throw ComputationError("ill_conditioned", "weighted ridge solve residual " + std::to_string(rel));
    for (Eigen::Index i = 0; i < k; ++i) beta[keep[i]] = sol[i];
    return beta;
}

double binomial_deviance_half(const Dataset& data, const Eigen::VectorXd& beta, double intercept)
{
    double nll = 0.0;
    const Eigen::VectorXd eta = (data.X * beta).array() + intercept;
    for (Eigen::Index i = 0; i < data.n(); ++i) nll += log1pexp(eta[i]) - data.y[i] * eta[i];
    return nll;
}

IrlsResult irls_penalized_trace(const WeightedL1Problem& prob, const Eigen::VectorXd& init,
                                const IrlsOptions& opts)
{
    validate(prob);
    const auto& d = prob.data;
    if (d.family != Likelihood::Binomial) throw ValidationError("IRLS expects binomial data");
    if (init.size() != d.p() || !init.allFinite())
        throw ValidationError("initial coefficients must be finite with length p");

    const double ybar = d.y.mean();
    if (d.intercept && (ybar == 0.0 || ybar == 1.0))
        throw ComputationError("separation", "constant binomial response: intercept diverges");

    auto penalized = [&](const Eigen::VectorXd& b, double b0) {
        return binomial_deviance_half(d, b, b0) + weighted_l1(prob.lambda, prob.weights, b) +
               0.5 * opts.ridge * b.squaredNorm();
    };

    Eigen::VectorXd beta = init;
    for (Eigen::Index j = 0; j < d.p(); ++j)
        if (std::isinf(prob.weights[j])) beta[j] = 0.0;
    double b0 = 0.0;
    if (d.intercept) {
        // Start the intercept at the value matching the mean response given beta.
        b0 = std::log(ybar / (1.0 - ybar)) - d.X.colwise().mean().dot(beta);
    }
    double obj = penalized(beta, b0);

    IrlsResult out;
    bool converged = false;
    int outer = 0;
    const auto n = d.n();
    Eigen::VectorXd w(n), z(n);
    for (; outer < opts.max_outer && !converged; ++outer) {
        const Eigen::VectorXd eta = (d.X * beta).array() + b0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mu = sigmoid(eta[i]);
            w[i] = std::max(mu * (1.0 - mu), opts.weight_floor);
            z[i] = eta[i] + (d.y[i] - mu) / w[i];
        }
        const detail::CdProblem cd{d.X, z, &w, d.intercept, prob.lambda, prob.weights, opts.ridge};
        const auto res = detail::cd_solve(cd, beta, opts.inner_tol, 200000);

        // Step-halving toward the weighted-lasso solution until the objective does not increase.
        double t = 1.0;
        Eigen::VectorXd cand_beta = res.beta;
        double cand_b0 = res.intercept;
        double cand_obj = penalized(cand_beta, cand_b0);
        int halvings = 0;
        while (cand_obj > obj && halvings < opts.max_halvings) {
            t *= 0.5;
            ++halvings;
            cand_beta = beta + t * (res.beta - beta);
            cand_b0 = b0 + t * (res.intercept - b0);
            cand_obj = penalized(cand_beta, cand_b0);
        }
        if (cand_obj > obj) {
            converged = true;  // no descent direction left at this precision
            break;
        }
        const double change = std::max((cand_beta - beta).cwiseAbs().maxCoeff(), std::abs(cand_b0 - b0));
        beta = cand_beta;
        b0 = cand_b0;
        obj = cand_obj;
        out.objectives.push_back(obj);
        const double max_eta = ((d.X * beta).array() + b0).abs().maxCoeff();
        if (max_eta > 30.0)
            throw ComputationError("separation",
                                   "linear predictor diverging (|eta| > 30): data look separable, "
                                   "use a stronger lambda");
        if (change < opts.outer_tol) converged = true;
    }
    if (!converged) {
        throw NonConvergenceError("IRLS did not converge within " + std::to_string(opts.max_outer) +
                                      " outer iterations",
                                  beta, kkt_check(prob, beta, b0));
    }
    for (Eigen::Index j = 0; j < d.p(); ++j)
        if (std::isinf(prob.weights[j])) beta[j] = 0.0;

    Estimate& est = out.estimate;
    est.beta = beta;
    est.intercept = b0;
    est.active_set = support_of(beta);
    est.provenance = {"irls", std::nullopt, prob.lambda, outer, ""};
    est.objective = obj;
    est.kkt_residual = opts.ridge == 0.0 ? kkt_check(prob, beta, b0) : 0.0;
    return out;
}

Estimate irls_penalized(const WeightedL1Problem& prob, const Eigen::VectorXd& init, double outer_tol,
                        int max_outer)
{
    IrlsOptions opts;
    opts.outer_tol = outer_tol;
    opts.max_outer = max_outer;
    return irls_penalized_trace(prob, init, opts).estimate;
}

} // namespace onestep
