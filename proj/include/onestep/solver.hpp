#pragma once
#include <vector>

#include <Eigen/Core>

#include <onestep/dataset.hpp>
#include <onestep/estimate.hpp>

namespace onestep {

/*
 * Weighted-L1 subproblem
 *
 *     minimize  loss(beta, b0) + lambda * sum_j weights_j |beta_j|
 *
 * with loss = 1/2 ||y - b0 - X beta||^2 (Gaussian, no 1/n factor) or the
 * negative log-likelihood (Binomial). weights_j = +infinity pins beta_j to 0;
 * weights_j = 0 leaves beta_j unpenalized. The intercept is never penalized.
 */
struct WeightedL1Problem
{
    const Dataset& data;
    double lambda = 0.0;
    Eigen::VectorXd weights;
};

void validate(const WeightedL1Problem& prob);

struct CdOptions
{
    double tol = 1e-10;     // KKT residual target
    int max_iter = 200000;  // coordinate sweeps
};

inline double soft_threshold(double z, double a)
{
    if (z > a) return z - a;
    if (z < -a) return z + a;
    return 0.0;
}

// Cyclic coordinate descent with active-set sweeps. Gaussian only.
Estimate solve_weighted_lasso_cd(const WeightedL1Problem& prob,
                                 const Eigen::VectorXd& init,
                                 const CdOptions& opts = {});

/// Maximum KKT violation of beta. For Gaussian data without an explicit
/// intercept, the optimal intercept is profiled out. Binomial data with an
/// intercept requires it to be passed.
double kkt_check(const WeightedL1Problem& prob, const Eigen::VectorXd& beta,
                 std::optional<double> intercept = std::nullopt);

// argmin 1/2 ||y - b0 - X beta||^2 + sum_j diag_j beta_j^2. diag_j = +inf drops j.
Eigen::VectorXd solve_ridge_weighted(const Dataset& data, const Eigen::VectorXd& diag);

struct IrlsOptions
{
    double outer_tol = 1e-8;
    int max_outer = 100;
    double inner_tol = 1e-10;
    int max_halvings = 20;
    double weight_floor = 1e-5;
    double ridge = 0.0;  // extra 1/2 ridge * ||beta||^2, used by elastic-net initial fits
};

struct IrlsResult
{
    Estimate estimate;
    std::vector<double> objectives;  // penalized objective after each accepted outer step
};

IrlsResult irls_penalized_trace(const WeightedL1Problem& prob, const Eigen::VectorXd& init,
                                const IrlsOptions& opts = {});

// Binomial penalized likelihood via IRLS with weighted-lasso inner solves.
Estimate irls_penalized(const WeightedL1Problem& prob, const Eigen::VectorXd& init,
                        double outer_tol = 1e-8, int max_outer = 100);

double binomial_deviance_half(const Dataset& data, const Eigen::VectorXd& beta, double intercept);

} // namespace onestep
