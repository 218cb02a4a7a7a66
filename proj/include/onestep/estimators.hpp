#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include <onestep/dataset.hpp>
#include <onestep/estimate.hpp>
#include <onestep/penalty.hpp>
#include <onestep/solver.hpp>
#include <onestep/tuning.hpp>

namespace onestep {

enum class InitialMethod { OLS_MLE, Ridge, LassoCV, ElasticNet };

std::string_view initial_name(InitialMethod method);
InitialMethod initial_from_name(std::string_view name);

struct InitialConfig
{
    double ridge_penalty = 1e-2;  // objective 1/2 ||y - X b||^2 + ridge_penalty/2 ||b||^2
    double enet_alpha = 0.5;      // L1 share of the elastic-net penalty
    int folds = 5;
    std::uint64_t seed = 0;
    int grid_size = 50;
    double grid_ratio = 1e-3;
    bool one_se = false;
};

Eigen::VectorXd fit_initial(InitialMethod method, const Dataset& data, const InitialConfig& config = {});

// Weighted-L1 fit at one lambda on either likelihood (CD or IRLS), warm-started when given.
Fit fit_weighted_l1(const Dataset& data, double lambda, const Eigen::VectorXd& weights,
                    const Fit* warm = nullptr, double ridge = 0.0);

enum class SubproblemSolver { CoordinateDescent, Lars };

struct LlaOptions
{
    SubproblemSolver solver = SubproblemSolver::CoordinateDescent;
    CdOptions cd;
    int max_steps = 20;
    double tol = 1e-6;           // max-norm coefficient change that ends multi-step LLA
    bool run_all_steps = false;  // keep iterating after convergence up to max_steps
    std::string initial_name = "user";
};

/// Penalized criterion: 1/2 ||y - b0 - X beta||^2 (or the binomial negative
/// log-likelihood) plus sum_j p_lambda(|beta_j|).
double objective(const Dataset& data, const PenaltySpec& spec, const Eigen::VectorXd& beta, double intercept);

// One LLA step: weighted lasso with w_j = p'_lambda(|beta0_j|) and no extra lambda factor.
Estimate one_step_lla(const Dataset& data, const PenaltySpec& spec, const Eigen::VectorXd& beta0,
                      const LlaOptions& opts = {});

struct LlaTrajectory
{
    std::vector<Estimate> iterates;  // iterates[0] is the initial estimate
    std::vector<double> objectives;
    bool converged = false;
    int steps = 0;
    std::vector<std::string> flags;
};

LlaTrajectory multi_step_lla(const Dataset& data, const PenaltySpec& spec, const Eigen::VectorXd& beta0,
                             const LlaOptions& opts = {});

// argmin 1/2 ||y - X b||^2 + sum_j lambda (|beta0_j| + epsilon)^-gamma |b_j|.
Estimate adaptive_lasso(const Dataset& data, double gamma, double lambda, const Eigen::VectorXd& beta0,
                        double epsilon = 0.0, const LlaOptions& opts = {});

enum class Tuner { CV, BIC };

std::string_view tuner_name(Tuner tuner);
Tuner tuner_from_name(std::string_view name);

// Lambda chosen by K-fold CV or by BIC over fits of the full data along the grid.
double tune_lambda(const GridFitter& fit, const Dataset& data, const std::vector<double>& grid, Tuner tuner,
                   int folds, std::uint64_t seed);


struct MsaOptions
{
    Tuner tuner = Tuner::CV;
    double epsilon = 1e-6;
    int folds = 5;
    std::uint64_t seed = 0;
    int grid_size = 50;
    double grid_ratio = 1e-3;
};

/// Multi-step adaptive lasso: LassoCV, then repeated adaptive-lasso steps with
/// weights 1 / (|beta_j| + epsilon) and a freshly tuned lambda at each step.
LlaTrajectory msa_lasso(const Dataset& data, int steps, const MsaOptions& opts = {});

struct LqaOptions
{
    double tau = 1e-6;
    int max_iter = 1000;
    double tol = 1e-9;
};

// Iteratively reweighted ridge; coefficients below tau are dropped for good.
Estimate lqa_fit(const Dataset& data, const PenaltySpec& spec, const Eigen::VectorXd& init,
                 const LqaOptions& opts = {});

} // namespace onestep
