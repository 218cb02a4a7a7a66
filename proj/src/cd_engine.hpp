#pragma once
#include <Eigen/Core>

namespace onestep::detail {

// Weighted least squares lasso / elastic net on
//     1/2 sum_i w_i (z_i - b0 - x_i beta)^2 + lambda sum_j pw_j |beta_j| + ridge/2 ||beta||^2.
struct CdProblem
{
    const Eigen::MatrixXd& X;
    const Eigen::VectorXd& z;
    const Eigen::VectorXd* obs_weights = nullptr;  // nullptr means all ones
    bool fit_intercept = true;
    double lambda = 0.0;
    const Eigen::VectorXd& penalty_weights;
    double ridge = 0.0;
};

struct CdResult
{
    Eigen::VectorXd beta;
    double intercept = 0.0;
    int sweeps = 0;
    double kkt = 0.0;
};

CdResult cd_solve(const CdProblem& prob, const Eigen::VectorXd& init, double tol, int max_iter);

} // namespace onestep::detail
