#pragma once
#include <string>
#include <vector>

#include <Eigen/Core>

#include <onestep/dataset.hpp>
#include <onestep/estimate.hpp>
#include <onestep/solver.hpp>

namespace onestep {

// Variables that reached the entry condition at the same breakpoint. The lowest
// index entered; the others were handled at the same lambda afterwards.
struct PathTie
{
    std::size_t breakpoint = 0;
    std::vector<int> variables;
};

/*
 * Piecewise-linear lasso path. breakpoints are strictly decreasing; the first
 * one is lambda_max with all-zero coefficients and, unless the path stalls,
 * the last one is lambda = 0. active_sets[k] is the nonzero set of
 * coefficients[k].
 */
struct SolutionPath
{
    std::vector<double> breakpoints;
    std::vector<Eigen::VectorXd> coefficients;
    std::vector<std::vector<int>> active_sets;
    std::vector<double> intercepts;
    std::vector<PathTie> ties;
    std::vector<int> blocked;  // columns refused because they were collinear with the active set

    std::size_t size() const { return breakpoints.size(); }

    // Linear interpolation between breakpoints; zero above lambda_max.
    Eigen::VectorXd coefficients_at(double lambda) const;

    // Support on the last segment of the path, i.e. as lambda -> 0+.
    std::vector<int> support_near_zero(double floor = 1e-10) const;
};

/// Weighted lasso path via column rescaling x_j / w_j. Gaussian data only;
/// weights must be positive, and +infinity weights exclude the column.
SolutionPath lars_path(const Dataset& data, const Eigen::VectorXd& weights);

// Solves a weighted-L1 problem from the LARS path. Zero-weight (unpenalized)
// columns are projected out first, so any nonnegative weights are accepted.
Estimate solve_weighted_lasso_lars(const WeightedL1Problem& prob);

// First-column-is-lambda CSV with 12 significant digits.
std::string to_csv(const SolutionPath& path);

} // namespace onestep
