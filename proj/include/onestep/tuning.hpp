#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include <onestep/dataset.hpp>
#include <onestep/lars.hpp>

namespace onestep {

struct Fit
{
    Eigen::VectorXd beta;
    double intercept = 0.0;
};

// Fits a training set at every lambda of a decreasing grid.
using PathFitter = std::function<std::vector<Fit>(const Dataset& train, const std::vector<double>& grid)>;

// Fits a training set at one lambda; warm is the previous grid point's fit (or null).
using GridFitter = std::function<Fit(const Dataset& train, double lambda, const Fit* warm)>;

PathFitter path_fitter(GridFitter fit);

// Smallest lambda for which the all-zero coefficient vector solves the weighted lasso.
double lambda_max(const Dataset& data, const Eigen::VectorXd& weights);

// size points log-spaced from lambda_max down to ratio * lambda_max.
std::vector<double> lambda_grid(double lambda_max, int size = 50, double ratio = 1e-3);

// Fold ids in [0, K): a seeded permutation dealt round-robin, so sizes differ by at most 1.
std::vector<int> make_folds(Eigen::Index n, int K, std::uint64_t seed);

struct CvResult
{
    double lambda_best = 0.0;
    std::size_t index_best = 0;
    std::vector<double> cv_curve;  // mean held-out deviance per grid point
    std::vector<double> cv_se;
    std::vector<std::string> failures;
};

// Held-out deviance: squared error (Gaussian) or log-loss (Binomial).
// Ties go to the larger lambda.
CvResult cross_validate(const PathFitter& fitter, const Dataset& data, const std::vector<double>& grid,
                        int K, std::uint64_t seed, bool one_se = false);

CvResult cross_validate(const PathFitter& fitter, const Dataset& data, const std::vector<double>& grid,
                        const std::vector<int>& folds, bool one_se = false);

struct GammaSelection
{
    double gamma_best = 0.0;
    double lambda_best = 0.0;
    double score = 0.0;
    std::vector<double> gammas;
    std::vector<CvResult> per_gamma;
};

/// Joint CV over (gamma, lambda) for the adaptive lasso with weights |beta0_j|^-gamma.
/// Scores within a relative tie_tolerance of the best count as ties, resolved
/// toward the smaller gamma and then the larger lambda.
GammaSelection select_gamma(const Dataset& data, const std::vector<double>& gamma_grid,
                            const Eigen::VectorXd& beta0, int K, std::uint64_t seed,
                            double tie_tolerance = 1e-3);

struct BicRow
{
    double lambda = 0.0;
    double rss = 0.0;
    int df = 0;
    double bic = 0.0;
    bool floored = false;
};

struct BicResult
{
    double lambda_best = 0.0;
    std::size_t index_best = 0;
    std::vector<BicRow> table;
    bool floored = false;
};

// BIC = n log(RSS / n) + log(n) df with df = |active set|; RSS floored at 1e-12.
BicResult bic_select(const SolutionPath& path, const Dataset& data);

} // namespace onestep
