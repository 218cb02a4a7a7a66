#pragma once
#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <onestep/dataset.hpp>

namespace onestep {

struct SubsetSolution
{
    std::vector<int> subset;
    Eigen::VectorXd beta;  // least-squares refit on the subset, zero elsewhere
    double intercept = 0.0;
    double l0_objective = 0.0;  // 1/2 RSS + 1/2 lambda^2 |subset|
    std::uint64_t subsets_examined = 0;
};

/// Exhaustive minimizer of 1/2 RSS(S) + 1/2 lambda^2 |S| over all 2^p subsets.
/// Exact objective ties go to the smaller subset, then the lexicographically
/// smaller one. threads > 1 splits the enumeration into index ranges.
SubsetSolution best_subset_l0(const Dataset& data, double lambda, int p_cap = 20, int threads = 1);

// z_j * 1[|z_j| > lambda]
Eigen::VectorXd hard_threshold_oracle(const Eigen::VectorXd& z, double lambda);

// max_{j != k} |<x_j, x_k>| / (||x_j|| ||x_k||)
double mutual_coherence(const Eigen::MatrixXd& X);

struct RecoveryOptions
{
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    int p_cap = 20;
    double l0_lambda = -1.0;  // negative: 1e-4 * ||y||
};

struct RecoveryRecord
{
    double mu = 0.0;
    int k = 0;
    bool bound_satisfied = false;
    bool recovered = false;
    bool l0_skipped = false;
    std::vector<int> l1_support;
    std::vector<int> l0_support;
};

// Compares the lasso support as lambda -> 0+ and the exhaustive L0 support
// with support(beta_star) for y = X beta_star (+ optional noise).
RecoveryRecord exact_recovery_check(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta_star,
                                    const RecoveryOptions& opts = {});

nlohmann::ordered_json to_json(const SubsetSolution& sol);
nlohmann::ordered_json to_json(const RecoveryRecord& rec);

} // namespace onestep
