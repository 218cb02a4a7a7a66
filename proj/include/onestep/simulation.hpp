#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <onestep/dataset.hpp>
#include <onestep/estimators.hpp>
#include <onestep/penalty.hpp>

namespace onestep {

struct ScenarioSpec
{
    int n = 120;
    int p = 8;
    Eigen::VectorXd beta_star;
    double rho = 0.5;   // Sigma_ij = rho^|i-j|
    double sigma = 1.0; // noise SD (Gaussian)
    Likelihood family = Likelihood::Gaussian;
    std::uint64_t seed = 0;
};

// beta* = (3, 1.5, 0, 0, 2, 0, 0, 0), rho = 0.5, n = 120, sigma = 1.
ScenarioSpec default_scenario();

void validate(const ScenarioSpec& spec);

struct Scenario
{
    Dataset data;  // raw scale, with intercept
    Eigen::VectorXd beta_star;
    Eigen::MatrixXd Sigma;
};

Scenario generate_scenario(const ScenarioSpec& spec);

struct Metrics
{
    double model_error = 0.0;  // (b - b*)' Sigma (b - b*)
    int correct_zeros = 0;
    int incorrect_zeros = 0;
    int false_positives = 0;
    int false_negatives = 0;
    int active_size = 0;
};

Metrics evaluate(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_star, const Eigen::MatrixXd& Sigma);

enum class EstimatorKind { Lasso, OneStep, FullLla, AdaptiveLasso, MsaLasso, Lqa, OracleOls };

std::string_view kind_name(EstimatorKind kind);
EstimatorKind kind_from_name(std::string_view name);

struct EstimatorConfig
{
    std::string name;
    EstimatorKind kind = EstimatorKind::Lasso;
    PenaltyFamily penalty = PenaltyFamily::SCAD;
    double shape = 3.7;
    InitialMethod initial = InitialMethod::LassoCV;
    Tuner tuner = Tuner::CV;
    double gamma = 1.0;
    bool gamma_cv = false;
    int steps = 1;  // MSA-LASSO steps
    int folds = 5;
};

std::vector<EstimatorConfig> default_battery();

struct FittedModel
{
    Eigen::VectorXd beta;  // standardized scale
    double intercept = 0.0;
    double lambda = 0.0;
};

/// Fits one configured estimator on a standardized dataset, tuning its lambda.
/// beta_star is only consulted by the oracle estimator.
FittedModel fit_configured(const EstimatorConfig& config, const Dataset& standardized, std::uint64_t seed,
                           const Eigen::VectorXd& beta_star_std = {});

struct ReplicationRow
{
    int replication = 0;
    std::string estimator;
    bool failed = false;
    std::string error;
    Metrics metrics;
    double lambda_chosen = 0.0;
};

struct Aggregate
{
    std::string estimator;
    int ok = 0;
    int failed = 0;
    double mean_model_error = 0.0;
    double median_model_error = 0.0;
    double mean_false_positives = 0.0;
    double mean_false_negatives = 0.0;
    double mean_active_size = 0.0;
    double mean_correct_zeros = 0.0;
    double mean_incorrect_zeros = 0.0;
};

struct SimulationReport
{
    ScenarioSpec scenario;
    std::vector<EstimatorConfig> battery;
    int reps = 0;
    std::uint64_t seed = 0;
    std::vector<ReplicationRow> per_rep;  // sorted by (replication, battery order)
    std::vector<Aggregate> aggregates;    // sorted by estimator name

    const Aggregate& aggregate_for(const std::string& estimator) const;
};

// Per-estimator aggregates of the successful rows, ordered by estimator name.
std::vector<Aggregate> aggregate(const std::vector<ReplicationRow>& rows);

// Replication r draws its data from seed ^ r; results do not depend on threads.
SimulationReport run_comparison(const std::vector<EstimatorConfig>& battery, const ScenarioSpec& spec, int reps,
                                std::uint64_t seed, int threads = 1);

nlohmann::ordered_json to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const EstimatorConfig& config);
EstimatorConfig estimator_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const SimulationReport& report);
SimulationReport report_from_json(const nlohmann::json& j);

// estimator,mean_ME,median_ME,mean_FP,mean_FN,mean_active_size with 6 significant digits.
std::string summary_csv(const SimulationReport& report);

} // namespace onestep
