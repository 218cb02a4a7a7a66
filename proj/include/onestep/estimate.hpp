#pragma once
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <onestep/penalty.hpp>

namespace onestep {

struct Provenance
{
    std::string algorithm;
    std::optional<PenaltySpec> penalty;
    double lambda = 0.0;
    int steps = 0;
    std::string initial;
};

struct Estimate
{
    Eigen::VectorXd beta;
    double intercept = 0.0;
    std::vector<int> active_set;  // { j : beta_j != 0 }, ascending
    Provenance provenance;
    double objective = 0.0;
    double kkt_residual = 0.0;
    std::vector<std::string> flags;

    bool has_flag(const std::string& flag) const;
};

std::vector<int> support_of(const Eigen::VectorXd& beta);

nlohmann::ordered_json to_json(const Estimate& estimate);

} // namespace onestep
