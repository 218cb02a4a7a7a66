#include <onestep/estimate.hpp>

#include <algorithm>

namespace onestep {

bool Estimate::has_flag(const std::string& flag) const
{
    return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

std::vector<int> support_of(const Eigen::VectorXd& beta)
{
    std::vector<int> out;
    for (Eigen::Index j = 0; j < beta.size(); ++j)
        if (beta[j] != 0.0) out.push_back(static_cast<int>(j));
    return out;
}

nlohmann::ordered_json to_json(const Estimate& estimate)
{
    nlohmann::ordered_json j;
    j["algorithm"] = estimate.provenance.algorithm;
    if (estimate.provenance.penalty)
        j["penalty"] = to_json(*estimate.provenance.penalty);
    else
        j["penalty"] = nullptr;
    j["lambda"] = estimate.provenance.lambda;
    j["steps"] = estimate.provenance.steps;
    j["intercept"] = estimate.intercept;
    j["beta"] = std::vector<double>(estimate.beta.data(), estimate.beta.data() + estimate.beta.size());
    j["active_set"] = estimate.active_set;
    j["objective"] = estimate.objective;
    j["initial"] = estimate.provenance.initial;
    j["flags"] = estimate.flags;
    return j;
}

} // namespace onestep
