#pragma once
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace onestep {

enum class PenaltyFamily { L0, L1, SCAD, MCP, Bridge, LogPenalty, AdaptivePower };

std::string_view family_name(PenaltyFamily family);
PenaltyFamily family_from_name(std::string_view name);

/*
 * A penalty p_lambda(t) applied to |beta_j|.
 *
 * shape is the family constant: SCAD a (> 2), MCP gamma (> 1),
 * Bridge / AdaptivePower exponent (> 0). Unused for L0, L1 and LogPenalty.
 * epsilon shifts the argument of derivatives that diverge at zero
 * (Bridge with exponent < 1, LogPenalty, AdaptivePower); with epsilon = 0
 * those families produce infinite LLA weights at zero.
 */
struct PenaltySpec
{
    PenaltyFamily family = PenaltyFamily::L1;
    double lambda = 0.0;
    double shape = 0.0;
    double epsilon = 0.0;

    static PenaltySpec l0(double lambda);
    static PenaltySpec l1(double lambda);
    static PenaltySpec scad(double lambda, double a = 3.7);
    static PenaltySpec mcp(double lambda, double gamma = 3.0);
    static PenaltySpec bridge(double lambda, double exponent = 0.5, double epsilon = 0.0);
    static PenaltySpec log_penalty(double lambda, double epsilon = 0.0);
    static PenaltySpec adaptive(double lambda, double gamma = 1.0, double epsilon = 0.0);

    bool operator==(const PenaltySpec&) const = default;
};

// Throws ValidationError when the parameters violate the family constraints.
void validate(const PenaltySpec& spec);

bool is_differentiable(PenaltyFamily family);

double penalty_value(const PenaltySpec& spec, double t);

// p'_lambda(t) for t > 0.
double penalty_derivative(const PenaltySpec& spec, double t);

/// LLA weight p'_lambda(|beta0_j|); at zero this is the right derivative,
/// +infinity when it diverges.
double lla_weight(const PenaltySpec& spec, double beta0_j);

/// Ridge coefficient p'(|b|) / (2|b|) of the local quadratic approximation,
/// or nullopt when |b| < tau (the variable is dropped).
std::optional<double> lqa_coefficient(const PenaltySpec& spec, double beta_kj, double tau = 1e-6);

/// sup_{t>0} -p''_lambda(t). Defined for L1, SCAD and MCP.
double max_concavity(const PenaltySpec& spec);

nlohmann::ordered_json to_json(const PenaltySpec& spec);
PenaltySpec penalty_from_json(const nlohmann::json& j);

} // namespace onestep
