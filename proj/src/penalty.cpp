#include <onestep/penalty.hpp>
#include <onestep/error.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace onestep {
namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

void require_nonnegative(double t)
{
    if (!(t >= 0.0)) throw ValidationError("penalty argument must be nonnegative");
}

} // namespace

std::string_view family_name(PenaltyFamily family)
{
    switch (family) {
        case PenaltyFamily::L0: return "L0";
        case PenaltyFamily::L1: return "L1";
        case PenaltyFamily::SCAD: return "SCAD";
        case PenaltyFamily::MCP: return "MCP";
        case PenaltyFamily::Bridge: return "Bridge";
        case PenaltyFamily::LogPenalty: return "LogPenalty";
        case PenaltyFamily::AdaptivePower: return "AdaptivePower";
    }
    return "unknown";
}

PenaltyFamily family_from_name(std::string_view name)
{
    for (auto f : {PenaltyFamily::L0, PenaltyFamily::L1, PenaltyFamily::SCAD, PenaltyFamily::MCP,
                   PenaltyFamily::Bridge, PenaltyFamily::LogPenalty, PenaltyFamily::AdaptivePower}) {
        if (family_name(f) == name) return f;
    }
    throw ValidationError("unknown penalty family '" + std::string(name) + "'");
}

PenaltySpec PenaltySpec::l0(double lambda) { return {PenaltyFamily::L0, lambda, 0.0, 0.0}; }
PenaltySpec PenaltySpec::l1(double lambda) { return {PenaltyFamily::L1, lambda, 0.0, 0.0}; }
PenaltySpec PenaltySpec::scad(double lambda, double a) { return {PenaltyFamily::SCAD, lambda, a, 0.0}; }
PenaltySpec PenaltySpec::mcp(double lambda, double gamma) { return {PenaltyFamily::MCP, lambda, gamma, 0.0}; }
PenaltySpec PenaltySpec::bridge(double lambda, double exponent, double epsilon)
{
    return {PenaltyFamily::Bridge, lambda, exponent, epsilon};
}
PenaltySpec PenaltySpec::log_penalty(double lambda, double epsilon)
{
    return {PenaltyFamily::LogPenalty, lambda, 0.0, epsilon};
}
PenaltySpec PenaltySpec::adaptive(double lambda, double gamma, double epsilon)
{
    return {PenaltyFamily::AdaptivePower, lambda, gamma, epsilon};
}

void validate(const PenaltySpec& spec)
{
    if (!(spec.lambda >= 0.0) || !std::isfinite(spec.lambda))
        throw ValidationError("penalty lambda must be finite and nonnegative");
    if (!(spec.epsilon >= 0.0) || !std::isfinite(spec.epsilon))
        throw ValidationError("penalty epsilon must be finite and nonnegative");
    switch (spec.family) {
        case PenaltyFamily::SCAD:
            if (!(spec.shape > 2.0)) throw ValidationError("SCAD requires a > 2");
            break;
        case PenaltyFamily::MCP:
            if (!(spec.shape > 1.0)) throw ValidationError("MCP requires gamma > 1");
            break;
        case PenaltyFamily::Bridge:
        case PenaltyFamily::AdaptivePower:
            if (!(spec.shape > 0.0) || !std::isfinite(spec.shape))
                throw ValidationError(std::string(family_name(spec.family)) + " requires exponent > 0");
            break;
        default:
            break;
    }
}

bool is_differentiable(PenaltyFamily family) { return family != PenaltyFamily::L0; }

double penalty_value(const PenaltySpec& spec, double t)
{
    validate(spec);
    require_nonnegative(t);
    const double lam = spec.lambda;
    switch (spec.family) {
        case PenaltyFamily::L0:
            return t != 0.0 ? 0.5 * lam * lam : 0.0;
        case PenaltyFamily::L1:
            return lam * t;
        case PenaltyFamily::SCAD: {
            const double a = spec.shape;
            if (t <= lam) return lam * t;
            if (t <= a * lam) return (2.0 * a * lam * t - t * t - lam * lam) / (2.0 * (a - 1.0));
            return 0.5 * (a + 1.0) * lam * lam;
        }
        case PenaltyFamily::MCP: {
            const double g = spec.shape;
            if (t <= g * lam) return lam * t - t * t / (2.0 * g);
            return 0.5 * g * lam * lam;
        }
        case PenaltyFamily::Bridge:
            return lam * (std::pow(t + spec.epsilon, spec.shape) - std::pow(spec.epsilon, spec.shape));
        case PenaltyFamily::LogPenalty:
            if (t + spec.epsilon == 0.0) throw ValidationError("singular penalty value: log penalty at zero");
            return lam * std::log(t + spec.epsilon);
        case PenaltyFamily::AdaptivePower: {
            const double g = spec.shape;
            // The Type 1 penalty behind gamma >= 1 is a log or negative power; only
            // its derivative (the weight) is meaningful.
            if (g >= 1.0)
                throw ValidationError("adaptive power penalty has no nonnegative value for gamma >= 1");
            const double e = spec.epsilon;
            return lam / (1.0 - g) * (std::pow(t + e, 1.0 - g) - std::pow(e, 1.0 - g));
        }
    }
    return 0.0;
}

namespace {

// Right derivative at t >= 0; may be +infinity at t = 0.
double right_derivative(const PenaltySpec& spec, double t)
{
    const double lam = spec.lambda;
    switch (spec.family) {
        case PenaltyFamily::L0:
            throw ValidationError("non-differentiable family: L0 is handled by the exhaustive oracle");
        case PenaltyFamily::L1:
            return lam;
        case PenaltyFamily::SCAD: {
            const double a = spec.shape;
            if (t <= lam) return lam;
            return std::max(a * lam - t, 0.0) / (a - 1.0);
        }
        case PenaltyFamily::MCP:
            return std::max(lam - t / spec.shape, 0.0);
        case PenaltyFamily::Bridge: {
            const double s = t + spec.epsilon;
            const double g = spec.shape;
            if (s == 0.0) {
                if (g < 1.0) return lam == 0.0 ? 0.0 : inf;
                return g == 1.0 ? lam : 0.0;
            }
            return lam * g * std::pow(s, g - 1.0);
        }
        case PenaltyFamily::LogPenalty: {
            const double s = t + spec.epsilon;
            if (s == 0.0) return lam == 0.0 ? 0.0 : inf;
            return lam / s;
        }
        case PenaltyFamily::AdaptivePower: {
            const double s = t + spec.epsilon;
            if (s == 0.0) return lam == 0.0 ? 0.0 : inf;
            return lam * std::pow(s, -spec.shape);
        }
    }
    return 0.0;
}

} // namespace

double penalty_derivative(const PenaltySpec& spec, double t)
{
    validate(spec);
    if (!(t > 0.0)) throw ValidationError("penalty derivative requires t > 0");
    return right_derivative(spec, t);
}

double lla_weight(const PenaltySpec& spec, double beta0_j)
{
    validate(spec);
    if (!std::isfinite(beta0_j)) throw ValidationError("initial coefficient must be finite");
    return right_derivative(spec, std::abs(beta0_j));
}

std::optional<double> lqa_coefficient(const PenaltySpec& spec, double beta_kj, double tau)
{
    validate(spec);
    if (!(tau > 0.0)) throw ValidationError("LQA threshold tau must be positive");
    const double t = std::abs(beta_kj);
    if (t < tau) return std::nullopt;
    return right_derivative(spec, t) / (2.0 * t);
}

double max_concavity(const PenaltySpec& spec)
{
    validate(spec);
    switch (spec.family) {
        case PenaltyFamily::L1: return 0.0;
        case PenaltyFamily::SCAD: return 1.0 / (spec.shape - 1.0);
        case PenaltyFamily::MCP: return 1.0 / spec.shape;
        default:
            throw ValidationError("concavity not defined in scope for family " +
                                  std::string(family_name(spec.family)));
    }
}

nlohmann::ordered_json to_json(const PenaltySpec& spec)
{
    nlohmann::ordered_json j;
    j["family"] = family_name(spec.family);
    j["lambda"] = spec.lambda;
    j["shape"] = spec.shape;
    j["epsilon"] = spec.epsilon;
    return j;
}

PenaltySpec penalty_from_json(const nlohmann::json& j)
{
    try {
        PenaltySpec spec;
        spec.family = family_from_name(j.at("family").get<std::string>());
        spec.lambda = j.at("lambda").get<double>();
        spec.shape = j.value("shape", 0.0);
        spec.epsilon = j.value("epsilon", 0.0);
        validate(spec);
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed penalty JSON: ") + e.what());
    }
}

} // namespace onestep
