#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace onestep::cli {

struct RunConfig
{
    std::string command;
    std::vector<std::string> args;

    std::string data;
    std::string response = "y";
    std::string family = "gaussian";
    std::string penalty = "scad";
    std::optional<double> shape;
    double epsilon = 0.0;
    std::optional<double> lambda;
    bool cv = false;
    bool bic = false;
    std::optional<double> gamma;
    bool gamma_cv = false;
    std::string initial = "lasso";
    int steps = 1;
    std::string algorithm = "lla";
    int folds = 5;
    std::uint64_t seed = 0;
    std::string out;
    int threads = 1;

    int reps = 100;
    std::string scenario;
    std::string battery;
    std::string from_report;

    int p_cap = 20;

    int n = 64;
    int p = 16;
    int k = 1;
    int instances = 20;
    double noise = 0.0;
    double l0_lambda = -1.0;
};

nlohmann::ordered_json to_json(const RunConfig& config);

// Parses argv-style arguments (without the program name), runs the command and returns the exit code.
int run(const std::vector<std::string>& args);

// Runs an already parsed config; throws on failure.
void execute(const RunConfig& config);

} // namespace onestep::cli
