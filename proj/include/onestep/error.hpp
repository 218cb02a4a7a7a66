#pragma once
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace onestep {

// Invalid input or precondition violation. Maps to CLI exit code 1.
class ValidationError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// Numerical failure inside a solver or oracle. Maps to CLI exit code 2.
class ComputationError : public std::runtime_error
{
public:
    ComputationError(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class NonConvergenceError : public ComputationError
{
public:
    NonConvergenceError(const std::string& what, Eigen::VectorXd last_iterate, double residual)
        : ComputationError("non_convergence", what),
          last_iterate_(std::move(last_iterate)),
          residual_(residual) {}

    const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }
    double residual() const noexcept { return residual_; }

private:
    Eigen::VectorXd last_iterate_;
    double residual_;
};

} // namespace onestep
