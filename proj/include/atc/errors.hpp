#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace atc {

/// Argument outside the mathematical domain of a function (e.g. r <= 0 for phi).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A deformed configuration that cannot be evaluated (collapsed or overcompressed bond).
class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameters for which the requested optimal-mesh problem has no finite solution.
class IllPosedParameters : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Caller misuse: inconsistent sizes, invalid radii, too few data points.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerically singular linear system.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double condition_estimate)
        : std::runtime_error(what), condition_estimate_(condition_estimate) {}

    double condition_estimate() const noexcept { return condition_estimate_; }

private:
    double condition_estimate_;
};

/// Nonlinear iteration did not reach its tolerance.
class NonConvergence : public std::runtime_error {
public:
    NonConvergence(const std::string& what, std::vector<double> residual_history)
        : std::runtime_error(what), history_(std::move(residual_history)) {}

    const std::vector<double>& residual_history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

}  // namespace atc
