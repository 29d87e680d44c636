#pragma once

#include <stdexcept>
#include <string>

namespace pcpos {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A copula rectangle came out negative beyond tolerance: the constant
/// conditional copula assumption does not hold for this configuration.
class NonIncreasingCopula : public Error {
public:
    explicit NonIncreasingCopula(double mass)
        : Error("copula rectangle mass " + std::to_string(mass) + " is negative"), mass_(mass) {}
    [[nodiscard]] double mass() const noexcept { return mass_; }

private:
    double mass_;
};

/// A conditional probability used as a divisor vanished.
class DegenerateConditional : public Error {
public:
    using Error::Error;
};

/// One-dimensional maximization did not converge; carries the best point seen.
class NoConvergence : public Error {
public:
    NoConvergence(double best_parameter, double best_value)
        : Error("optimizer did not converge"), best_parameter_(best_parameter), best_value_(best_value) {}
    [[nodiscard]] double best_parameter() const noexcept { return best_parameter_; }
    [[nodiscard]] double best_value() const noexcept { return best_value_; }

private:
    double best_parameter_;
    double best_value_;
};

/// X'X is not invertible.
class SingularDesign : public Error {
public:
    using Error::Error;
};

/// Malformed configuration or CLI input.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Too many Monte Carlo replications failed for a study to be reported.
class ReplicationFailure : public Error {
public:
    using Error::Error;
};

}  // namespace pcpos
