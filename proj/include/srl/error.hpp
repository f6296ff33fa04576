#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace srl {

/// Base of all library errors. The CLI maps each subclass to an exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration, dimension mismatch, bad probabilities, unknown keys.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A mathematical precondition failed (contractivity, kappa < 1, orbit condition, ...).
/// `hypothesis` names the failed condition.
class HypothesisError : public Error {
public:
    HypothesisError(std::string hypothesis, const std::string& detail)
        : Error(hypothesis + ": " + detail), hypothesis_(std::move(hypothesis)) {}
    const std::string& hypothesis() const noexcept { return hypothesis_; }

private:
    std::string hypothesis_;
};

/// Numerical fault: overflow, singular product, diverging series, too few samples.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Trajectory produced a non-finite coordinate.
class OverflowError : public NumericError {
public:
    OverflowError(std::uint64_t step, std::uint64_t replica)
        : NumericError("non-finite state at step " + std::to_string(step) + " (replica " +
                       std::to_string(replica) + ")"),
          step_(step), replica_(replica) {}
    std::uint64_t step() const noexcept { return step_; }
    std::uint64_t replica() const noexcept { return replica_; }

private:
    std::uint64_t step_;
    std::uint64_t replica_;
};

/// Not enough order statistics / exceedances for the requested estimate.
class InsufficientData : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace srl
