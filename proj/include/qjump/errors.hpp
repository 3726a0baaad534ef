#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qjump {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
  public:
    using Error::Error;
};

class DimensionMismatch : public Error {
  public:
    using Error::Error;
};

class InvalidRate : public Error {
  public:
    using Error::Error;
};

class InvalidArgument : public Error {
  public:
    using Error::Error;
};

/// Raised when a coherent or thermal state does not fit in the truncated
/// Fock space. `required_dim` is the smallest dimension that would pass.
class TruncationError : public Error {
  public:
    TruncationError(const std::string& what, int required_dim)
        : Error(what), required_dim_(required_dim) {}
    int required_dim() const { return required_dim_; }

  private:
    int required_dim_;
};

/// NaN/Inf produced by a stochastic update.
class NumericFailure : public Error {
  public:
    NumericFailure(const std::string& what, std::size_t step)
        : Error(what), step_(step) {}
    std::size_t step() const { return step_; }

  private:
    std::size_t step_;
};

/// Positivity lost during deterministic integration.
class IntegrationDiagnostics : public Error {
  public:
    using Error::Error;
};

/// Too much probability clamped in one SRE step.
class StepSizeError : public Error {
  public:
    using Error::Error;
};

class DegenerateEvidence : public Error {
  public:
    using Error::Error;
};

class RecordRangeError : public Error {
  public:
    using Error::Error;
};

class PartialFailure : public Error {
  public:
    PartialFailure(const std::string& what, std::vector<std::size_t> failed)
        : Error(what), failed_(std::move(failed)) {}
    const std::vector<std::size_t>& failed_indices() const { return failed_; }

  private:
    std::vector<std::size_t> failed_;
};

}  // namespace qjump
