#pragma once

#include <stdexcept>
#include <string>

namespace tpc {

/// Raised on shape mismatches and out-of-domain arguments.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical kernel cannot produce a trustworthy result
/// (failed factorization, non-negligible imaginary residue, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, long frequency = -1)
      : std::runtime_error(what), frequency_(frequency) {}

  /// Fourier slice index that triggered the failure, or -1.
  long frequency() const noexcept { return frequency_; }

 private:
  long frequency_;
};

/// Raised by run-configuration validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tpc
