#pragma once

#include <stdexcept>
#include <string>

namespace sl2flow {

/// Invalid parameters or configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical scheme broke down: non-positive determinant, CFL violation,
/// NaN (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double at)
      : std::runtime_error(what + " (at " + std::to_string(at) + ")"), at_(at) {}
  /// Time / scale at which the failure was detected.
  double at() const noexcept { return at_; }

 private:
  double at_;
};

}  // namespace sl2flow
