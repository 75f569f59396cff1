#pragma once

#include <stdexcept>
#include <string>

namespace choimps {

// Iterative solver failed to reach its tolerance.  Carries the best residual
// seen so callers can decide whether the result is still usable.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double best_residual)
      : std::runtime_error(what), residual(best_residual) {}
  double residual;
};

// Bad user-facing configuration (CLI flags, config files, parameter ranges).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A curve or extrapolation fit could not be performed sensibly.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace choimps
