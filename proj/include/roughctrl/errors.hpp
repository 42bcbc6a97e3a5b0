#pragma once

#include <stdexcept>
#include <string>

namespace roughctrl {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Precondition violation: bad grid, mismatched dimensions, malformed config.
class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what) : Error(what) {}
};

/// Requested regularity is outside the supported range (e.g. Hurst <= 1/3).
class UnsupportedRegularity : public Error {
 public:
  explicit UnsupportedRegularity(const std::string& what) : Error(what) {}
};

/// A state/solution blow-up detected while stepping an integrator.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_index(step) {}
  int step_index;
};

/// Newton inversion of the noise flow failed to reach tolerance.
class InversionFailure : public Error {
 public:
  explicit InversionFailure(const std::string& what) : Error(what) {}
};

/// Policy iteration produced a value decrease beyond tolerance.
class MonotonicityError : public Error {
 public:
  MonotonicityError(const std::string& what, int iter, double before, double after)
      : Error(what + " (iteration " + std::to_string(iter) + ": " + std::to_string(before) +
              " -> " + std::to_string(after) + ")"),
        iteration(iter),
        value_before(before),
        value_after(after) {}
  int iteration;
  double value_before;
  double value_after;
};

}  // namespace roughctrl
