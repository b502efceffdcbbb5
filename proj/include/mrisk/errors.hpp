#pragma once

#include <stdexcept>
#include <string>

namespace mrisk {

/// Argument outside the documented domain (lambda <= 0, empty grid, ...).
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The data cannot support the requested fit (rank-deficient design, p >= n).
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An inner numerical routine failed to converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The operation needs information the caller did not supply.
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// solve_system exhausted all restarts. Carries the smallest residual seen.
class NoConvergence : public NumericalError {
 public:
  NoConvergence(const std::string& what, double best_residual)
      : NumericalError(what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

}  // namespace mrisk
