#pragma once

#include <stdexcept>
#include <string>

namespace dlms {

// Raised when an iterative solver exhausts its iteration budget. Carries the
// residual reached on the last sweep so callers can decide whether to retry
// with a larger budget.
class IterationLimitError : public std::runtime_error {
 public:
  IterationLimitError(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

// Raised when an operation is asked about a regime it does not cover, e.g.
// asymptotic limits of a non-convergent mean recursion.
class UnsupportedCaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a numerical routine produces internally inconsistent results
// (eigensolver failure, diverging series, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dlms
