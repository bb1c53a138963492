#pragma once

#include <stdexcept>
#include <string>

namespace hybridswap {

// Precondition failures use std::invalid_argument. The two types below carry
// the outcomes the CLI maps onto dedicated exit codes.

/// A computed object broke one of its documented invariants.
class InvariantViolation : public std::runtime_error {
 public:
  explicit InvariantViolation(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative procedure stopped without meeting its convergence criterion.
class ConvergenceFailure : public std::runtime_error {
 public:
  explicit ConvergenceFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hybridswap
