#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace odenet {

/// Dimension or sequence-length mismatch between arguments.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A state, adjoint or loss became non-finite (or exceeded the overflow guard).
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::ptrdiff_t step)
      : std::runtime_error(what), step_(step) {}

  /// Time-step / layer index where the blow-up was detected, -1 if unknown.
  std::ptrdiff_t step() const noexcept { return step_; }

 private:
  std::ptrdiff_t step_;
};

/// A matrix violated a rank or determinant-sign precondition.
class RankError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed file (checkpoint, IDX, CSV, shallow-net text) or bad config.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace odenet
