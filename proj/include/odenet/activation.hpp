#pragma once

#include "odenet/linalg.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace odenet {

enum class ActivationTag : std::uint8_t {
  sigmoid = 0,
  tanh = 1,
  relu = 2,
  softplus = 3,
  truncated_power = 4,
  unit_step = 5,
  gaussian_rbf = 6,
  identity = 7,
};

/// Scalar activation σ together with its derivative. At kinks the derivative
/// takes the left-hand value: relu'(0) = 0, unit_step' = 0, and the truncated
/// power of order 0 has derivative 0 everywhere.
struct Activation {
  ActivationTag tag = ActivationTag::tanh;
  /// Order of the truncated power x_+^k; ignored for the other tags.
  unsigned power = 1;

  static Activation sigmoid() { return {ActivationTag::sigmoid, 0}; }
  static Activation tanh() { return {ActivationTag::tanh, 0}; }
  static Activation relu() { return {ActivationTag::relu, 0}; }
  static Activation softplus() { return {ActivationTag::softplus, 0}; }
  static Activation truncated_power(unsigned k) { return {ActivationTag::truncated_power, k}; }
  static Activation unit_step() { return {ActivationTag::unit_step, 0}; }
  static Activation gaussian_rbf() { return {ActivationTag::gaussian_rbf, 0}; }
  static Activation identity() { return {ActivationTag::identity, 0}; }

  double eval(double x) const;
  double deriv(double x) const;

  Vec eval(const Vec& x) const;
  Vec deriv(const Vec& x) const;
  /// In-place componentwise application, used on whole batches.
  void eval_inplace(Mat& z) const;
  void deriv_inplace(Mat& z) const;

  /// False for activations without continuous derivative everywhere.
  bool smooth() const;
  /// True when σ has a point where the derivative convention matters (x = 0).
  bool has_kink() const;
  /// The identity is a polynomial and therefore lacks the universal approximation property.
  bool universal() const { return tag != ActivationTag::identity; }

  /// Canonical name: "tanh", "relu", "truncated_power:3", ...
  std::string name() const;
  static Activation parse(std::string_view text);

  /// Single-byte encoding used in checkpoints: the tag value, or 0x80 | k for
  /// the truncated power of order k (k <= 127).
  std::uint8_t code() const;
  static Activation from_code(std::uint8_t code);

  friend bool operator==(const Activation&, const Activation&) = default;
};

inline double activation_eval(const Activation& kind, double x) { return kind.eval(x); }
inline double activation_deriv(const Activation& kind, double x) { return kind.deriv(x); }

}  // namespace odenet
