#include "odenet/activation.hpp"

#include "odenet/errors.hpp"

#include <charconv>
#include <cmath>
#include <numbers>

namespace odenet {
namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double int_pow(double x, unsigned k) {
  double r = 1.0;
  for (unsigned i = 0; i < k; ++i) r *= x;
  return r;
}

}  // namespace

double Activation::eval(double x) const {
  switch (tag) {
    case ActivationTag::sigmoid:
      return stable_sigmoid(x);
    case ActivationTag::tanh:
      return std::tanh(x);
    case ActivationTag::relu:
      return x > 0.0 ? x : 0.0;
    case ActivationTag::softplus:
      return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
    case ActivationTag::truncated_power:
      return x > 0.0 ? int_pow(x, power) : 0.0;
    case ActivationTag::unit_step:
      return x > 0.0 ? 1.0 : 0.0;
    case ActivationTag::gaussian_rbf:
      return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    case ActivationTag::identity:
      return x;
  }
  return 0.0;
}

double Activation::deriv(double x) const {
  switch (tag) {
    case ActivationTag::sigmoid: {
      const double s = stable_sigmoid(x);
      return s * (1.0 - s);
    }
    case ActivationTag::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActivationTag::relu:
      return x > 0.0 ? 1.0 : 0.0;
    case ActivationTag::softplus:
      return stable_sigmoid(x);
    case ActivationTag::truncated_power:
      if (power == 0 || x <= 0.0) return 0.0;
      return static_cast<double>(power) * int_pow(x, power - 1);
    case ActivationTag::unit_step:
      return 0.0;
    case ActivationTag::gaussian_rbf:
      return -x * std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    case ActivationTag::identity:
      return 1.0;
  }
  return 0.0;
}

Vec Activation::eval(const Vec& x) const {
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = eval(x(i));
  return out;
}

Vec Activation::deriv(const Vec& x) const {
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = deriv(x(i));
  return out;
}

void Activation::eval_inplace(Mat& z) const {
  if (tag == ActivationTag::tanh) {
    z = z.array().tanh();
    return;
  }
  double* p = z.data();
  for (Eigen::Index i = 0; i < z.size(); ++i) p[i] = eval(p[i]);
}

void Activation::deriv_inplace(Mat& z) const {
  double* p = z.data();
  for (Eigen::Index i = 0; i < z.size(); ++i) p[i] = deriv(p[i]);
}

bool Activation::smooth() const {
  switch (tag) {
    case ActivationTag::sigmoid:
    case ActivationTag::tanh:
    case ActivationTag::softplus:
    case ActivationTag::gaussian_rbf:
    case ActivationTag::identity:
      return true;
    case ActivationTag::truncated_power:
      return power >= 2;
    case ActivationTag::relu:
    case ActivationTag::unit_step:
      return false;
  }
  return false;
}

bool Activation::has_kink() const { return !smooth(); }

std::string Activation::name() const {
  switch (tag) {
    case ActivationTag::sigmoid:
      return "sigmoid";
    case ActivationTag::tanh:
      return "tanh";
    case ActivationTag::relu:
      return "relu";
    case ActivationTag::softplus:
      return "softplus";
    case ActivationTag::truncated_power:
      return "truncated_power:" + std::to_string(power);
    case ActivationTag::unit_step:
      return "unit_step";
    case ActivationTag::gaussian_rbf:
      return "gaussian_rbf";
    case ActivationTag::identity:
      return "identity";
  }
  return "?";
}

Activation Activation::parse(std::string_view text) {
  if (text == "sigmoid") return sigmoid();
  if (text == "tanh") return tanh();
  if (text == "relu") return relu();
  if (text == "softplus") return softplus();
  if (text == "unit_step") return unit_step();
  if (text == "gaussian_rbf") return gaussian_rbf();
  if (text == "identity") return identity();
  constexpr std::string_view prefix = "truncated_power:";
  if (text.starts_with(prefix)) {
    const std::string_view digits = text.substr(prefix.size());
    unsigned k = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && k <= 127) {
      return truncated_power(k);
    }
  }
  throw FormatError("unknown activation '" + std::string(text) + "'");
}

std::uint8_t Activation::code() const {
  if (tag == ActivationTag::truncated_power) {
    if (power > 127) throw FormatError("truncated power order above 127 cannot be encoded");
    return static_cast<std::uint8_t>(0x80u | power);
  }
  return static_cast<std::uint8_t>(tag);
}

Activation Activation::from_code(std::uint8_t code) {
  if (code & 0x80u) return truncated_power(code & 0x7Fu);
  if (code > static_cast<std::uint8_t>(ActivationTag::identity) ||
      code == static_cast<std::uint8_t>(ActivationTag::truncated_power)) {
    throw FormatError("unknown activation code " + std::to_string(code));
  }
  return {static_cast<ActivationTag>(code), 0};
}

}  // namespace odenet
