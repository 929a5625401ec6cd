#include "odenet/model.hpp"

#include "odenet/errors.hpp"

#include <cmath>
#include <string>

namespace odenet {

ODENetSpec::ODENetSpec(Mat a, double horizon, int steps, Activation activation)
    : a_(std::move(a)), horizon_(horizon), steps_(steps), activation_(activation) {
  if (a_.rows() < 1 || a_.cols() < 1) throw ShapeError("ODENetSpec: A must be non-empty");
  if (a_.rows() > a_.cols()) {
    throw ShapeError("ODENetSpec: output dimension m=" + std::to_string(a_.rows()) +
                     " exceeds input dimension n=" + std::to_string(a_.cols()));
  }
  if (!a_.allFinite()) throw ShapeError("ODENetSpec: A has non-finite entries");
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
    throw ShapeError("ODENetSpec: horizon T must be positive");
  }
  if (steps_ < 1) throw ShapeError("ODENetSpec: step count L must be >= 1");
  const int rank = check_rank(a_);
  if (rank != a_.rows()) {
    throw RankError("ODENetSpec: rank(A) = " + std::to_string(rank) + " but m = " +
                    std::to_string(a_.rows()));
  }
}

bool PathValues::same_shape(const PathValues& other) const {
  if (alpha.size() != other.alpha.size() || beta.size() != other.beta.size() ||
      gamma.size() != other.gamma.size()) {
    return false;
  }
  for (std::size_t l = 0; l < alpha.size(); ++l) {
    if (alpha[l].size() != other.alpha[l].size()) return false;
  }
  for (std::size_t l = 0; l < beta.size(); ++l) {
    if (beta[l].rows() != other.beta[l].rows() || beta[l].cols() != other.beta[l].cols()) {
      return false;
    }
  }
  for (std::size_t l = 0; l < gamma.size(); ++l) {
    if (gamma[l].size() != other.gamma[l].size()) return false;
  }
  return true;
}

bool PathValues::all_finite() const {
  for (const auto& v : alpha) if (!v.allFinite()) return false;
  for (const auto& b : beta) if (!b.allFinite()) return false;
  for (const auto& v : gamma) if (!v.allFinite()) return false;
  return true;
}

std::size_t PathValues::entry_count() const {
  std::size_t total = 0;
  for (const auto& v : alpha) total += static_cast<std::size_t>(v.size());
  for (const auto& b : beta) total += static_cast<std::size_t>(b.size());
  for (const auto& v : gamma) total += static_cast<std::size_t>(v.size());
  return total;
}

double PathValues::alpha_norm() const {
  double sq = 0.0;
  for (const auto& v : alpha) sq += v.squaredNorm();
  return std::sqrt(sq);
}

double PathValues::beta_norm() const {
  double sq = 0.0;
  for (const auto& b : beta) sq += b.squaredNorm();
  return std::sqrt(sq);
}

double PathValues::gamma_norm() const {
  double sq = 0.0;
  for (const auto& v : gamma) sq += v.squaredNorm();
  return std::sqrt(sq);
}

void PathValues::add_scaled(const PathValues& other, double factor) {
  if (!same_shape(other)) throw ShapeError("parameter paths differ in shape");
  for (std::size_t l = 0; l < alpha.size(); ++l) alpha[l] += factor * other.alpha[l];
  for (std::size_t l = 0; l < beta.size(); ++l) beta[l] += factor * other.beta[l];
  for (std::size_t l = 0; l < gamma.size(); ++l) gamma[l] += factor * other.gamma[l];
}

void PathValues::scale(double factor) {
  for (auto& v : alpha) v *= factor;
  for (auto& b : beta) b *= factor;
  for (auto& v : gamma) v *= factor;
}

double PathValues::dot(const PathValues& other) const {
  if (!same_shape(other)) throw ShapeError("parameter paths differ in shape");
  double sum = 0.0;
  for (std::size_t l = 0; l < alpha.size(); ++l) sum += alpha[l].dot(other.alpha[l]);
  for (std::size_t l = 0; l < beta.size(); ++l) sum += beta[l].cwiseProduct(other.beta[l]).sum();
  for (std::size_t l = 0; l < gamma.size(); ++l) sum += gamma[l].dot(other.gamma[l]);
  return sum;
}

double& PathValues::entry(std::size_t flat) {
  for (auto& v : alpha) {
    if (flat < static_cast<std::size_t>(v.size())) return v(static_cast<Eigen::Index>(flat));
    flat -= static_cast<std::size_t>(v.size());
  }
  for (auto& b : beta) {
    if (flat < static_cast<std::size_t>(b.size())) {
      const auto idx = static_cast<Eigen::Index>(flat);
      return b(idx / b.cols(), idx % b.cols());
    }
    flat -= static_cast<std::size_t>(b.size());
  }
  for (auto& v : gamma) {
    if (flat < static_cast<std::size_t>(v.size())) return v(static_cast<Eigen::Index>(flat));
    flat -= static_cast<std::size_t>(v.size());
  }
  throw std::out_of_range("PathValues::entry: index past the end");
}

double PathValues::entry(std::size_t flat) const {
  return const_cast<PathValues*>(this)->entry(flat);
}

ParamPath ParamPath::constant(Eigen::Index n, Eigen::Index m, int steps, double value) {
  ParamPath p;
  const auto points = static_cast<std::size_t>(steps) + 1;
  p.alpha.assign(points, Vec::Constant(m, value));
  p.beta.assign(points, Mat::Constant(n, n, value));
  p.gamma.assign(points, Vec::Constant(n, value));
  return p;
}

Gradients Gradients::zeros(Eigen::Index n, Eigen::Index m, int steps) {
  Gradients g;
  const auto points = static_cast<std::size_t>(steps) + 1;
  g.alpha.assign(points, Vec::Zero(m));
  g.beta.assign(points, Mat::Zero(n, n));
  g.gamma.assign(points, Vec::Zero(n));
  return g;
}

void require_shape(const ODENetSpec& spec, const PathValues& values, std::string_view what) {
  const auto points = static_cast<std::size_t>(spec.L()) + 1;
  const bool lengths_ok = values.alpha.size() == points && values.beta.size() == points &&
                          values.gamma.size() == points;
  bool dims_ok = lengths_ok;
  for (std::size_t l = 0; dims_ok && l < points; ++l) {
    dims_ok = values.alpha[l].size() == spec.m() && values.beta[l].rows() == spec.n() &&
              values.beta[l].cols() == spec.n() && values.gamma[l].size() == spec.n();
  }
  if (!dims_ok) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(points) +
                     " grid points with m=" + std::to_string(spec.m()) +
                     ", n=" + std::to_string(spec.n()));
  }
}

ParamPath initial_params(const ODENetSpec& spec, std::string_view preset) {
  if (preset == "zeros") return ParamPath::zeros(spec.n(), spec.m(), spec.L());
  if (preset == "eps") return ParamPath::constant(spec.n(), spec.m(), spec.L(), 1e-8);
  throw FormatError("unknown init preset '" + std::string(preset) + "' (expected zeros|eps)");
}

}  // namespace odenet
