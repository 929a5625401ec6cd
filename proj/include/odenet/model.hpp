#pragma once

#include "odenet/activation.hpp"
#include "odenet/linalg.hpp"

#include <cstddef>
#include <string_view>
#include <vector>

namespace odenet {

/// Static ODENet architecture: x' = βx + γ, y' = α ⊙ σ(Ax) on [0, T],
/// discretised with L explicit Euler steps of size h = T / L.
class ODENetSpec {
 public:
  /// Validates m <= n, rank(A) = m (tolerance kRankTolerance·||A||_F), T > 0, L >= 1.
  ODENetSpec(Mat a, double horizon, int steps, Activation activation);

  Eigen::Index n() const { return a_.cols(); }
  Eigen::Index m() const { return a_.rows(); }
  const Mat& A() const { return a_; }
  double T() const { return horizon_; }
  int L() const { return steps_; }
  double h() const { return horizon_ / steps_; }
  const Activation& activation() const { return activation_; }

 private:
  Mat a_;
  double horizon_;
  int steps_;
  Activation activation_;
};

/// Per-grid-point parameter families sampled at t_l = l·h, l = 0..L. Shared
/// storage for design parameters and their gradients.
struct PathValues {
  std::vector<Vec> alpha;  // m each
  std::vector<Mat> beta;   // n x n each
  std::vector<Vec> gamma;  // n each

  std::size_t points() const { return alpha.size(); }
  bool same_shape(const PathValues& other) const;
  bool all_finite() const;
  /// Total number of scalar entries across all three families.
  std::size_t entry_count() const;

  /// Frobenius norms over the concatenation of all grid points, per family.
  double alpha_norm() const;
  double beta_norm() const;
  double gamma_norm() const;

  /// this += scale * other (same shape required).
  void add_scaled(const PathValues& other, double scale);
  void scale(double factor);
  /// Sum of entrywise products.
  double dot(const PathValues& other) const;

  /// Flat access used by finite differencing: entries are ordered family
  /// (α, β, γ), then grid point, then row-major within the family.
  double& entry(std::size_t flat);
  double entry(std::size_t flat) const;
};

struct ParamPath : PathValues {
  static ParamPath constant(Eigen::Index n, Eigen::Index m, int steps, double value);
  static ParamPath zeros(Eigen::Index n, Eigen::Index m, int steps) {
    return constant(n, m, steps, 0.0);
  }
};

struct Gradients : PathValues {
  static Gradients zeros(Eigen::Index n, Eigen::Index m, int steps);
};

/// Throws ShapeError unless `values` has L+1 points of the spec's dimensions.
void require_shape(const ODENetSpec& spec, const PathValues& values, std::string_view what);

/// Initial parameter presets: "zeros" or "eps" (every entry 1e-8).
ParamPath initial_params(const ODENetSpec& spec, std::string_view preset);

}  // namespace odenet
