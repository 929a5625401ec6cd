#pragma once

#include "odenet/activation.hpp"
#include "odenet/linalg.hpp"
#include "odenet/model.hpp"
#include "odenet/resnet.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace odenet {

struct ShallowUnit {
  Vec alpha;  // m
  Mat C;      // m x n
  Vec d;      // m
};

/// G(ξ) = Σ_l α⁽ˡ⁾ ⊙ σ(C⁽ˡ⁾ξ + d⁽ˡ⁾).
struct ShallowNet {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  Activation activation = Activation::tanh();
  std::vector<ShallowUnit> units;

  Vec eval(const Vec& xi) const;
  void validate() const;
};

/// Text format: `shallow n m L activation`, then per unit the lines α (m floats),
/// C (m·n floats, row-major) and d (m floats).
ShallowNet read_shallow(std::istream& in);
ShallowNet load_shallow(const std::string& path);
void write_shallow(std::ostream& out, const ShallowNet& net);

/// Diagnostics gathered while compiling.
struct CompileReport {
  std::vector<std::string> warnings;
  /// Largest estimated condition number among the completed matrices.
  double max_condition = 1.0;
};

/// Condition estimates above this produce a warning.
inline constexpr double kConditionWarning = 1e8;

/// Splits one unit into m units whose matrices all have rank m: unit l keeps
/// row l of C with α_l, d_l in component l (zeros elsewhere) and the other
/// rows are standard basis vectors completing c_l. When m = n the last
/// appended row is negated if needed so that sgn det C̃⁽ˡ⁾ = orientation.
/// m = 1 returns the unit unchanged. Throws RankError naming a zero row.
std::vector<ShallowUnit> expand_full_rank(const ShallowUnit& unit, int orientation = 1);

/// P with AP = C and det P > 0. For m < n, A and C are completed to square
/// matrices with positive determinant and P = Ã⁻¹C̃; for m = n, P = A⁻¹C and
/// the determinant signs of A and C must agree.
Mat factor_through_A(const Mat& a, const Mat& c, CompileReport* report = nullptr);

/// Minimum-norm q with Aq = d: q = Aᵀ(AAᵀ)⁻¹d.
Vec lift_bias(const Mat& a, const Vec& d);

/// ResNet whose output reproduces the shallow net exactly:
/// β⁽ˡ⁾ = (P⁽ˡ⁾ - P⁽ˡ⁻¹⁾)(P⁽ˡ⁻¹⁾)⁻¹, γ⁽ˡ⁾ = q⁽ˡ⁾ - q⁽ˡ⁻¹⁾ - β⁽ˡ⁾q⁽ˡ⁻¹⁾, α⁽ˡ⁾ = α̃⁽ˡ⁾,
/// with P⁽⁰⁾ = I, q⁽⁰⁾ = 0.
ResNetParams compile_resnet(const ShallowNet& net, const Mat& a, CompileReport* report = nullptr);

/// Piecewise-constant α(t), P(t), q(t) on uniform intervals [t_{l-1}, t_l).
struct PWConstantPath {
  Mat A;
  Activation activation = Activation::tanh();
  double T = 1.0;
  std::vector<double> breakpoints;  // L'+1 values, 0 .. T
  std::vector<Vec> alpha;
  std::vector<Mat> P;
  std::vector<Vec> q;

  int intervals() const { return static_cast<int>(alpha.size()); }
  /// ∫₀ᵀ α(t) ⊙ σ(A(P(t)ξ + q(t))) dt, evaluated interval by interval.
  Vec integral(const Vec& xi) const;
};

/// Piecewise-constant paths whose exact integral equals G(ξ). The shallow net
/// is read in sum form, so α(t) = (L'/T)·α̃⁽ˡ⁾ absorbs the interval length.
PWConstantPath compile_odenet_pwc(const ShallowNet& net, const Mat& a, double horizon,
                                  CompileReport* report = nullptr);

/// Euler parameters on L'·steps_per_interval steps whose affine flow visits
/// (P⁽ˡ⁾, q⁽ˡ⁾) on interval l. The result converges to the integral at O(h).
std::pair<ODENetSpec, ParamPath> pwc_to_odenet(const PWConstantPath& path,
                                               int steps_per_interval);

}  // namespace odenet
