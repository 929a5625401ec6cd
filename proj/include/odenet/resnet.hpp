#pragma once

#include "odenet/activation.hpp"
#include "odenet/linalg.hpp"

#include <functional>
#include <vector>

namespace odenet {

/// Layers are paper-indexed 1..L; storage index l-1 holds layer l.
struct ResNetParams {
  Mat A;  // m x n
  Activation activation = Activation::tanh();
  std::vector<Vec> alpha;  // m each
  std::vector<Mat> beta;   // n x n each
  std::vector<Vec> gamma;  // n each

  int L() const { return static_cast<int>(alpha.size()); }
  Eigen::Index n() const { return A.cols(); }
  Eigen::Index m() const { return A.rows(); }

  static ResNetParams zeros(Mat a, Activation activation, int depth);
  /// Throws ShapeError on inconsistent lengths or dimensions, or non-finite entries.
  void validate() const;
};

struct ResNetTrajectory {
  std::vector<Vec> x;  // x⁽⁰⁾..x⁽ᴸ⁾
  std::vector<Vec> y;  // y⁽⁰⁾..y⁽ᴸ⁾
};

/// x⁽ˡ⁾ = x⁽ˡ⁻¹⁾ + β⁽ˡ⁾x⁽ˡ⁻¹⁾ + γ⁽ˡ⁾, y⁽ˡ⁾ = y⁽ˡ⁻¹⁾ + α⁽ˡ⁾ ⊙ σ(A x⁽ˡ⁾):
/// σ sees the post-update state.
ResNetTrajectory resnet_forward(const ResNetParams& params, const Vec& xi);
Vec resnet_predict(const ResNetParams& params, const Vec& xi);

/// x⁽ˡ⁺¹⁾ = x⁽ˡ⁾ + f⁽ˡ⁾(x⁽ˡ⁾, ω⁽ˡ⁾), l = 0..L-1, x⁽⁰⁾ = Qξ, output P x⁽ᴸ⁾.
struct GeneralResNetProblem {
  Eigen::Index state_dim = 0;  // N
  std::function<Vec(int, const Vec&, const Vec&)> f;
  std::function<Mat(int, const Vec&, const Vec&)> jac_x;      // N x N
  std::function<Mat(int, const Vec&, const Vec&)> jac_omega;  // N x r_l
  Mat P;  // m x N
  Mat Q;  // N x n
  std::vector<Vec> omega;  // one per layer

  int L() const { return static_cast<int>(omega.size()); }
};

/// States x⁽⁰⁾..x⁽ᴸ⁾ of a general problem.
std::vector<Vec> general_resnet_states(const GeneralResNetProblem& problem, const Vec& xi);

/// One sample's share of ∇_ω e_μ: λ⁽ᴸ⁾ = (1/B) Pᵀ(P x⁽ᴸ⁾ - F),
/// λ⁽ˡ⁾ = λ⁽ˡ⁺¹⁾ + ∇ₓf⁽ˡ⁾ᵀ λ⁽ˡ⁺¹⁾, gradient_l = ∇_ωf⁽ˡ⁾ᵀ λ⁽ˡ⁺¹⁾.
std::vector<Vec> resnet_backprop(const GeneralResNetProblem& problem, const Vec& xi,
                                 const Vec& target, int batch_size);

/// Sum of resnet_backprop over the batch (sample order), i.e. ∇_ω e_μ.
std::vector<Vec> resnet_backprop_batch(const GeneralResNetProblem& problem,
                                       const std::vector<Vec>& inputs,
                                       const std::vector<Vec>& targets);

/// e_μ = (1 / 2B) Σ_k |P x⁽ᴸ'ᵏ⁾ - F(ξᵏ)|².
double general_resnet_loss(const GeneralResNetProblem& problem, const std::vector<Vec>& inputs,
                           const std::vector<Vec>& targets);

/// ω⁽ˡ⁾ = (α⁽ˡ⁾, β⁽ˡ⁾ row-major, γ⁽ˡ⁾) for every layer.
std::vector<Vec> pack_resnet_omega(const ResNetParams& params);
void unpack_resnet_omega(const std::vector<Vec>& omega, ResNetParams& params);

/// The paper's ResNet as a general problem on the stacked state (x, y):
/// f⁽ˡ⁾ = (βx + γ, α ⊙ σ(A(x + βx + γ))), Q = [I; 0], P = [0 I].
GeneralResNetProblem paper_resnet_problem(const ResNetParams& params);

}  // namespace odenet
