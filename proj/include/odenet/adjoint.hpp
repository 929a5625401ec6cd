#pragma once

#include "odenet/forward.hpp"
#include "odenet/model.hpp"

#include <functional>
#include <vector>

namespace odenet {

/// How the backward recursion treats the terminal grid point l = L.
///
/// `euler` is the explicit-Euler discretisation of the adjoint ODE exactly as
/// written for the learning algorithm: the first backward step (l = L) uses
/// α_L, β_L and x_L, and G[α]_L is nonzero. Those terminal parameters never
/// influence y_L, so the result differs from the true gradient of the
/// discrete loss by O(h).
///
/// `exact` skips the l = L source term and zeroes the l = L gradients; the
/// result, multiplied by h, is the exact gradient of the discretised loss with
/// respect to the parameter arrays (the transpose of the forward recursion).
enum class AdjointScheme { euler, exact };

struct AdjointPath {
  std::vector<Vec> lambda;  // L+1 entries, n each
};

/// λ_L = 0; λ_{l-1} = λ_l + h β_lᵀ λ_l + (h / batch_size) Aᵀ(r ⊙ α_l ⊙ σ'(A x_l)),
/// l = L..1, with the l = L source dropped under AdjointScheme::exact.
AdjointPath adjoint_backward(const ODENetSpec& spec, const ParamPath& params,
                             const Trajectory& traj, const Vec& residual, int batch_size,
                             AdjointScheme scheme = AdjointScheme::euler);

/// G[α]_l = (1/B) Σ_k r_k ⊙ σ(A x_l^k), G[β]_l = Σ_k λ_l^k (x_l^k)ᵀ, G[γ]_l = Σ_k λ_l^k.
/// Samples are reduced in index order. Under AdjointScheme::exact, G[α]_L = 0.
Gradients assemble_gradients(const ODENetSpec& spec, const ParamPath& params,
                             const std::vector<Trajectory>& trajs,
                             const std::vector<AdjointPath>& adjoints,
                             const std::vector<Vec>& residuals, int batch_size,
                             AdjointScheme scheme = AdjointScheme::euler);

/// Halved mean squared error (1 / (2B)) Σ |pred - target|².
double minibatch_loss(const std::vector<Vec>& predictions, const std::vector<Vec>& targets);
/// Same, for column-per-sample matrices.
double minibatch_loss(const Mat& predictions, const Mat& targets);

struct MinibatchResult {
  Gradients grads;
  double loss = 0.0;  // halved loss at the parameters before the step
};

/// Forward, adjoint and gradient assembly for one minibatch, columns = samples.
/// Numerically equivalent to the per-sample path (differs only in roundoff).
MinibatchResult minibatch_gradient(const ODENetSpec& spec, const ParamPath& params,
                                   const Mat& inputs, const Mat& targets,
                                   AdjointScheme scheme = AdjointScheme::exact);

/// x' = f(t, x, ω), x(0) = Qξ, output P x(T), loss ½|P x(T) - F(ξ)|².
struct GeneralODEProblem {
  Eigen::Index state_dim = 0;  // N
  Eigen::Index param_dim = 0;  // r
  std::function<Vec(double, const Vec&, const Vec&)> f;
  std::function<Mat(double, const Vec&, const Vec&)> jac_x;      // ∂f/∂x, N x N
  std::function<Mat(double, const Vec&, const Vec&)> jac_omega;  // ∂f/∂ω, N x r
  Mat P;                    // m x N
  Mat Q;                    // N x n
  std::vector<Vec> omega;   // L+1 parameter vectors
};

/// Euler forward from x_0 = Qξ, then λ_L = Pᵀ(P x_L - target),
/// λ_{l-1} = λ_l + h ∇ₓf(t_l, x_l, ω_l)ᵀ λ_l, and g_l = ∇_ωf(t_l, x_l, ω_l)ᵀ λ_l.
/// Under AdjointScheme::exact the l = L step is an identity and g_L = 0.
std::vector<Vec> general_adjoint_gradient(const GeneralODEProblem& problem, const Vec& xi,
                                          const Vec& target, double horizon, int steps,
                                          AdjointScheme scheme = AdjointScheme::euler);

/// Forward Euler output P x_L of a general problem.
Vec general_forward_output(const GeneralODEProblem& problem, const Vec& xi, double horizon,
                           int steps);

}  // namespace odenet
