#pragma once

#include "odenet/model.hpp"

#include <vector>

namespace odenet {

/// Forward states of one sample on the Euler grid, l = 0..L.
struct Trajectory {
  std::vector<Vec> x;  // n each; x[0] = ξ
  std::vector<Vec> y;  // m each; y[0] = 0
};

/// States larger than this in magnitude abort the integration.
inline constexpr double kDivergenceBound = 1e100;

/// x_{l+1} = x_l + h(β_l x_l + γ_l), y_{l+1} = y_l + h α_l ⊙ σ(A x_l), l = 0..L-1.
/// The y-update evaluates σ at the left endpoint state x_l.
Trajectory euler_forward(const ODENetSpec& spec, const ParamPath& params, const Vec& xi);

/// euler_forward per sample, in input order.
std::vector<Trajectory> batch_forward(const ODENetSpec& spec, const ParamPath& params,
                                      const std::vector<Vec>& batch);

/// y_L for one input.
Vec predict(const ODENetSpec& spec, const ParamPath& params, const Vec& xi);

/// Column-batched forward pass: every sample is a column.
struct BatchTrajectory {
  std::vector<Mat> x;  // L+1 matrices, n x B
  std::vector<Mat> z;  // L+1 matrices, A x_l (m x B)
  Mat y;               // y_L, m x B
};

BatchTrajectory forward_batch(const ODENetSpec& spec, const ParamPath& params,
                              const Mat& inputs);

/// y_L for every column of `inputs` (n x K), processed in fixed-size column
/// chunks so the result does not depend on K.
Mat predict_batch(const ODENetSpec& spec, const ParamPath& params, const Mat& inputs);

}  // namespace odenet
