#include "odenet/forward.hpp"

#include "odenet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace odenet {
namespace {

bool out_of_bounds(const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i)) || std::abs(v(i)) > kDivergenceBound) return true;
  }
  return false;
}

/// Column index of the first out-of-bounds entry, or -1.
Eigen::Index first_bad_column(const Mat& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const double v = m(r, c);
      if (!std::isfinite(v) || std::abs(v) > kDivergenceBound) return c;
    }
  }
  return -1;
}

void check_input(const ODENetSpec& spec, const Vec& xi) {
  if (xi.size() != spec.n()) {
    throw ShapeError("input has dimension " + std::to_string(xi.size()) + ", expected n=" +
                     std::to_string(spec.n()));
  }
  if (!xi.allFinite()) throw ShapeError("input has non-finite entries");
}

}  // namespace

Trajectory euler_forward(const ODENetSpec& spec, const ParamPath& params, const Vec& xi) {
  require_shape(spec, params, "euler_forward params");
  check_input(spec, xi);
  const int steps = spec.L();
  const double h = spec.h();
  const Activation& act = spec.activation();

  Trajectory traj;
  traj.x.reserve(static_cast<std::size_t>(steps) + 1);
  traj.y.reserve(static_cast<std::size_t>(steps) + 1);
  traj.x.push_back(xi);
  traj.y.push_back(Vec::Zero(spec.m()));
  for (int l = 0; l < steps; ++l) {
    const auto idx = static_cast<std::size_t>(l);
    const Vec& x = traj.x[idx];
    Vec x_next = x + h * (params.beta[idx] * x + params.gamma[idx]);
    Vec y_next = traj.y[idx] + h * params.alpha[idx].cwiseProduct(act.eval(Vec(spec.A() * x)));
    if (out_of_bounds(x_next) || out_of_bounds(y_next)) {
      throw DivergenceError("forward state diverged at step " + std::to_string(l + 1), l + 1);
    }
    traj.x.push_back(std::move(x_next));
    traj.y.push_back(std::move(y_next));
  }
  return traj;
}

std::vector<Trajectory> batch_forward(const ODENetSpec& spec, const ParamPath& params,
                                      const std::vector<Vec>& batch) {
  std::vector<Trajectory> out;
  out.reserve(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    try {
      out.push_back(euler_forward(spec, params, batch[k]));
    } catch (const DivergenceError& e) {
      throw DivergenceError("sample " + std::to_string(k) + ": " + e.what(), e.step());
    } catch (const ShapeError& e) {
      throw ShapeError("sample " + std::to_string(k) + ": " + e.what());
    }
  }
  return out;
}

Vec predict(const ODENetSpec& spec, const ParamPath& params, const Vec& xi) {
  return euler_forward(spec, params, xi).y.back();
}

BatchTrajectory forward_batch(const ODENetSpec& spec, const ParamPath& params,
                              const Mat& inputs) {
  require_shape(spec, params, "forward_batch params");
  if (inputs.rows() != spec.n()) {
    throw ShapeError("batch inputs have " + std::to_string(inputs.rows()) +
                     " rows, expected n=" + std::to_string(spec.n()));
  }
  const int steps = spec.L();
  const double h = spec.h();
  const Activation& act = spec.activation();
  const auto points = static_cast<std::size_t>(steps) + 1;

  BatchTrajectory traj;
  traj.x.resize(points);
  traj.z.resize(points);
  traj.x[0] = inputs;
  traj.y = Mat::Zero(spec.m(), inputs.cols());
  for (std::size_t l = 0; l < points; ++l) {
    traj.z[l].noalias() = spec.A() * traj.x[l];
    if (l + 1 == points) break;
    Mat s = traj.z[l];
    act.eval_inplace(s);
    traj.y.noalias() += h * (params.alpha[l].asDiagonal() * s);
    Mat& next = traj.x[l + 1];
    next = traj.x[l];
    next.noalias() += h * (params.beta[l] * traj.x[l]);
    next.colwise() += h * params.gamma[l];
    const Eigen::Index bad = std::max(first_bad_column(next), first_bad_column(traj.y));
    if (bad >= 0) {
      throw DivergenceError("forward state of batch column " + std::to_string(bad) +
                                " diverged at step " + std::to_string(l + 1),
                            static_cast<std::ptrdiff_t>(l) + 1);
    }
  }
  return traj;
}

Mat predict_batch(const ODENetSpec& spec, const ParamPath& params, const Mat& inputs) {
  require_shape(spec, params, "predict_batch params");
  if (inputs.rows() != spec.n()) {
    throw ShapeError("inputs have " + std::to_string(inputs.rows()) + " rows, expected n=" +
                     std::to_string(spec.n()));
  }
  constexpr Eigen::Index kChunk = 256;
  const int steps = spec.L();
  const double h = spec.h();
  const Activation& act = spec.activation();
  Mat out(spec.m(), inputs.cols());
  for (Eigen::Index start = 0; start < inputs.cols(); start += kChunk) {
    const Eigen::Index width = std::min(kChunk, inputs.cols() - start);
    Mat x = inputs.middleCols(start, width);
    Mat y = Mat::Zero(spec.m(), width);
    Mat next(x.rows(), width);
    for (int l = 0; l < steps; ++l) {
      const auto idx = static_cast<std::size_t>(l);
      Mat s = spec.A() * x;
      act.eval_inplace(s);
      y.noalias() += h * (params.alpha[idx].asDiagonal() * s);
      next = x;
      next.noalias() += h * (params.beta[idx] * x);
      next.colwise() += h * params.gamma[idx];
      x.swap(next);
      const Eigen::Index bad = std::max(first_bad_column(x), first_bad_column(y));
      if (bad >= 0) {
        throw DivergenceError("forward state of sample " + std::to_string(start + bad) +
                                  " diverged at step " + std::to_string(l + 1),
                              l + 1);
      }
    }
    out.middleCols(start, width) = y;
  }
  return out;
}

}  // namespace odenet
