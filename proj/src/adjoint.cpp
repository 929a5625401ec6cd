#include "odenet/adjoint.hpp"

#include "odenet/errors.hpp"

#include <cmath>
#include <string>

namespace odenet {
namespace {

void require_finite(const Vec& v, int step, const char* what) {
  if (!v.allFinite() || v.cwiseAbs().maxCoeff() > kDivergenceBound) {
    throw DivergenceError(std::string(what) + " diverged at step " + std::to_string(step), step);
  }
}

void require_finite(const Mat& m, int step, const char* what) {
  if (m.size() == 0) return;
  if (!m.allFinite() || m.cwiseAbs().maxCoeff() > kDivergenceBound) {
    throw DivergenceError(std::string(what) + " diverged at step " + std::to_string(step), step);
  }
}

void check_trajectory(const ODENetSpec& spec, const Trajectory& traj) {
  const auto points = static_cast<std::size_t>(spec.L()) + 1;
  if (traj.x.size() != points || traj.y.size() != points) {
    throw ShapeError("trajectory has " + std::to_string(traj.x.size()) +
                     " states, expected " + std::to_string(points));
  }
  for (const Vec& x : traj.x) {
    if (x.size() != spec.n()) throw ShapeError("trajectory state has wrong dimension");
  }
}

Mat checked_jacobian(const std::function<Mat(double, const Vec&, const Vec&)>& jac, double t,
                     const Vec& x, const Vec& w, Eigen::Index rows, Eigen::Index cols,
                     const char* what) {
  Mat j = jac(t, x, w);
  if (j.rows() != rows || j.cols() != cols) {
    throw ShapeError(std::string(what) + " callback returned " + std::to_string(j.rows()) +
                     "x" + std::to_string(j.cols()) + ", expected " + std::to_string(rows) +
                     "x" + std::to_string(cols));
  }
  return j;
}

std::vector<Vec> general_states(const GeneralODEProblem& problem, const Vec& xi,
                                double horizon, int steps) {
  if (steps < 1 || !(horizon > 0.0)) throw ShapeError("general problem: need T > 0, L >= 1");
  if (problem.omega.size() != static_cast<std::size_t>(steps) + 1) {
    throw ShapeError("general problem: omega has " + std::to_string(problem.omega.size()) +
                     " entries, expected L+1 = " + std::to_string(steps + 1));
  }
  if (problem.Q.rows() != problem.state_dim || problem.Q.cols() != xi.size()) {
    throw ShapeError("general problem: Q must be N x n");
  }
  if (problem.P.cols() != problem.state_dim) throw ShapeError("general problem: P must be m x N");
  const double h = horizon / steps;
  std::vector<Vec> x;
  x.reserve(static_cast<std::size_t>(steps) + 1);
  x.push_back(problem.Q * xi);
  for (int l = 0; l < steps; ++l) {
    const auto idx = static_cast<std::size_t>(l);
    if (problem.omega[idx].size() != problem.param_dim) {
      throw ShapeError("general problem: omega[" + std::to_string(l) + "] has wrong dimension");
    }
    Vec rhs = problem.f(l * h, x[idx], problem.omega[idx]);
    if (rhs.size() != problem.state_dim) {
      throw ShapeError("general problem: f returned dimension " + std::to_string(rhs.size()) +
                       ", expected N=" + std::to_string(problem.state_dim));
    }
    Vec next = x[idx] + h * rhs;
    require_finite(next, l + 1, "general forward state");
    x.push_back(std::move(next));
  }
  return x;
}

}  // namespace

AdjointPath adjoint_backward(const ODENetSpec& spec, const ParamPath& params,
                             const Trajectory& traj, const Vec& residual, int batch_size,
                             AdjointScheme scheme) {
  require_shape(spec, params, "adjoint_backward params");
  check_trajectory(spec, traj);
  if (residual.size() != spec.m()) throw ShapeError("residual must have dimension m");
  if (batch_size < 1) throw ShapeError("batch_size must be positive");

  const int steps = spec.L();
  const double h = spec.h();
  const double source_scale = h / batch_size;
  const Activation& act = spec.activation();

  AdjointPath path;
  path.lambda.assign(static_cast<std::size_t>(steps) + 1, Vec::Zero(spec.n()));
  for (int l = steps; l >= 1; --l) {
    const auto idx = static_cast<std::size_t>(l);
    const Vec& lambda = path.lambda[idx];
    Vec prev = lambda + h * (params.beta[idx].transpose() * lambda);
    if (!(scheme == AdjointScheme::exact && l == steps)) {
      const Vec sigma_prime = act.deriv(Vec(spec.A() * traj.x[idx]));
      prev += source_scale *
              (spec.A().transpose() *
               residual.cwiseProduct(params.alpha[idx]).cwiseProduct(sigma_prime));
    }
    require_finite(prev, l - 1, "adjoint");
    path.lambda[idx - 1] = std::move(prev);
  }
  return path;
}

Gradients assemble_gradients(const ODENetSpec& spec, const ParamPath& params,
                             const std::vector<Trajectory>& trajs,
                             const std::vector<AdjointPath>& adjoints,
                             const std::vector<Vec>& residuals, int batch_size,
                             AdjointScheme scheme) {
  require_shape(spec, params, "assemble_gradients params");
  if (trajs.size() != adjoints.size() || trajs.size() != residuals.size() ||
      trajs.size() != static_cast<std::size_t>(batch_size)) {
    throw ShapeError("assemble_gradients: " + std::to_string(trajs.size()) + " trajectories, " +
                     std::to_string(adjoints.size()) + " adjoints, " +
                     std::to_string(residuals.size()) + " residuals for batch_size " +
                     std::to_string(batch_size));
  }
  const int steps = spec.L();
  const Activation& act = spec.activation();
  Gradients g = Gradients::zeros(spec.n(), spec.m(), steps);
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    check_trajectory(spec, trajs[k]);
    if (adjoints[k].lambda.size() != static_cast<std::size_t>(steps) + 1) {
      throw ShapeError("adjoint path has wrong length");
    }
    if (residuals[k].size() != spec.m()) throw ShapeError("residual must have dimension m");
    for (int l = 0; l <= steps; ++l) {
      const auto idx = static_cast<std::size_t>(l);
      const Vec& x = trajs[k].x[idx];
      const Vec& lambda = adjoints[k].lambda[idx];
      if (!(scheme == AdjointScheme::exact && l == steps)) {
        g.alpha[idx] += residuals[k].cwiseProduct(act.eval(Vec(spec.A() * x))) / batch_size;
      }
      g.beta[idx] += lambda * x.transpose();
      g.gamma[idx] += lambda;
    }
  }
  return g;
}

double minibatch_loss(const std::vector<Vec>& predictions, const std::vector<Vec>& targets) {
  if (predictions.empty()) throw ShapeError("minibatch_loss: empty batch");
  if (predictions.size() != targets.size()) {
    throw ShapeError("minibatch_loss: " + std::to_string(predictions.size()) +
                     " predictions vs " + std::to_string(targets.size()) + " targets");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    if (predictions[k].size() != targets[k].size()) {
      throw ShapeError("minibatch_loss: dimension mismatch at sample " + std::to_string(k));
    }
    sum += (predictions[k] - targets[k]).squaredNorm();
  }
  return sum / (2.0 * static_cast<double>(predictions.size()));
}

double minibatch_loss(const Mat& predictions, const Mat& targets) {
  if (predictions.cols() == 0) throw ShapeError("minibatch_loss: empty batch");
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols()) {
    throw ShapeError("minibatch_loss: prediction/target shape mismatch");
  }
  double sum = 0.0;
  for (Eigen::Index k = 0; k < predictions.cols(); ++k) {
    sum += (predictions.col(k) - targets.col(k)).squaredNorm();
  }
  return sum / (2.0 * static_cast<double>(predictions.cols()));
}

MinibatchResult minibatch_gradient(const ODENetSpec& spec, const ParamPath& params,
                                   const Mat& inputs, const Mat& targets,
                                   AdjointScheme scheme) {
  if (inputs.cols() == 0) throw ShapeError("minibatch_gradient: empty batch");
  if (targets.rows() != spec.m() || targets.cols() != inputs.cols()) {
    throw ShapeError("minibatch_gradient: targets must be m x B");
  }
  const BatchTrajectory traj = forward_batch(spec, params, inputs);
  const int steps = spec.L();
  const double h = spec.h();
  const auto batch = static_cast<double>(inputs.cols());
  const Activation& act = spec.activation();

  MinibatchResult out;
  out.grads = Gradients::zeros(spec.n(), spec.m(), steps);
  const Mat residual = traj.y - targets;
  out.loss = minibatch_loss(traj.y, targets);

  Mat lambda = Mat::Zero(spec.n(), inputs.cols());
  Mat prev(spec.n(), inputs.cols());
  for (int l = steps; l >= 0; --l) {
    const auto idx = static_cast<std::size_t>(l);
    const bool terminal_skipped = scheme == AdjointScheme::exact && l == steps;
    if (!terminal_skipped) {
      Mat s = traj.z[idx];
      act.eval_inplace(s);
      out.grads.alpha[idx] = residual.cwiseProduct(s).rowwise().sum() / batch;
    }
    if (l < steps) {
      out.grads.beta[idx].noalias() = lambda * traj.x[idx].transpose();
      out.grads.gamma[idx] = lambda.rowwise().sum();
    }
    if (l == 0) break;
    // λ_{l-1} from λ_l
    prev = lambda;
    if (l < steps) prev.noalias() += h * (params.beta[idx].transpose() * lambda);
    if (!terminal_skipped) {
      Mat d = traj.z[idx];
      act.deriv_inplace(d);
      Mat weighted = residual.cwiseProduct(d);
      weighted = params.alpha[idx].asDiagonal() * weighted;
      prev.noalias() += (h / batch) * (spec.A().transpose() * weighted);
    }
    require_finite(prev, l - 1, "adjoint");
    lambda.swap(prev);
  }
  return out;
}

std::vector<Vec> general_adjoint_gradient(const GeneralODEProblem& problem, const Vec& xi,
                                          const Vec& target, double horizon, int steps,
                                          AdjointScheme scheme) {
  const std::vector<Vec> x = general_states(problem, xi, horizon, steps);
  if (target.size() != problem.P.rows()) throw ShapeError("general problem: target must be m");
  const double h = horizon / steps;
  const Eigen::Index big_n = problem.state_dim;
  const Eigen::Index r = problem.param_dim;

  std::vector<Vec> lambda(static_cast<std::size_t>(steps) + 1);
  lambda.back() = problem.P.transpose() * (problem.P * x.back() - target);
  for (int l = steps; l >= 1; --l) {
    const auto idx = static_cast<std::size_t>(l);
    if (scheme == AdjointScheme::exact && l == steps) {
      lambda[idx - 1] = lambda[idx];
      continue;
    }
    const Mat jx =
        checked_jacobian(problem.jac_x, l * h, x[idx], problem.omega[idx], big_n, big_n, "jac_x");
    lambda[idx - 1] = lambda[idx] + h * (jx.transpose() * lambda[idx]);
    require_finite(lambda[idx - 1], l - 1, "general adjoint");
  }

  std::vector<Vec> grads(static_cast<std::size_t>(steps) + 1);
  for (int l = 0; l <= steps; ++l) {
    const auto idx = static_cast<std::size_t>(l);
    if (scheme == AdjointScheme::exact && l == steps) {
      grads[idx] = Vec::Zero(r);
      continue;
    }
    const Mat jw =
        checked_jacobian(problem.jac_omega, l * h, x[idx], problem.omega[idx], big_n, r,
                         "jac_omega");
    grads[idx] = jw.transpose() * lambda[idx];
  }
  return grads;
}

Vec general_forward_output(const GeneralODEProblem& problem, const Vec& xi, double horizon,
                           int steps) {
  return problem.P * general_states(problem, xi, horizon, steps).back();
}

}  // namespace odenet
