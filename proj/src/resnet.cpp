#include "odenet/resnet.hpp"

#include "odenet/errors.hpp"
#include "odenet/forward.hpp"

#include <cmath>
#include <string>

namespace odenet {
namespace {

void guard(const Vec& v, int layer, const char* what) {
  if (!v.allFinite() || (v.size() > 0 && v.cwiseAbs().maxCoeff() > kDivergenceBound)) {
    throw DivergenceError(std::string(what) + " diverged at layer " + std::to_string(layer),
                          layer);
  }
}

Mat checked(const Mat& j, Eigen::Index rows, Eigen::Index cols, int layer, const char* what) {
  if (j.rows() != rows || j.cols() != cols) {
    throw ShapeError(std::string(what) + " at layer " + std::to_string(layer) + " returned " +
                     std::to_string(j.rows()) + "x" + std::to_string(j.cols()) + ", expected " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
  return j;
}

Eigen::Index omega_size(Eigen::Index n, Eigen::Index m) { return m + n * n + n; }

}  // namespace

ResNetParams ResNetParams::zeros(Mat a, Activation activation, int depth) {
  if (depth < 0) throw ShapeError("ResNet depth must be non-negative");
  ResNetParams p;
  p.A = std::move(a);
  p.activation = activation;
  const auto count = static_cast<std::size_t>(depth);
  p.alpha.assign(count, Vec::Zero(p.m()));
  p.beta.assign(count, Mat::Zero(p.n(), p.n()));
  p.gamma.assign(count, Vec::Zero(p.n()));
  return p;
}

void ResNetParams::validate() const {
  if (A.rows() < 1 || A.cols() < 1) throw ShapeError("ResNet: A must be non-empty");
  if (beta.size() != alpha.size() || gamma.size() != alpha.size()) {
    throw ShapeError("ResNet: alpha/beta/gamma have different layer counts");
  }
  if (!A.allFinite()) throw ShapeError("ResNet: A has non-finite entries");
  for (std::size_t l = 0; l < alpha.size(); ++l) {
    if (alpha[l].size() != m() || beta[l].rows() != n() || beta[l].cols() != n() ||
        gamma[l].size() != n()) {
      throw ShapeError("ResNet: layer " + std::to_string(l + 1) + " has wrong dimensions");
    }
    if (!alpha[l].allFinite() || !beta[l].allFinite() || !gamma[l].allFinite()) {
      throw ShapeError("ResNet: layer " + std::to_string(l + 1) + " has non-finite entries");
    }
  }
}

ResNetTrajectory resnet_forward(const ResNetParams& params, const Vec& xi) {
  params.validate();
  if (xi.size() != params.n()) {
    throw ShapeError("resnet_forward: input has dimension " + std::to_string(xi.size()) +
                     ", expected n=" + std::to_string(params.n()));
  }
  ResNetTrajectory t;
  t.x.push_back(xi);
  t.y.push_back(Vec::Zero(params.m()));
  for (int l = 1; l <= params.L(); ++l) {
    const auto s = static_cast<std::size_t>(l - 1);
    const Vec& prev = t.x.back();
    Vec x = prev + params.beta[s] * prev + params.gamma[s];
    Vec y = t.y.back() + params.alpha[s].cwiseProduct(params.activation.eval(Vec(params.A * x)));
    guard(x, l, "resnet state");
    guard(y, l, "resnet output");
    t.x.push_back(std::move(x));
    t.y.push_back(std::move(y));
  }
  return t;
}

Vec resnet_predict(const ResNetParams& params, const Vec& xi) {
  return resnet_forward(params, xi).y.back();
}

std::vector<Vec> general_resnet_states(const GeneralResNetProblem& problem, const Vec& xi) {
  const Eigen::Index big_n = problem.state_dim;
  if (problem.Q.rows() != big_n || problem.Q.cols() != xi.size()) {
    throw ShapeError("general resnet: Q must be N x n");
  }
  if (problem.P.cols() != big_n) throw ShapeError("general resnet: P must be m x N");
  std::vector<Vec> x;
  x.reserve(problem.omega.size() + 1);
  x.push_back(problem.Q * xi);
  for (int l = 0; l < problem.L(); ++l) {
    const Vec& cur = x.back();
    Vec step = problem.f(l, cur, problem.omega[static_cast<std::size_t>(l)]);
    if (step.size() != big_n) {
      throw ShapeError("general resnet: f at layer " + std::to_string(l) +
                       " returned dimension " + std::to_string(step.size()));
    }
    Vec next = cur + step;
    guard(next, l + 1, "general resnet state");
    x.push_back(std::move(next));
  }
  return x;
}

std::vector<Vec> resnet_backprop(const GeneralResNetProblem& problem, const Vec& xi,
                                 const Vec& target, int batch_size) {
  if (batch_size < 1) throw ShapeError("resnet_backprop: batch_size must be positive");
  const std::vector<Vec> x = general_resnet_states(problem, xi);
  if (target.size() != problem.P.rows()) throw ShapeError("resnet_backprop: target must be m");
  const Eigen::Index big_n = problem.state_dim;

  Vec lambda = problem.P.transpose() * (problem.P * x.back() - target) / batch_size;
  std::vector<Vec> grads(problem.omega.size());
  for (int l = problem.L() - 1; l >= 0; --l) {
    const auto idx = static_cast<std::size_t>(l);
    const Vec& w = problem.omega[idx];
    const Mat jw = checked(problem.jac_omega(l, x[idx], w), big_n, w.size(), l, "jac_omega");
    grads[idx] = jw.transpose() * lambda;
    const Mat jx = checked(problem.jac_x(l, x[idx], w), big_n, big_n, l, "jac_x");
    Vec next = lambda + jx.transpose() * lambda;
    guard(next, l, "resnet adjoint");
    lambda = std::move(next);
  }
  return grads;
}

std::vector<Vec> resnet_backprop_batch(const GeneralResNetProblem& problem,
                                       const std::vector<Vec>& inputs,
                                       const std::vector<Vec>& targets) {
  if (inputs.empty() || inputs.size() != targets.size()) {
    throw ShapeError("resnet_backprop_batch: need equally many (>= 1) inputs and targets");
  }
  const int batch = static_cast<int>(inputs.size());
  std::vector<Vec> total;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    std::vector<Vec> g = resnet_backprop(problem, inputs[k], targets[k], batch);
    if (k == 0) {
      total = std::move(g);
    } else {
      for (std::size_t l = 0; l < g.size(); ++l) total[l] += g[l];
    }
  }
  return total;
}

double general_resnet_loss(const GeneralResNetProblem& problem, const std::vector<Vec>& inputs,
                           const std::vector<Vec>& targets) {
  if (inputs.empty() || inputs.size() != targets.size()) {
    throw ShapeError("general_resnet_loss: need equally many (>= 1) inputs and targets");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Vec out = problem.P * general_resnet_states(problem, inputs[k]).back();
    sum += (out - targets[k]).squaredNorm();
  }
  return sum / (2.0 * static_cast<double>(inputs.size()));
}

std::vector<Vec> pack_resnet_omega(const ResNetParams& params) {
  params.validate();
  const Eigen::Index n = params.n();
  const Eigen::Index m = params.m();
  std::vector<Vec> omega;
  for (int l = 0; l < params.L(); ++l) {
    const auto s = static_cast<std::size_t>(l);
    Vec w(omega_size(n, m));
    w.head(m) = params.alpha[s];
    for (Eigen::Index i = 0; i < n; ++i) w.segment(m + i * n, n) = params.beta[s].row(i).transpose();
    w.tail(n) = params.gamma[s];
    omega.push_back(std::move(w));
  }
  return omega;
}

void unpack_resnet_omega(const std::vector<Vec>& omega, ResNetParams& params) {
  const Eigen::Index n = params.n();
  const Eigen::Index m = params.m();
  if (omega.size() != params.alpha.size()) throw ShapeError("unpack: layer count mismatch");
  for (std::size_t s = 0; s < omega.size(); ++s) {
    if (omega[s].size() != omega_size(n, m)) throw ShapeError("unpack: wrong omega size");
    params.alpha[s] = omega[s].head(m);
    for (Eigen::Index i = 0; i < n; ++i) {
      params.beta[s].row(i) = omega[s].segment(m + i * n, n).transpose();
    }
    params.gamma[s] = omega[s].tail(n);
  }
}

GeneralResNetProblem paper_resnet_problem(const ResNetParams& params) {
  params.validate();
  const Eigen::Index n = params.n();
  const Eigen::Index m = params.m();
  const Mat a = params.A;
  const Activation act = params.activation;

  GeneralResNetProblem p;
  p.state_dim = n + m;
  p.Q = Mat::Zero(n + m, n);
  p.Q.topRows(n).setIdentity();
  p.P = Mat::Zero(m, n + m);
  p.P.rightCols(m).setIdentity();
  p.omega = pack_resnet_omega(params);

  struct Unpacked {
    Vec alpha;
    Mat beta;
    Vec gamma;
  };
  auto unpack = [n, m](const Vec& w) {
    Unpacked u{w.head(m), Mat(n, n), w.tail(n)};
    for (Eigen::Index i = 0; i < n; ++i) u.beta.row(i) = w.segment(m + i * n, n).transpose();
    return u;
  };

  p.f = [=](int, const Vec& state, const Vec& w) {
    const Unpacked u = unpack(w);
    const Vec x = state.head(n);
    const Vec dx = u.beta * x + u.gamma;
    Vec out(n + m);
    out.head(n) = dx;
    out.tail(m) = u.alpha.cwiseProduct(act.eval(Vec(a * (x + dx))));
    return out;
  };
  p.jac_x = [=](int, const Vec& state, const Vec& w) {
    const Unpacked u = unpack(w);
    const Vec x = state.head(n);
    const Vec z = a * (x + u.beta * x + u.gamma);
    const Vec ad = u.alpha.cwiseProduct(act.deriv(z));
    Mat j = Mat::Zero(n + m, n + m);
    j.topLeftCorner(n, n) = u.beta;
    j.bottomLeftCorner(m, n) = ad.asDiagonal() * (a + a * u.beta);
    return j;
  };
  p.jac_omega = [=](int, const Vec& state, const Vec& w) {
    const Unpacked u = unpack(w);
    const Vec x = state.head(n);
    const Vec z = a * (x + u.beta * x + u.gamma);
    const Vec s = act.eval(z);
    const Vec ad = u.alpha.cwiseProduct(act.deriv(z));
    const Mat ad_a = ad.asDiagonal() * a;
    Mat j = Mat::Zero(n + m, omega_size(n, m));
    j.bottomLeftCorner(m, m) = s.asDiagonal();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < n; ++c) {
        const Eigen::Index col = m + i * n + c;
        j(i, col) = x(c);
        j.block(n, col, m, 1) = ad_a.col(i) * x(c);
      }
    }
    j.block(0, m + n * n, n, n).setIdentity();
    j.block(n, m + n * n, m, n) = ad_a;
    return j;
  };
  return p;
}

}  // namespace odenet
