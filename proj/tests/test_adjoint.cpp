#include "odenet/adjoint.hpp"
#include "odenet/errors.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace odenet;

namespace {

struct Scalar {
  ODENetSpec spec{Mat::Identity(1, 1), 1.0, 2, Activation::relu()};
  ParamPath params = ParamPath::constant(1, 1, 2, 0.0);
  Scalar() {
    for (auto& a : params.alpha) a.setOnes();
  }
};

struct Batch {
  std::vector<Trajectory> trajs;
  std::vector<AdjointPath> adjoints;
  std::vector<Vec> residuals;
};

Batch per_sample(const ODENetSpec& spec, const ParamPath& p, const Mat& inputs,
                 const Mat& targets, AdjointScheme scheme) {
  Batch b;
  const int size = static_cast<int>(inputs.cols());
  for (Eigen::Index k = 0; k < inputs.cols(); ++k) {
    b.trajs.push_back(euler_forward(spec, p, inputs.col(k)));
    b.residuals.push_back(b.trajs.back().y.back() - targets.col(k));
    b.adjoints.push_back(
        adjoint_backward(spec, p, b.trajs.back(), b.residuals.back(), size, scheme));
  }
  return b;
}

double max_rel_diff(const PathValues& a, const PathValues& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.entry_count(); ++k) {
    worst = std::max(worst, std::abs(a.entry(k) - b.entry(k)) /
                                (1e-12 + std::max(std::abs(a.entry(k)), std::abs(b.entry(k)))));
  }
  return worst;
}

}  // namespace

TEST(Adjoint, HandRecursion) {
  Scalar s;
  const Trajectory t = euler_forward(s.spec, s.params, Vec::Ones(1));
  const Vec r = t.y.back();  // target 0
  EXPECT_EQ(r(0), 1.0);
  const AdjointPath path = adjoint_backward(s.spec, s.params, t, r, 1);
  EXPECT_EQ(path.lambda[0](0), 1.0);
  EXPECT_EQ(path.lambda[1](0), 0.5);
  EXPECT_EQ(path.lambda[2](0), 0.0);

  const Gradients g = assemble_gradients(s.spec, s.params, {t}, {path}, {r}, 1);
  const double gamma[] = {1.0, 0.5, 0.0};
  for (int l = 0; l < 3; ++l) {
    EXPECT_EQ(g.gamma[l](0), gamma[l]);
    EXPECT_EQ(g.beta[l](0, 0), gamma[l]);
    EXPECT_EQ(g.alpha[l](0), 1.0);
  }
}

TEST(Adjoint, ExactSchemeDropsTerminalSource) {
  Scalar s;
  const Trajectory t = euler_forward(s.spec, s.params, Vec::Ones(1));
  const Vec r = t.y.back();
  const AdjointPath path = adjoint_backward(s.spec, s.params, t, r, 1, AdjointScheme::exact);
  // only the l = 1 source term survives: λ_1 = 0, λ_0 = h·σ'(1)·α·r = 0.5
  EXPECT_EQ(path.lambda[2](0), 0.0);
  EXPECT_EQ(path.lambda[1](0), 0.0);
  EXPECT_EQ(path.lambda[0](0), 0.5);
  const Gradients g =
      assemble_gradients(s.spec, s.params, {t}, {path}, {r}, 1, AdjointScheme::exact);
  EXPECT_EQ(g.alpha[2](0), 0.0);
  EXPECT_EQ(g.alpha[0](0), 1.0);
}

TEST(Adjoint, ZeroResidualGivesZero) {
  Xoshiro256 rng(1);
  const ODENetSpec spec(testutil::random_full_rank(rng, 2, 3), 1.0, 6, Activation::tanh());
  const ParamPath p = testutil::random_params(rng, 3, 2, 6, 0.5);
  const Trajectory t = euler_forward(spec, p, testutil::random_vec(rng, 3));
  const AdjointPath path = adjoint_backward(spec, p, t, Vec::Zero(2), 1);
  for (const Vec& l : path.lambda) EXPECT_EQ(l, Vec::Zero(3));
  const Gradients g = assemble_gradients(spec, p, {t}, {path}, {Vec::Zero(2)}, 1);
  EXPECT_EQ(g.alpha_norm() + g.beta_norm() + g.gamma_norm(), 0.0);
}

TEST(Adjoint, ZeroBetaSameAsAbsentBeta) {
  Scalar s;
  ParamPath with_beta = s.params;
  for (auto& b : with_beta.beta) b *= 0.0;
  const Trajectory t = euler_forward(s.spec, s.params, Vec::Ones(1));
  EXPECT_EQ(adjoint_backward(s.spec, s.params, t, Vec::Ones(1), 1).lambda,
            adjoint_backward(s.spec, with_beta, t, Vec::Ones(1), 1).lambda);
}

TEST(MinibatchLoss, Examples) {
  EXPECT_EQ(minibatch_loss(std::vector<Vec>{Vec::Ones(2)}, std::vector<Vec>{Vec::Ones(2)}), 0.0);
  EXPECT_EQ(minibatch_loss(std::vector<Vec>{Vec::Ones(1)}, std::vector<Vec>{Vec::Zero(1)}), 0.5);
  EXPECT_EQ(minibatch_loss(std::vector<Vec>{Vec::Constant(1, 1.0), Vec::Constant(1, 2.0)},
                           std::vector<Vec>{Vec::Zero(1), Vec::Zero(1)}),
            1.25);
  EXPECT_THROW(minibatch_loss(std::vector<Vec>{}, std::vector<Vec>{}), ShapeError);
  EXPECT_EQ(minibatch_loss(Mat::Constant(1, 2, 1.0), Mat::Zero(1, 2)), 0.5);
}

TEST(Assemble, TwoSampleBatchCombinesSoloRuns) {
  Xoshiro256 rng(2);
  const ODENetSpec spec(testutil::random_full_rank(rng, 2, 3), 1.0, 5, Activation::tanh());
  const ParamPath p = testutil::random_params(rng, 3, 2, 5, 0.5);
  const Mat inputs = testutil::random_mat(rng, 3, 2), targets = testutil::random_mat(rng, 2, 2);
  const Batch both = per_sample(spec, p, inputs, targets, AdjointScheme::euler);
  const Gradients g = assemble_gradients(spec, p, both.trajs, both.adjoints, both.residuals, 2);

  Gradients expect = Gradients::zeros(3, 2, 5);
  for (int k = 0; k < 2; ++k) {
    const Batch solo = per_sample(spec, p, inputs.col(k), targets.col(k), AdjointScheme::euler);
    const Gradients gk =
        assemble_gradients(spec, p, solo.trajs, solo.adjoints, solo.residuals, 1);
    // α averages over the batch; λ already carries 1/B, so β and γ sum λ-terms
    for (std::size_t l = 0; l <= 5; ++l) {
      expect.alpha[l] += 0.5 * gk.alpha[l];
      expect.beta[l] += 0.5 * gk.beta[l];
      expect.gamma[l] += 0.5 * gk.gamma[l];
    }
  }
  EXPECT_LE(max_rel_diff(g, expect), 1e-14);
}

TEST(Assemble, ScalesLinearlyWithResiduals) {
  Xoshiro256 rng(3);
  const ODENetSpec spec(testutil::random_full_rank(rng, 1, 2), 1.0, 7, Activation::sigmoid());
  const ParamPath p = testutil::random_params(rng, 2, 1, 7, 0.5);
  const Trajectory t = euler_forward(spec, p, testutil::random_vec(rng, 2));
  const Vec r = testutil::random_vec(rng, 1);
  const Gradients g1 = assemble_gradients(spec, p, {t}, {adjoint_backward(spec, p, t, r, 1)},
                                          {r}, 1);
  const Vec r4 = 4.0 * r;
  const Gradients g4 = assemble_gradients(spec, p, {t}, {adjoint_backward(spec, p, t, r4, 1)},
                                          {r4}, 1);
  Gradients scaled = g1;
  scaled.scale(4.0);
  EXPECT_LE(max_rel_diff(g4, scaled), 1e-15);
}

TEST(Assemble, RejectsLengthMismatch) {
  Scalar s;
  const Trajectory t = euler_forward(s.spec, s.params, Vec::Ones(1));
  const AdjointPath a = adjoint_backward(s.spec, s.params, t, Vec::Ones(1), 2);
  EXPECT_THROW(assemble_gradients(s.spec, s.params, {t}, {a}, {Vec::Ones(1)}, 2), ShapeError);
}

TEST(MinibatchGradient, MatchesPerSamplePath) {
  Xoshiro256 rng(4);
  for (const AdjointScheme scheme : {AdjointScheme::euler, AdjointScheme::exact}) {
    const ODENetSpec spec(testutil::random_full_rank(rng, 2, 4), 1.5, 9, Activation::tanh());
    const ParamPath p = testutil::random_params(rng, 4, 2, 9, 0.5);
    const Mat inputs = testutil::random_mat(rng, 4, 6), targets = testutil::random_mat(rng, 2, 6);
    const Batch b = per_sample(spec, p, inputs, targets, scheme);
    const Gradients g =
        assemble_gradients(spec, p, b.trajs, b.adjoints, b.residuals, 6, scheme);
    const MinibatchResult r = minibatch_gradient(spec, p, inputs, targets, scheme);
    EXPECT_LE(max_rel_diff(g, r.grads), 1e-11);
    std::vector<Vec> preds;
    std::vector<Vec> tgts;
    for (int k = 0; k < 6; ++k) {
      preds.push_back(b.trajs[k].y.back());
      tgts.push_back(targets.col(k));
    }
    EXPECT_NEAR(r.loss, minibatch_loss(preds, tgts), 1e-14);
  }
}

TEST(MinibatchGradient, PermutingBatchKeepsGradients) {
  Xoshiro256 rng(5);
  const ODENetSpec spec(testutil::random_full_rank(rng, 1, 2), 1.0, 6, Activation::tanh());
  const ParamPath p = testutil::random_params(rng, 2, 1, 6, 0.5);
  const Mat inputs = testutil::random_mat(rng, 2, 5), targets = testutil::random_mat(rng, 1, 5);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(5);
  perm.indices() << 3, 0, 4, 1, 2;
  const auto a = minibatch_gradient(spec, p, inputs, targets);
  const auto b = minibatch_gradient(spec, p, inputs * perm, targets * perm);
  EXPECT_LE(max_rel_diff(a.grads, b.grads), 1e-13);
}

TEST(GeneralAdjoint, ConstantFieldHandSolve) {
  GeneralODEProblem prob;
  prob.state_dim = 2;
  prob.param_dim = 2;
  prob.f = [](double, const Vec&, const Vec& w) { return w; };
  prob.jac_x = [](double, const Vec&, const Vec&) { return Mat(Mat::Zero(2, 2)); };
  prob.jac_omega = [](double, const Vec&, const Vec&) { return Mat(Mat::Identity(2, 2)); };
  prob.P = Mat::Identity(2, 2);
  prob.Q = Mat::Identity(2, 2);
  prob.omega.assign(5, (Vec(2) << 0.3, -0.2).finished());
  const Vec xi = (Vec(2) << 1, 2).finished();
  const Vec target = (Vec(2) << 0.5, 0.5).finished();
  const Vec out = general_forward_output(prob, xi, 1.0, 4);
  const auto g = general_adjoint_gradient(prob, xi, target, 1.0, 4);
  for (const Vec& gl : g) EXPECT_LE((gl - (out - target)).norm(), 1e-15);
  const auto zero = general_adjoint_gradient(prob, xi, out, 1.0, 4);
  for (const Vec& gl : zero) EXPECT_EQ(gl, Vec::Zero(2));
}

TEST(GeneralAdjoint, StackedModelReproducesAssembledGradients) {
  Xoshiro256 rng(6);
  const Eigen::Index n = 3, m = 2;
  const int steps = 8;
  const Mat a = testutil::random_full_rank(rng, m, n);
  const ODENetSpec spec(a, 1.0, steps, Activation::tanh());
  const ParamPath p = testutil::random_params(rng, n, m, steps, 0.5);
  const Activation act = spec.activation();

  GeneralODEProblem prob;
  prob.state_dim = n + m;
  prob.param_dim = m + n * n + n;
  auto unpack = [&](const Vec& w) {
    Mat beta(n, n);
    for (Eigen::Index i = 0; i < n; ++i) beta.row(i) = w.segment(m + i * n, n).transpose();
    return std::make_tuple(Vec(w.head(m)), beta, Vec(w.tail(n)));
  };
  prob.f = [&](double, const Vec& s, const Vec& w) {
    auto [al, be, ga] = unpack(w);
    Vec out(n + m);
    out.head(n) = be * s.head(n) + ga;
    out.tail(m) = al.cwiseProduct(act.eval(Vec(a * s.head(n))));
    return out;
  };
  prob.jac_x = [&](double, const Vec& s, const Vec& w) {
    auto [al, be, ga] = unpack(w);
    Mat j = Mat::Zero(n + m, n + m);
    j.topLeftCorner(n, n) = be;
    j.bottomLeftCorner(m, n) = al.cwiseProduct(act.deriv(Vec(a * s.head(n)))).asDiagonal() * a;
    return j;
  };
  prob.jac_omega = [&](double, const Vec& s, const Vec&) {
    Mat j = Mat::Zero(n + m, m + n * n + n);
    j.bottomLeftCorner(m, m) = act.eval(Vec(a * s.head(n))).asDiagonal();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < n; ++c) j(i, m + i * n + c) = s(c);
    }
    j.block(0, m + n * n, n, n).setIdentity();
    return j;
  };
  prob.P = Mat::Zero(m, n + m);
  prob.P.rightCols(m).setIdentity();
  prob.Q = Mat::Zero(n + m, n);
  prob.Q.topRows(n).setIdentity();
  for (int l = 0; l <= steps; ++l) {
    Vec w(m + n * n + n);
    w.head(m) = p.alpha[l];
    for (Eigen::Index i = 0; i < n; ++i) w.segment(m + i * n, n) = p.beta[l].row(i).transpose();
    w.tail(n) = p.gamma[l];
    prob.omega.push_back(w);
  }

  const Vec xi = testutil::random_vec(rng, n), target = testutil::random_vec(rng, m);
  for (const AdjointScheme scheme : {AdjointScheme::euler, AdjointScheme::exact}) {
    const Batch b = per_sample(spec, p, xi, target, scheme);
    const Gradients g = assemble_gradients(spec, p, b.trajs, b.adjoints, b.residuals, 1, scheme);
    const auto gen = general_adjoint_gradient(prob, xi, target, 1.0, steps, scheme);
    for (int l = 0; l <= steps; ++l) {
      Vec expect(m + n * n + n);
      expect.head(m) = g.alpha[l];
      for (Eigen::Index i = 0; i < n; ++i) expect.segment(m + i * n, n) = g.beta[l].row(i).transpose();
      expect.tail(n) = g.gamma[l];
      EXPECT_LE((gen[l] - expect).norm(), 1e-10 * (1.0 + expect.norm())) << "l=" << l;
    }
  }
}

TEST(GeneralAdjoint, CallbackShapeViolation) {
  GeneralODEProblem prob;
  prob.state_dim = 2;
  prob.param_dim = 2;
  prob.f = [](double, const Vec&, const Vec& w) { return w; };
  prob.jac_x = [](double, const Vec&, const Vec&) { return Mat(Mat::Zero(3, 2)); };
  prob.jac_omega = [](double, const Vec&, const Vec&) { return Mat(Mat::Identity(2, 2)); };
  prob.P = Mat::Identity(2, 2);
  prob.Q = Mat::Identity(2, 2);
  prob.omega.assign(3, Vec::Ones(2));
  EXPECT_THROW(general_adjoint_gradient(prob, Vec::Ones(2), Vec::Zero(2), 1.0, 2), ShapeError);
}
