#include "odenet/activation.hpp"
#include "odenet/errors.hpp"
#include "odenet/linalg.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace odenet;

TEST(Activation, SpecValues) {
  EXPECT_DOUBLE_EQ(activation_eval(Activation::sigmoid(), 0.0), 0.5);
  EXPECT_EQ(activation_eval(Activation::relu(), -1.0), 0.0);
  EXPECT_NEAR(activation_eval(Activation::softplus(), 0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(activation_eval(Activation::softplus(), 0.0), 0.693147, 1e-6);
  EXPECT_DOUBLE_EQ(activation_deriv(Activation::tanh(), 0.0), 1.0);
  EXPECT_EQ(activation_deriv(Activation::relu(), 0.0), 0.0);
  EXPECT_DOUBLE_EQ(activation_deriv(Activation::sigmoid(), 0.0), 0.25);
}

TEST(Activation, KinkConventions) {
  // relu'(0) = 0 agrees with the one-sided difference from below
  const double below = (activation_eval(Activation::relu(), 0.0) -
                        activation_eval(Activation::relu(), -1e-6)) / 1e-6;
  EXPECT_EQ(activation_deriv(Activation::relu(), 0.0), below);
  for (double x : {-2.0, -1e-9, 0.0, 1e-9, 3.0}) {
    EXPECT_EQ(activation_deriv(Activation::unit_step(), x), 0.0);
    EXPECT_EQ(activation_deriv(Activation::truncated_power(0), x), 0.0);
  }
  EXPECT_EQ(activation_eval(Activation::unit_step(), 0.0), 0.0);
  EXPECT_EQ(activation_eval(Activation::unit_step(), 0.1), 1.0);
  EXPECT_EQ(activation_eval(Activation::unit_step(), -0.1), 0.0);
}

TEST(Activation, TableValues) {
  EXPECT_DOUBLE_EQ(activation_eval(Activation::truncated_power(3), 2.0), 8.0);
  EXPECT_EQ(activation_eval(Activation::truncated_power(3), -2.0), 0.0);
  EXPECT_DOUBLE_EQ(activation_deriv(Activation::truncated_power(3), 2.0), 12.0);
  EXPECT_NEAR(activation_eval(Activation::gaussian_rbf(), 0.0), 1.0 / std::sqrt(2.0 * M_PI), 1e-15);
  EXPECT_EQ(activation_eval(Activation::identity(), -3.5), -3.5);
  EXPECT_FALSE(Activation::identity().universal());
  EXPECT_TRUE(Activation::relu().universal());
}

TEST(Activation, SmoothDerivativesMatchCentralDifferences) {
  const double step = 1e-5;
  for (const Activation act : {Activation::sigmoid(), Activation::tanh(), Activation::softplus(),
                               Activation::gaussian_rbf()}) {
    for (int k = -500; k <= 500; ++k) {
      const double x = k * 0.01;
      const double fd = (act.eval(x + step) - act.eval(x - step)) / (2.0 * step);
      EXPECT_NEAR(act.deriv(x), fd, 1e-6) << act.name() << " at " << x;
    }
  }
}

TEST(Activation, ExtremeInputsStayFinite) {
  for (const Activation act : {Activation::sigmoid(), Activation::tanh(), Activation::softplus(),
                               Activation::gaussian_rbf()}) {
    for (double x : {-800.0, 800.0}) {
      EXPECT_TRUE(std::isfinite(act.eval(x))) << act.name();
      EXPECT_TRUE(std::isfinite(act.deriv(x))) << act.name();
    }
  }
  EXPECT_EQ(Activation::sigmoid().eval(-800.0), 0.0);
  EXPECT_EQ(Activation::softplus().eval(800.0), 800.0);
}

TEST(Activation, VectorAndInplaceFormsAgreeWithScalar) {
  Xoshiro256 rng(3);
  const Mat z = testutil::random_mat(rng, 3, 4, 4.0);
  for (const Activation act : {Activation::sigmoid(), Activation::relu(),
                               Activation::truncated_power(2), Activation::unit_step()}) {
    Mat e = z, d = z;
    act.eval_inplace(e);
    act.deriv_inplace(d);
    const Vec col_e = act.eval(Vec(z.col(1)));
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      EXPECT_EQ(col_e(i), act.eval(z(i, 1)));
      for (Eigen::Index j = 0; j < z.cols(); ++j) {
        EXPECT_EQ(e(i, j), act.eval(z(i, j)));
        EXPECT_EQ(d(i, j), act.deriv(z(i, j)));
      }
    }
  }
}

TEST(Activation, NamesAndCodesRoundTrip) {
  for (const Activation act :
       {Activation::sigmoid(), Activation::tanh(), Activation::relu(), Activation::softplus(),
        Activation::truncated_power(0), Activation::truncated_power(5), Activation::unit_step(),
        Activation::gaussian_rbf(), Activation::identity()}) {
    EXPECT_EQ(Activation::parse(act.name()), act);
    EXPECT_EQ(Activation::from_code(act.code()), act);
  }
  EXPECT_THROW(Activation::parse("dirac"), std::exception);
  EXPECT_THROW(Activation::from_code(42), FormatError);
}

TEST(Hadamard, Examples) {
  EXPECT_EQ(hadamard(Vec::LinSpaced(2, 1, 2), Vec::LinSpaced(2, 3, 4)), Vec::LinSpaced(2, 3, 8));
  EXPECT_EQ(hadamard(Vec::Zero(2), (Vec(2) << 5, 7).finished()), Vec::Zero(2));
  const Vec a = (Vec(3) << 1.5, -2, 0.25).finished();
  EXPECT_EQ(hadamard(a, Vec::Ones(3)), a);
  EXPECT_THROW(hadamard(Vec::Ones(2), Vec::Ones(3)), ShapeError);
}

TEST(Hadamard, CommutativeAndAssociative) {
  Xoshiro256 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec a = testutil::random_vec(rng, 7), b = testutil::random_vec(rng, 7),
              c = testutil::random_vec(rng, 7);
    EXPECT_EQ(hadamard(a, b), hadamard(b, a));
    const Vec left = hadamard(hadamard(a, b), c);
    const Vec right = hadamard(a, hadamard(b, c));
    for (Eigen::Index i = 0; i < 7; ++i) {
      EXPECT_LE(std::abs(left(i) - right(i)), std::abs(left(i)) * 2.3e-16);
    }
  }
}

TEST(CheckRank, Examples) {
  EXPECT_EQ(check_rank(Mat::Identity(2, 2), 1e-12), 2);
  EXPECT_EQ(check_rank((Mat(2, 2) << 1, 0, 2, 0).finished(), 1e-12), 1);
  EXPECT_EQ(check_rank((Mat(1, 3) << 1, 0, 0).finished(), 1e-12), 1);
  EXPECT_EQ(check_rank(Mat::Zero(3, 2)), 0);
}

TEST(CheckRank, TransposeInvariantOnRandomMatrices) {
  Xoshiro256 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto rows = static_cast<Eigen::Index>(1 + rng.below(8));
    const auto cols = static_cast<Eigen::Index>(1 + rng.below(8));
    const auto inner = static_cast<Eigen::Index>(1 + rng.below(8));
    // product of random factors: rank min(rows, cols, inner) generically
    const Mat a = testutil::random_mat(rng, rows, inner) * testutil::random_mat(rng, inner, cols);
    const int r = check_rank(a);
    EXPECT_EQ(r, check_rank(a.transpose()));
    EXPECT_EQ(r, std::min({rows, cols, inner}));
  }
}
