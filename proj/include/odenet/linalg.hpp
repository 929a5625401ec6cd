#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace odenet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Componentwise product a ⊙ b. Throws ShapeError on length mismatch.
Vec hadamard(const Vec& a, const Vec& b);

/// Default relative rank tolerance (scaled by the Frobenius norm of the matrix).
inline constexpr double kRankTolerance = 1e-10;

/// Numerical rank by Gaussian elimination with partial pivoting. A pivot
/// candidate with |p| <= tol * ||A||_F is treated as zero.
int check_rank(const Mat& a, double tol = kRankTolerance);

/// LU factorisation with partial pivoting, PA = LU, stored compactly.
class LuDecomposition {
 public:
  explicit LuDecomposition(const Mat& a);

  double determinant() const;
  /// True when some pivot is exactly zero.
  bool singular() const { return singular_; }
  /// Smallest |pivot| relative to the largest |entry| of the input.
  double pivot_ratio() const { return pivot_ratio_; }

  Vec solve(const Vec& b) const;
  Mat solve(const Mat& b) const;
  Mat inverse() const;

 private:
  Mat lu_;
  std::vector<Eigen::Index> perm_;
  int sign_ = 1;
  bool singular_ = false;
  double pivot_ratio_ = 0.0;
};

double determinant(const Mat& a);

/// Standard basis vectors that extend the row space of `rows` (k x n, rank k)
/// by `count` dimensions. Each is picked greedily as the e_j with the largest
/// Gram-Schmidt rejection from the span so far (ties to the lower j); the
/// result is count x n, in pick order.
Mat basis_completion(const Mat& rows, Eigen::Index count);

/// Estimated ratio of extreme singular values via power and inverse iteration
/// on MᵀM (square, nonsingular M). Returns +inf when M is singular.
double condition_estimate(const Mat& m, int iterations = 200);

}  // namespace odenet
