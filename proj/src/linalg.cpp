#include "odenet/linalg.hpp"

#include "odenet/errors.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace odenet {

Vec hadamard(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) {
    throw ShapeError("hadamard: length " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  return a.cwiseProduct(b);
}

int check_rank(const Mat& a, double tol) {
  Mat work = a;
  const double threshold = tol * a.norm();
  const Eigen::Index rows = work.rows();
  const Eigen::Index cols = work.cols();
  Eigen::Index pivot_row = 0;
  int rank = 0;
  for (Eigen::Index col = 0; col < cols && pivot_row < rows; ++col) {
    Eigen::Index best = pivot_row;
    for (Eigen::Index r = pivot_row + 1; r < rows; ++r) {
      if (std::abs(work(r, col)) > std::abs(work(best, col))) best = r;
    }
    if (std::abs(work(best, col)) <= threshold) continue;
    work.row(best).swap(work.row(pivot_row));
    for (Eigen::Index r = pivot_row + 1; r < rows; ++r) {
      const double factor = work(r, col) / work(pivot_row, col);
      work.row(r) -= factor * work.row(pivot_row);
    }
    ++pivot_row;
    ++rank;
  }
  return rank;
}

LuDecomposition::LuDecomposition(const Mat& a) : lu_(a) {
  if (a.rows() != a.cols()) {
    throw ShapeError("LU: matrix must be square, got " + std::to_string(a.rows()) +
                     "x" + std::to_string(a.cols()));
  }
  const Eigen::Index n = a.rows();
  perm_.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) perm_[static_cast<std::size_t>(i)] = i;
  const double scale = a.cwiseAbs().maxCoeff();
  double min_pivot = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index best = k;
    for (Eigen::Index r = k + 1; r < n; ++r) {
      if (std::abs(lu_(r, k)) > std::abs(lu_(best, k))) best = r;
    }
    if (best != k) {
      lu_.row(best).swap(lu_.row(k));
      std::swap(perm_[static_cast<std::size_t>(best)], perm_[static_cast<std::size_t>(k)]);
      sign_ = -sign_;
    }
    const double pivot = lu_(k, k);
    min_pivot = std::min(min_pivot, std::abs(pivot));
    if (pivot == 0.0) {
      singular_ = true;
      continue;
    }
    for (Eigen::Index r = k + 1; r < n; ++r) {
      lu_(r, k) /= pivot;
      const double factor = lu_(r, k);
      if (factor != 0.0) {
        lu_.row(r).tail(n - k - 1) -= factor * lu_.row(k).tail(n - k - 1);
      }
    }
  }
  pivot_ratio_ = (n == 0 || scale == 0.0) ? 0.0 : min_pivot / scale;
}

double LuDecomposition::determinant() const {
  double det = sign_;
  for (Eigen::Index i = 0; i < lu_.rows(); ++i) det *= lu_(i, i);
  return det;
}

Mat LuDecomposition::solve(const Mat& b) const {
  if (b.rows() != lu_.rows()) {
    throw ShapeError("LU solve: rhs has " + std::to_string(b.rows()) + " rows, expected " +
                     std::to_string(lu_.rows()));
  }
  if (singular_) throw RankError("LU solve: matrix is singular");
  const Eigen::Index n = lu_.rows();
  Mat x(n, b.cols());
  for (Eigen::Index i = 0; i < n; ++i) x.row(i) = b.row(perm_[static_cast<std::size_t>(i)]);
  // forward substitution, unit lower triangle
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) x.row(i) -= lu_(i, j) * x.row(j);
  }
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    for (Eigen::Index j = i + 1; j < n; ++j) x.row(i) -= lu_(i, j) * x.row(j);
    x.row(i) /= lu_(i, i);
  }
  return x;
}

Vec LuDecomposition::solve(const Vec& b) const {
  Mat rhs = b;
  return solve(rhs).col(0);
}

Mat LuDecomposition::inverse() const {
  return solve(Mat(Mat::Identity(lu_.rows(), lu_.rows())));
}

double determinant(const Mat& a) { return LuDecomposition(a).determinant(); }

Mat basis_completion(const Mat& rows, Eigen::Index count) {
  const Eigen::Index n = rows.cols();
  if (rows.rows() + count > n) {
    throw ShapeError("basis_completion: cannot extend " + std::to_string(rows.rows()) +
                     " rows by " + std::to_string(count) + " in dimension " + std::to_string(n));
  }
  // Orthonormal basis of the current span, one vector per row.
  std::vector<Vec> basis;
  auto orthogonalise = [&basis](Vec v) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vec& q : basis) v -= q.dot(v) * q;
    }
    return v;
  };
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    Vec v = orthogonalise(rows.row(i).transpose());
    const double norm = v.norm();
    if (norm <= kRankTolerance * rows.row(i).norm() || norm == 0.0) {
      throw RankError("basis_completion: input rows are linearly dependent (row " +
                      std::to_string(i) + ")");
    }
    basis.push_back(v / norm);
  }

  Mat out = Mat::Zero(count, n);
  for (Eigen::Index picked = 0; picked < count; ++picked) {
    Eigen::Index best = -1;
    double best_norm = -1.0;
    Vec best_rejection;
    for (Eigen::Index j = 0; j < n; ++j) {
      Vec rejection = orthogonalise(Vec::Unit(n, j));
      const double norm = rejection.norm();
      if (norm > best_norm) {
        best = j;
        best_norm = norm;
        best_rejection = std::move(rejection);
      }
    }
    out(picked, best) = 1.0;
    basis.push_back(best_rejection / best_norm);
  }
  return out;
}

double condition_estimate(const Mat& m, int iterations) {
  if (m.rows() != m.cols()) throw ShapeError("condition_estimate: matrix must be square");
  const Eigen::Index n = m.rows();
  if (n == 0) return 1.0;
  LuDecomposition lu(m);
  if (lu.singular()) return std::numeric_limits<double>::infinity();
  const Mat gram = m.transpose() * m;
  LuDecomposition gram_lu(gram);
  if (gram_lu.singular()) return std::numeric_limits<double>::infinity();

  // Deterministic, non-degenerate start vector.
  Vec start(n);
  for (Eigen::Index i = 0; i < n; ++i) start(i) = 1.0 + 0.1 * static_cast<double>(i);
  start.normalize();

  Vec v = start;
  double largest = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vec w = gram * v;
    largest = w.norm();
    if (largest == 0.0) return std::numeric_limits<double>::infinity();
    v = w / largest;
  }
  v = start;
  double inv_largest = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vec w = gram_lu.solve(v);
    inv_largest = w.norm();
    v = w / inv_largest;
  }
  // sigma_max^2 = largest, sigma_min^2 = 1 / inv_largest
  return std::sqrt(largest * inv_largest);
}

}  // namespace odenet
