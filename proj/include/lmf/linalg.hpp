#pragma once

#include "lmf/types.hpp"

namespace lmf {

// Least-squares coefficients C minimizing ||target - C * design^T||_F, i.e.
// C = target * design * (design^T design)^{-1}. Falls back to the
// pseudoinverse when the Gram matrix is singular and bumps *degenerate.
Matrix ls_coefficients(const Matrix& target, const Matrix& design, int* degenerate = nullptr);

// Solves the symmetric system gram * x = rhs, with the same fallback.
Vector solve_gram(const Matrix& gram, const Vector& rhs, int* degenerate = nullptr);

struct LowRank {
  Matrix u;  // rows x k
  Vector s;  // k, nonincreasing, nonnegative
  Matrix v;  // cols x k

  Eigen::Index rank() const { return s.size(); }
  Matrix matrix() const;
  static LowRank zero(Eigen::Index rows, Eigen::Index cols);
};

// Best rank-k approximation of m. Column signs are fixed so that the
// largest-magnitude entry of each left singular vector is positive.
LowRank truncated_svd(const Matrix& m, int rank);

// Index of the largest-magnitude entry; ties resolve to the first.
Eigen::Index argmax_abs(const Eigen::Ref<const Vector>& v);

}  // namespace lmf
