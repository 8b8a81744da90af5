#include "lmf/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace lmf {
namespace {

constexpr double kMinRcond = 1e-13;

}  // namespace

Vector solve_gram(const Matrix& gram, const Vector& rhs, int* degenerate) {
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() == Eigen::Success && llt.rcond() > kMinRcond) return llt.solve(rhs);
  if (degenerate) ++*degenerate;
  return gram.completeOrthogonalDecomposition().solve(rhs);
}

Matrix ls_coefficients(const Matrix& target, const Matrix& design, int* degenerate) {
  const Matrix gram = design.transpose() * design;
  const Matrix cross = target * design;  // rows x r
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() == Eigen::Success && llt.rcond() > kMinRcond)
    return llt.solve(cross.transpose()).transpose();
  if (degenerate) ++*degenerate;
  return gram.completeOrthogonalDecomposition().solve(cross.transpose()).transpose();
}

Matrix LowRank::matrix() const {
  return u * s.asDiagonal() * v.transpose();
}

LowRank LowRank::zero(Eigen::Index rows, Eigen::Index cols) {
  return LowRank{Matrix(rows, 0), Vector(0), Matrix(cols, 0)};
}

Eigen::Index argmax_abs(const Eigen::Ref<const Vector>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::abs(v(i)) > std::abs(v(best))) best = i;
  return best;
}

namespace {

void fix_signs(LowRank& out) {
  for (Eigen::Index c = 0; c < out.u.cols(); ++c) {
    if (out.u(argmax_abs(out.u.col(c)), c) < 0.0) {
      out.u.col(c) *= -1.0;
      out.v.col(c) *= -1.0;
    }
  }
}

// Top-k singular triplets from the eigenvectors of the smaller Gram matrix,
// refined by a Rayleigh-Ritz step. Only used when the k-th singular value is
// well separated from the (k+1)-th and not tiny relative to the first, where
// squaring the spectrum costs no meaningful accuracy.
bool gram_svd(const Matrix& m, Eigen::Index k, LowRank& out) {
  const bool wide = m.cols() > m.rows();
  const Matrix g = wide ? Matrix(m * m.transpose()) : Matrix(m.transpose() * m);
  const Eigen::Index p = g.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> es(g);
  if (es.info() != Eigen::Success) return false;
  const Vector& ev = es.eigenvalues();  // ascending
  const double top = ev(p - 1);
  if (!(top > 0.0)) return false;
  const double kth = ev(p - k);
  const double next = k < p ? std::max(ev(p - k - 1), 0.0) : 0.0;
  if (kth < 1e-6 * top || kth - next < 1e-4 * top) return false;

  const Matrix basis = es.eigenvectors().rightCols(k).rowwise().reverse();
  const Matrix image = wide ? Matrix(m.transpose() * basis) : Matrix(m * basis);
  Eigen::JacobiSVD<Matrix> small(image, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (wide) {
    out = LowRank{basis * small.matrixV(), small.singularValues(), small.matrixU()};
  } else {
    out = LowRank{small.matrixU(), small.singularValues(), basis * small.matrixV()};
  }
  return true;
}

}  // namespace

LowRank truncated_svd(const Matrix& m, int rank) {
  if (rank <= 0) return LowRank::zero(m.rows(), m.cols());
  const Eigen::Index k = std::min<Eigen::Index>(rank, std::min(m.rows(), m.cols()));
  LowRank out;
  if (k >= std::min(m.rows(), m.cols()) || !gram_svd(m, k, out)) {
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out = LowRank{svd.matrixU().leftCols(k), svd.singularValues().head(k), svd.matrixV().leftCols(k)};
  }
  fix_signs(out);
  return out;
}

}  // namespace lmf
