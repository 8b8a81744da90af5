#pragma once

#include "lmf/rng.hpp"
#include "lmf/types.hpp"

namespace lmf::test {

inline double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline Matrix orthonormal(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::HouseholderQR<Matrix> qr(rng.normal_matrix(rows, cols));
  return qr.householderQ() * Matrix::Identity(rows, cols);
}

// Three independent Gaussian matrices with linked shapes.
inline LinkedDataset random_linked(Rng& rng, Eigen::Index m1, Eigen::Index n1, Eigen::Index m2, Eigen::Index n2,
                                   double noise = 1.0) {
  LinkedDataset d;
  d.x = rng.normal_matrix(m1, n1, noise);
  d.y = rng.normal_matrix(m2, n1, noise);
  d.z = rng.normal_matrix(m1, n2, noise);
  return d;
}

}  // namespace lmf::test
