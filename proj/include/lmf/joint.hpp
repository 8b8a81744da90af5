#pragma once

#include "lmf/linalg.hpp"
#include "lmf/types.hpp"

#include <functional>

namespace lmf {

enum class InitMethod {
  Svd,     // leading right singular vectors of [X Z]
  Random,  // Gaussian draw from AlsOptions::seed
};

struct AlsOptions {
  double tolerance = 1e-5;
  int max_iterations = 5000;
  std::uint64_t seed = 0;
  InitMethod init = InitMethod::Svd;

  void validate() const;
};

// Rank-r joint factors: X ~ U diag(sx) V^T, Y ~ Uy V^T, Z ~ U Vz^T.
// S_x is held as its diagonal, so off-diagonal entries are zero by
// construction.
struct JointModel {
  Matrix u;   // m1 x r
  Matrix v;   // n1 x r
  Vector sx;  // r
  Matrix uy;  // m2 x r
  Matrix vz;  // n2 x r

  int rank() const { return static_cast<int>(sx.size()); }
  Matrix sx_matrix() const { return sx.asDiagonal(); }

  static JointModel empty(Eigen::Index m1, Eigen::Index n1, Eigen::Index m2, Eigen::Index n2);
};

struct JointStructure {
  Matrix jx;
  Matrix jy;
  Matrix jz;
};

JointStructure joint_structure(const JointModel& model);

struct JointFit {
  JointModel model;
  JointStructure structure;
  FitReport report;
};

// Alternating least squares for the rank-r joint factorization. Expects
// preprocessed, fully observed data. Deterministic for a given
// (data, r, opts). The returned model is in canonical form: U and V have
// orthonormal columns, S_x is nonnegative and nonincreasing, and the
// largest-magnitude entry of each U column is positive.
JointFit fit_joint(const LinkedDataset& data, int rank, const AlsOptions& opts = {});

// Same, resuming from a previous model of matching rank.
JointFit fit_joint(const LinkedDataset& data, const JointModel& warm_start, const AlsOptions& opts = {});

// Rewrites U* S* V*^T, Uy* V*^T, U* Vz*^T with a diagonal S_x using the SVD
// S* = P D Q^T: U = U* P, V = V* Q, Uy = Uy* Q, Vz = Vz* P.
JointModel diagonalize_sx(const Matrix& u, const Matrix& s, const Matrix& v, const Matrix& uy,
                          const Matrix& vz);

// Least-squares diagonal of S_x for fixed U, V. Solves the r x r normal
// equations (U^T U o V^T V) s = diag(U^T X V), which is the same system as
// (W^T W) s = W^T vec(X) with W[, i] = vec(U[, i] V[, i]^T).
Vector solve_sx_diagonal(const Matrix& x, const Matrix& u, const Matrix& v, int* degenerate = nullptr);

// Orthonormalizes U and V (thin QR) and diagonalizes the resulting S_x.
// The three joint structures are unchanged.
JointModel canonicalize(const JointModel& model);

// Data-independent building blocks shared with the joint+individual fit.
namespace detail {

struct SweepInputs {
  const Matrix& x;
  const Matrix& y;
  const Matrix& z;
};

// Initial V, Vz from the leading right singular vectors of [x z] (or a
// Gaussian draw), S_x = I, U = 0, and Uy by least squares on y.
JointModel initialize(const SweepInputs& in, int rank, const AlsOptions& opts, int* degenerate);

// One ALS sweep: U, rescale U, V, Vz, rescale V, Uy, S_x. Every step is an
// exact least-squares update or a reparameterization, so the SSE of
// (x, y, z) never increases.
void sweep(const SweepInputs& in, JointModel& model, int* degenerate,
           const std::function<void(const JointModel&)>& after_step = {});

double joint_sse(const SweepInputs& in, const JointModel& model);

}  // namespace detail

}  // namespace lmf
