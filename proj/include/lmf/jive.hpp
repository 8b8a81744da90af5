#pragma once

#include "lmf/joint.hpp"

namespace lmf {

enum class EstimationOrder { JointFirst, IndividualFirst };

struct JiveModel {
  JointModel joint;
  LowRank ax;
  LowRank ay;
  LowRank az;
  RankSpec ranks;
  bool orthogonalized = false;

  Decomposition components() const;
};

struct JiveFit {
  JiveModel model;
  FitReport report;
};

// Joint and individual decomposition by alternating a joint ALS sweep on the
// partial residuals (X - A_x, ...) with rank-r_* truncated SVDs of
// (X - J_x, ...). Stops when the summed squared change of all six components
// between iterations drops below opts.tolerance. The joint factors come back
// in canonical form (see fit_joint); the model is not orthogonalized.
JiveFit fit_jive(const LinkedDataset& data, const RankSpec& ranks,
                 EstimationOrder order = EstimationOrder::JointFirst, const AlsOptions& opts = {});

// Resumes from a previous model with the same ranks.
JiveFit fit_jive(const LinkedDataset& data, const JiveModel& warm_start, const AlsOptions& opts = {});

// Fits both orders and keeps the one with lower final SSE.
JiveFit fit_jive_best_order(const LinkedDataset& data, const RankSpec& ranks, const AlsOptions& opts = {},
                            int threads = 1);

// Moves the parts of A_y in row(V) and of A_z in col(U) into the joint
// structure:
//   J_y' = J_y + A_y V V^T,  A_y' = A_y - A_y V V^T
//   J_z' = J_z + U U^T A_z,  A_z' = A_z - U U^T A_z
// X's decomposition is untouched. Requires orthonormal U and V.
JiveModel orthogonalize(const JiveModel& model);

// True iff all six components agree entrywise within tol.
bool verify_identifiability(const JiveModel& a, const JiveModel& b, double tol);

}  // namespace lmf
