#pragma once

#include "lmf/jive.hpp"

#include <cstdint>
#include <set>
#include <utility>

namespace lmf {

enum class CellKind { Observed, Entry, RowMissing, ColMissing, BothMissing };

// Which cells an imputation error is computed over.
enum class CellClass {
  AllMissing,     // every missing cell
  RowColMissing,  // cells in a missing row or a missing column
  EntryMissing,   // isolated entries
  BothMissing,    // row and column both missing
  RowOnly,        // missing row, observed column
  ColOnly,        // missing column, observed row
};

struct MissingPattern {
  std::set<Eigen::Index> rows;
  std::set<Eigen::Index> cols;
  std::set<std::pair<Eigen::Index, Eigen::Index>> entries;

  bool empty() const { return rows.empty() && cols.empty() && entries.empty(); }
  CellKind classify(Eigen::Index i, Eigen::Index j) const;
  // true = observed
  Mask mask(Eigen::Index m, Eigen::Index n) const;
  bool selects(Eigen::Index i, Eigen::Index j, CellClass which) const;

  // Fully missing rows and columns become row/column misses; remaining
  // holes become entries.
  static MissingPattern from_mask(const Mask& observed);
};

enum class ImputeMethod { Jive, JointOnly, SvdOnly };

struct ImputeOptions {
  RankSpec ranks;
  AlsOptions inner;
  double outer_tolerance = 1e-4;
  int outer_max_iterations = 1000;
  EstimationOrder order = EstimationOrder::JointFirst;

  void validate() const;
};

struct ImputeResult {
  Matrix x_hat;
  JiveModel model;        // JointOnly leaves the individual parts empty
  FitReport report;       // outer loop: change trace, iterations, convergence
  FitReport last_inner;   // the final inner fit
  std::vector<double> total_sse_trace;  // total SSE over all cells after each fit
  double worst_inner_increase = 0.0;    // largest relative SSE increase within any inner fit
};

// Starting values for missing cells: the overall observed mean when the row
// and column are both entirely missing, the row mean when only the column is
// missing, the column mean when only the row is missing, and the average of
// row and column means for an isolated hole. Observed cells are unchanged.
Matrix initialize_missing(const Matrix& x, const Mask& observed);

// EM-style imputation of X: fit on the completed matrix, replace the missing
// cells with the model total, repeat until the squared change of the
// completed matrix drops below outer_tolerance. Inner fits after the first are
// warm-started from the previous model. With all relevant ranks zero the
// mean initialization is returned.
ImputeResult impute(const LinkedDataset& data, const MissingPattern& pattern, const ImputeOptions& opts,
                    ImputeMethod method = ImputeMethod::Jive);

// ||(x_est - x_ref)[cells]||^2 / ||x_ref[cells]||^2 over the selected class.
double imputation_error(const Matrix& x_est, const Matrix& x_ref, const MissingPattern& pattern, CellClass which);

// Squared error over the selected class (numerator of imputation_error).
double imputation_sse(const Matrix& x_est, const Matrix& x_ref, const MissingPattern& pattern, CellClass which);

// K non-overlapping folds over an m x n matrix: every row is missing in
// exactly one fold, every column in exactly one fold, and every cell is an
// isolated missing entry in exactly one fold whose row and column are both
// observed. Needs 3 <= folds <= min(m, n).
std::vector<MissingPattern> structured_folds(Eigen::Index m, Eigen::Index n, int folds, std::uint64_t seed);

// Relative imputation errors pooled over folds (sum of squared errors over
// sum of squared values) for the four kinds of missing cell.
struct CvBreakdown {
  double both = 0.0;      // row and column missing
  double col_only = 0.0;  // column missing, row observed
  double row_only = 0.0;  // row missing, column observed
  double entry = 0.0;     // isolated entry
  int folds = 0;
  int nonconverged_folds = 0;
};

// Structured K-fold cross-validation of one imputation method on fully
// observed data. Folds run concurrently on up to `threads` workers.
CvBreakdown structured_cross_validation(const LinkedDataset& data, int folds, const ImputeOptions& opts,
                                        ImputeMethod method, std::uint64_t seed, int threads = 1);

}  // namespace lmf
