#pragma once

#include "lmf/imputation.hpp"

#include <vector>

namespace lmf {

// How a joint rank k is judged significant against the permutation null.
enum class JointRankRule {
  // The SSR drop contributed by component k exceeds the percentile of the
  // permuted drops; scanning stops at the first failure.
  VarianceExplained,
  // The raw SSR after k components exceeds the percentile of the permuted
  // SSRs; the highest such k is returned.
  Literal,
  // Literal with the inequality flipped: the raw SSR after k components is
  // below the lower (1 - percentile) quantile of the permuted SSRs; the
  // highest such k is returned.
  Flipped,
};

struct PermutationOptions {
  int r_max = 6;
  int rx_max = 6;
  int ry_max = 6;
  int rz_max = 6;
  int n_permutations = 100;
  double percentile = 0.95;
  std::uint64_t seed = 0;
  int max_outer_cycles = 10;
  JointRankRule rule = JointRankRule::VarianceExplained;
  AlsOptions als;
  int threads = 1;

  void validate() const;
};

// Sequential rank-1 deflation: fit a rank-1 joint model, record its SSR,
// subtract the fitted structures, repeat r_max times.
std::vector<double> joint_rank_ssr_profile(const Matrix& x, const Matrix& y, const Matrix& z, int r_max,
                                           const AlsOptions& opts = {});

// Permutation test for the joint rank on partial residuals (data minus
// individual estimates). The null permutes Y's columns and Z's rows
// independently; X is fixed. `stream` separates the random draws of
// different calls under the same master seed.
int select_joint_rank(const Matrix& x, const Matrix& y, const Matrix& z, const PermutationOptions& opts,
                      std::uint64_t stream = 0);

struct IndividualRanks {
  int x = 0;
  int y = 0;
  int z = 0;
};

// Permutation test for individual ranks on partial residuals (data minus
// joint estimates). Nulls: all entries of X shuffled, entries shuffled
// within each row of Y and within each column of Z. Rank k passes when the
// k-th singular value exceeds the percentile of its permuted counterparts;
// the scan stops at the first failure.
IndividualRanks select_individual_ranks(const Matrix& x, const Matrix& y, const Matrix& z,
                                        const PermutationOptions& opts, std::uint64_t stream = 0);

struct RankSelection {
  RankSpec ranks;
  bool converged = false;
  std::vector<RankSpec> path;
  std::vector<double> sse_path;  // CV only: held-out SSE of each accepted model
};

// Alternates joint-rank selection, refit, individual-rank selection, refit,
// until the ranks repeat or max_outer_cycles is reached.
RankSelection select_ranks_permutation(const LinkedDataset& data, const PermutationOptions& opts);

enum class SearchMode { Forward, Stepwise };

struct CvSelectionOptions {
  double row_fraction = 0.06;
  double col_fraction = 0.06;
  double entry_fraction = 0.05;
  ImputeOptions impute;  // ranks are ignored
  std::uint64_t seed = 0;
  SearchMode search = SearchMode::Forward;
  int threads = 1;

  void validate() const;
};

// Holds out round(f * m) rows, round(f * n) columns (at least one each) and
// a fraction of the remaining cells.
MissingPattern random_holdout(Eigen::Index m, Eigen::Index n, double row_fraction, double col_fraction,
                              double entry_fraction, std::uint64_t seed);

// Forward (or stepwise) search over rank vectors scored by the held-out SSE
// of LMF-JIVE imputation, starting from the mean imputation at (0,0,0,0).
RankSelection select_ranks_cv(const LinkedDataset& data, const CvSelectionOptions& opts);

}  // namespace lmf
