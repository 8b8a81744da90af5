#pragma once

#include "lmf/rank_selection.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace lmf {

inline constexpr const char* kVersion = "0.1.0";

struct SimDesign {
  Eigen::Index m1 = 50, n1 = 50, m2 = 50, n2 = 50;
  RankSpec ranks{2, 0, 0, 0};
  double joint_sd = 1.0;       // sd of every joint factor entry (U, S_x diagonal, V, Uy, Vz)
  double individual_sd = 1.0;  // sd of every individual factor entry
  double noise_sd = 1.0;       // 0 disables noise
  int replicates = 100;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
};

struct SimulatedData {
  LinkedDataset data;
  Decomposition truth;
  JointModel joint_truth;  // generating joint factors, S_x diagonal as drawn
  Matrix noise_x, noise_y, noise_z;
};

// One draw from the linked model with the design's ranks and sds:
//   X = U diag(s) V^T + Uix Vix^T + Ex,  Y = Uy V^T + Uiy Viy^T + Ey,
//   Z = U Vz^T + Uiz Viz^T + Ez.
// Draw order (each matrix filled column-major): U, s, V, Uy, Vz, Uix, Vix,
// Uiy, Viy, Uiz, Viz, Ex, Ey, Ez.
SimulatedData generate_linked(const SimDesign& design, std::uint64_t seed);
SimulatedData generate_linked(const SimDesign& design, const RankSpec& ranks, std::uint64_t seed);

// Per-replicate rows with a group label, plus per-group means and sds.
struct StudyReport {
  struct Row {
    std::string group;
    int replicate = 0;
    std::vector<double> values;  // aligned with columns; NaN = not applicable
  };
  struct Summary {
    std::string group;
    std::string column;
    double mean = 0.0;
    double sd = 0.0;
    int n = 0;
  };

  std::string study;
  nlohmann::json design;
  std::vector<std::string> columns;
  std::vector<Row> rows;
  nlohmann::json extras = nlohmann::json::object();
  std::string version = kVersion;

  std::vector<Summary> summarize() const;
  // Mean/sd over the rows of `group` with a finite value in `column`.
  Summary summary(const std::string& group, const std::string& column) const;
  std::vector<double> values(const std::string& group, const std::string& column) const;
  std::size_t column_index(const std::string& column) const;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

struct StudyOptions {
  AlsOptions als;
  int threads = 1;
  // Center and scale each replicate before fitting; errors are still
  // reported on the data scale.
  bool preprocess = true;
};

// Joint-only LMF on the default design (50 x 50, r = 2, N(0,1)).
StudyReport run_joint_study(const SimDesign& design, const StudyOptions& opts = {});

// One dataset per noise variance in `variances` (the design's noise_sd is
// overridden); reports E_rec and E_res per variance.
StudyReport run_noise_sweep(const SimDesign& design, const std::vector<double>& variances,
                            const StudyOptions& opts = {});

// Joint-only vs joint-first vs individual-first LMF-JIVE under equal,
// higher-joint and higher-individual factor variances.
StudyReport run_jive_study(const SimDesign& design, const StudyOptions& opts = {});

struct ImputationStudyOptions {
  StudyOptions study;
  std::vector<Eigen::Index> side_dims{30, 200};
  std::vector<double> noise_variances{0.1, 1.0, 10.0};
  int missing_rows = 3;
  int missing_cols = 3;
  int missing_entries = 50;  // sampled cells; those in missing rows/cols are dropped
  int max_rank = 5;
  double outer_tolerance = 1e-4;
  int outer_max_iterations = 1000;
};

// SVD / joint-only / LMF-JIVE imputation with ranks drawn uniformly from
// {0..max_rank}; Error(X), Error(X_true) and the noise oracle by cell class.
StudyReport run_imputation_study(const SimDesign& design, const ImputationStudyOptions& opts = {});

// Study grid in report order: side dimension outer, noise variance inner.
struct ImputationSetting {
  Eigen::Index side;
  double variance;
  std::string name;
};
std::vector<ImputationSetting> imputation_settings(const ImputationStudyOptions& opts);

// The data, ranks and missing pattern of one study replicate.
struct ImputationReplicate {
  SimDesign design;
  RankSpec ranks;
  SimulatedData sim;
  MissingPattern pattern;
};
ImputationReplicate imputation_replicate(const SimDesign& design, const ImputationStudyOptions& opts, int setting,
                                         int replicate);

enum class RankMethod { Permutation, CrossValidation };

struct RankStudyOptions {
  StudyOptions study;
  int max_rank = 5;
  PermutationOptions permutation;
  CvSelectionOptions cv;
};

// Ranks drawn uniformly from {0..max_rank}; reports selected vs true ranks
// with under/over/correct indicators and absolute deviations.
StudyReport run_rank_selection_study(const SimDesign& design, RankMethod method, const RankStudyOptions& opts = {});

// Structured K-fold CV on simulated data: one row per run with the
// four-cell error breakdown for each imputation method.
StudyReport run_structured_cv_study(const SimDesign& design, int folds, const ImputeOptions& impute_opts,
                                    int threads = 1, bool preprocess = true);

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace lmf
