#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lmf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Bad input: shapes, ranks, options. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical breakdown during a computation. Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MatrixTransform {
  double offset = 0.0;
  double scale = 1.0;
  // Per-column offsets, only populated when column centering was requested.
  Vector column_offsets;
};

struct PreprocessInfo {
  MatrixTransform x;
  MatrixTransform y;
  MatrixTransform z;
};

// Three linked matrices: X (m1 x n1), Y (m2 x n1) sharing X's columns and
// Z (m1 x n2) sharing X's rows. Only X may carry missing entries.
struct LinkedDataset {
  Matrix x;
  Matrix y;
  Matrix z;
  std::optional<Mask> mask_x;  // true = observed
  PreprocessInfo preprocessing;

  Eigen::Index m1() const { return x.rows(); }
  Eigen::Index n1() const { return x.cols(); }
  Eigen::Index m2() const { return y.rows(); }
  Eigen::Index n2() const { return z.cols(); }

  bool fully_observed() const { return !mask_x || mask_x->all(); }

  // Throws ValidationError when the linkage or mask shape is inconsistent.
  void validate() const;
};

struct RankSpec {
  int joint = 0;
  int x = 0;
  int y = 0;
  int z = 0;

  bool operator==(const RankSpec&) const = default;

  int total() const { return joint + x + y + z; }
  void validate(const LinkedDataset& data) const;
  std::string to_string() const;
};

struct FitReport {
  std::vector<double> sse_trace;
  int iterations = 0;
  bool converged = false;
  double final_sse = 0.0;
  // Normal-equation solves that fell back to the pseudoinverse.
  int degenerate_solves = 0;
  // Sum of squares of the fitted data; scale of the exact-fit level.
  double data_ss = 0.0;
};

// The six low-rank components of a linked decomposition. Joint-only models
// carry zero individual parts.
struct Decomposition {
  Matrix jx, jy, jz;
  Matrix ax, ay, az;

  Matrix total_x() const { return jx + ax; }
  Matrix total_y() const { return jy + ay; }
  Matrix total_z() const { return jz + az; }
};

Decomposition zero_decomposition(const LinkedDataset& data);

// SSE below this fraction of the data's sum of squares counts as an exact fit.
inline constexpr double kExactFitLevel = 1e-10;

// Largest relative increase between consecutive trace entries, 0 when the
// trace never goes up. Steps are measured against the previous SSE, but never
// against less than kExactFitLevel * data_ss: between two exact fits the
// trace only carries rounding noise.
double max_relative_increase(const std::vector<double>& trace, double data_ss = 0.0);
double max_relative_increase(const FitReport& report);

// Process-wide record of the worst SSE increase seen by any fit since the
// last reset. Every ALS and LMF-JIVE fit reports here.
namespace fit_monitor {
// The step behind worst_increase(): trace entries around it and the fit's data_ss.
struct Step {
  double before = 0.0, after = 0.0, data_ss = 0.0;
  long index = -1, trace_length = 0;
};
void record(const FitReport& report);
void reset();
double worst_increase();
Step worst_step();
long fits();
}  // namespace fit_monitor

}  // namespace lmf
