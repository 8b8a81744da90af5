#include "lmf/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

namespace lmf {

void LinkedDataset::validate() const {
  if (x.rows() < 1 || x.cols() < 1) throw ValidationError("X must have at least one row and column");
  if (y.rows() < 1 || z.cols() < 1) throw ValidationError("Y and Z must be non-empty");
  if (y.cols() != x.cols()) {
    std::ostringstream os;
    os << "Y has " << y.cols() << " columns but X has " << x.cols();
    throw ValidationError(os.str());
  }
  if (z.rows() != x.rows()) {
    std::ostringstream os;
    os << "Z has " << z.rows() << " rows but X has " << x.rows();
    throw ValidationError(os.str());
  }
  if (mask_x && (mask_x->rows() != x.rows() || mask_x->cols() != x.cols()))
    throw ValidationError("mask shape differs from X");
}

void RankSpec::validate(const LinkedDataset& data) const {
  auto bound = [](Eigen::Index a, Eigen::Index b) { return static_cast<int>(std::min(a, b)); };
  if (joint < 0 || x < 0 || y < 0 || z < 0) throw ValidationError("ranks must be nonnegative");
  const int joint_max = std::min(bound(data.m1(), data.n1()), bound(data.m2(), data.n2()));
  if (joint > joint_max) throw ValidationError("rank too large: joint rank " + std::to_string(joint));
  if (x > bound(data.m1(), data.n1())) throw ValidationError("rank too large: X individual rank " + std::to_string(x));
  if (y > bound(data.m2(), data.n1())) throw ValidationError("rank too large: Y individual rank " + std::to_string(y));
  if (z > bound(data.m1(), data.n2())) throw ValidationError("rank too large: Z individual rank " + std::to_string(z));
}

std::string RankSpec::to_string() const {
  std::ostringstream os;
  os << "(" << joint << "," << x << "," << y << "," << z << ")";
  return os.str();
}

Decomposition zero_decomposition(const LinkedDataset& data) {
  Decomposition d;
  d.jx = Matrix::Zero(data.m1(), data.n1());
  d.jy = Matrix::Zero(data.m2(), data.n1());
  d.jz = Matrix::Zero(data.m1(), data.n2());
  d.ax = d.jx;
  d.ay = d.jy;
  d.az = d.jz;
  return d;
}

namespace {

double step_increase(double before, double after, double data_ss) {
  const double base = std::max({std::abs(before), kExactFitLevel * data_ss, std::numeric_limits<double>::min()});
  return (after - before) / base;
}

}  // namespace

double max_relative_increase(const std::vector<double>& trace, double data_ss) {
  double worst = 0.0;
  for (std::size_t i = 1; i < trace.size(); ++i) worst = std::max(worst, step_increase(trace[i - 1], trace[i], data_ss));
  return worst;
}

double max_relative_increase(const FitReport& report) {
  return max_relative_increase(report.sse_trace, report.data_ss);
}

namespace fit_monitor {
namespace {
std::mutex mutex;
double worst = 0.0;
Step step;
long count = 0;
}  // namespace

void record(const FitReport& report) {
  const auto& t = report.sse_trace;
  double w = 0.0;
  Step s;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double inc = step_increase(t[i - 1], t[i], report.data_ss);
    if (inc > w) {
      w = inc;
      s = Step{t[i - 1], t[i], report.data_ss, static_cast<long>(i), static_cast<long>(t.size())};
    }
  }
  std::lock_guard<std::mutex> lock(mutex);
  if (w > worst) {
    worst = w;
    step = s;
  }
  ++count;
}

void reset() {
  std::lock_guard<std::mutex> lock(mutex);
  worst = 0.0;
  step = Step{};
  count = 0;
}

Step worst_step() {
  std::lock_guard<std::mutex> lock(mutex);
  return step;
}

double worst_increase() {
  std::lock_guard<std::mutex> lock(mutex);
  return worst;
}

long fits() {
  std::lock_guard<std::mutex> lock(mutex);
  return count;
}
}  // namespace fit_monitor

}  // namespace lmf
