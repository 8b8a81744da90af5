#include "lmf/imputation.hpp"

#include "lmf/parallel.hpp"
#include "lmf/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace lmf {

CellKind MissingPattern::classify(Eigen::Index i, Eigen::Index j) const {
  const bool row = rows.count(i) > 0;
  const bool col = cols.count(j) > 0;
  if (row && col) return CellKind::BothMissing;
  if (row) return CellKind::RowMissing;
  if (col) return CellKind::ColMissing;
  if (entries.count({i, j})) return CellKind::Entry;
  return CellKind::Observed;
}

Mask MissingPattern::mask(Eigen::Index m, Eigen::Index n) const {
  Mask out = Mask::Constant(m, n, true);
  for (Eigen::Index i : rows) {
    if (i < 0 || i >= m) throw ValidationError("missing row index out of range");
    out.row(i).setConstant(false);
  }
  for (Eigen::Index j : cols) {
    if (j < 0 || j >= n) throw ValidationError("missing column index out of range");
    out.col(j).setConstant(false);
  }
  for (const auto& [i, j] : entries) {
    if (i < 0 || i >= m || j < 0 || j >= n) throw ValidationError("missing entry index out of range");
    out(i, j) = false;
  }
  return out;
}

bool MissingPattern::selects(Eigen::Index i, Eigen::Index j, CellClass which) const {
  const CellKind kind = classify(i, j);
  switch (which) {
    case CellClass::AllMissing: return kind != CellKind::Observed;
    case CellClass::RowColMissing:
      return kind == CellKind::RowMissing || kind == CellKind::ColMissing || kind == CellKind::BothMissing;
    case CellClass::EntryMissing: return kind == CellKind::Entry;
    case CellClass::BothMissing: return kind == CellKind::BothMissing;
    case CellClass::RowOnly: return kind == CellKind::RowMissing;
    case CellClass::ColOnly: return kind == CellKind::ColMissing;
  }
  return false;
}

MissingPattern MissingPattern::from_mask(const Mask& observed) {
  MissingPattern p;
  for (Eigen::Index i = 0; i < observed.rows(); ++i)
    if (observed.cols() > 0 && !observed.row(i).any()) p.rows.insert(i);
  for (Eigen::Index j = 0; j < observed.cols(); ++j)
    if (observed.rows() > 0 && !observed.col(j).any()) p.cols.insert(j);
  for (Eigen::Index j = 0; j < observed.cols(); ++j)
    for (Eigen::Index i = 0; i < observed.rows(); ++i)
      if (!observed(i, j) && !p.rows.count(i) && !p.cols.count(j)) p.entries.insert({i, j});
  return p;
}

void ImputeOptions::validate() const {
  if (!(outer_tolerance > 0.0)) throw ValidationError("outer_tolerance must be positive");
  if (outer_max_iterations < 1) throw ValidationError("outer_max_iterations must be positive");
  inner.validate();
}

Matrix initialize_missing(const Matrix& x, const Mask& observed) {
  if (observed.rows() != x.rows() || observed.cols() != x.cols()) throw ValidationError("mask shape differs from X");
  const Eigen::Index m = x.rows(), n = x.cols();
  Vector row_sum = Vector::Zero(m), col_sum = Vector::Zero(n);
  Eigen::VectorXi row_count = Eigen::VectorXi::Zero(m), col_count = Eigen::VectorXi::Zero(n);
  double total = 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i)
      if (observed(i, j)) {
        row_sum(i) += x(i, j);
        col_sum(j) += x(i, j);
        ++row_count(i);
        ++col_count(j);
        total += x(i, j);
        ++count;
      }
  if (count == 0) throw ValidationError("empty matrix: X has no observed entries");
  const double overall = total / static_cast<double>(count);

  Matrix out = x;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i) {
      if (observed(i, j)) continue;
      const bool row_seen = row_count(i) > 0;
      const bool col_seen = col_count(j) > 0;
      const double row_mean = row_seen ? row_sum(i) / row_count(i) : 0.0;
      const double col_mean = col_seen ? col_sum(j) / col_count(j) : 0.0;
      if (!row_seen && !col_seen)
        out(i, j) = overall;
      else if (row_seen && !col_seen)
        out(i, j) = row_mean;
      else if (!row_seen)
        out(i, j) = col_mean;
      else
        out(i, j) = 0.5 * (row_mean + col_mean);
    }
  return out;
}

ImputeResult impute(const LinkedDataset& data, const MissingPattern& pattern, const ImputeOptions& opts,
                    ImputeMethod method) {
  data.validate();
  opts.validate();
  if (!data.y.allFinite() || !data.z.allFinite())
    throw ValidationError("missing or non-finite values in Y or Z are not supported; only X can be imputed");
  opts.ranks.validate(data);
  const Mask observed = pattern.mask(data.m1(), data.n1());
  if (data.mask_x && ((!data.mask_x->array()) && observed).any())
    throw ValidationError("pattern does not cover every missing cell of the data mask");
  for (Eigen::Index j = 0; j < data.n1(); ++j)
    for (Eigen::Index i = 0; i < data.m1(); ++i)
      if (observed(i, j) && !std::isfinite(data.x(i, j))) throw ValidationError("non-finite data in X");

  ImputeResult result;
  result.x_hat = initialize_missing(data.x, observed);

  RankSpec fit_ranks = opts.ranks;
  if (method == ImputeMethod::JointOnly) fit_ranks = RankSpec{opts.ranks.joint, 0, 0, 0};
  if (method == ImputeMethod::SvdOnly) fit_ranks = RankSpec{0, opts.ranks.joint + opts.ranks.x, 0, 0};
  fit_ranks.validate(data);

  const Eigen::Index m1 = data.m1(), n1 = data.n1(), m2 = data.m2(), n2 = data.n2();
  result.model.joint = JointModel::empty(m1, n1, m2, n2);
  result.model.ax = LowRank::zero(m1, n1);
  result.model.ay = LowRank::zero(m2, n1);
  result.model.az = LowRank::zero(m1, n2);
  result.model.ranks = fit_ranks;

  const bool null_model = method == ImputeMethod::SvdOnly ? fit_ranks.x == 0 : fit_ranks.total() == 0;
  if (null_model) {
    result.report.converged = true;
    return result;
  }

  LinkedDataset work;
  work.x = result.x_hat;
  work.y = data.y;
  work.z = data.z;
  work.preprocessing = data.preprocessing;

  for (int t = 1; t <= opts.outer_max_iterations; ++t) {
    work.x = result.x_hat;
    Matrix total;
    double yz_sse = 0.0;
    switch (method) {
      case ImputeMethod::Jive: {
        JiveFit fit = t == 1 ? fit_jive(work, fit_ranks, opts.order, opts.inner)
                             : fit_jive(work, result.model, opts.inner);
        result.model = std::move(fit.model);
        result.last_inner = std::move(fit.report);
        const Decomposition d = result.model.components();
        total = d.jx + d.ax;
        yz_sse = (data.y - d.jy - d.ay).squaredNorm() + (data.z - d.jz - d.az).squaredNorm();
        break;
      }
      case ImputeMethod::JointOnly: {
        JointFit fit = t == 1 ? fit_joint(work, fit_ranks.joint, opts.inner)
                              : fit_joint(work, result.model.joint, opts.inner);
        result.model.joint = std::move(fit.model);
        result.last_inner = std::move(fit.report);
        total = fit.structure.jx;
        yz_sse = (data.y - fit.structure.jy).squaredNorm() + (data.z - fit.structure.jz).squaredNorm();
        break;
      }
      case ImputeMethod::SvdOnly: {
        result.model.ax = truncated_svd(work.x, fit_ranks.x);
        total = result.model.ax.matrix();
        result.last_inner = FitReport{};
        result.last_inner.iterations = 1;
        result.last_inner.converged = true;
        break;
      }
    }
    result.total_sse_trace.push_back((work.x - total).squaredNorm() + yz_sse);
    result.worst_inner_increase =
        std::max(result.worst_inner_increase, max_relative_increase(result.last_inner));

    double change = 0.0;
    for (Eigen::Index j = 0; j < n1; ++j)
      for (Eigen::Index i = 0; i < m1; ++i)
        if (!observed(i, j)) {
          const double d = total(i, j) - result.x_hat(i, j);
          change += d * d;
          result.x_hat(i, j) = total(i, j);
        }
    result.report.sse_trace.push_back(change);
    result.report.iterations = t;
    result.report.final_sse = change;
    if (change < opts.outer_tolerance) {
      result.report.converged = true;
      break;
    }
  }
  return result;
}

double imputation_sse(const Matrix& x_est, const Matrix& x_ref, const MissingPattern& pattern, CellClass which) {
  if (x_est.rows() != x_ref.rows() || x_est.cols() != x_ref.cols()) throw ValidationError("shape mismatch");
  double num = 0.0;
  for (Eigen::Index j = 0; j < x_ref.cols(); ++j)
    for (Eigen::Index i = 0; i < x_ref.rows(); ++i)
      if (pattern.selects(i, j, which)) {
        const double d = x_est(i, j) - x_ref(i, j);
        num += d * d;
      }
  return num;
}

double imputation_error(const Matrix& x_est, const Matrix& x_ref, const MissingPattern& pattern, CellClass which) {
  if (x_est.rows() != x_ref.rows() || x_est.cols() != x_ref.cols()) throw ValidationError("shape mismatch");
  double num = 0.0, den = 0.0;
  Eigen::Index cells = 0;
  for (Eigen::Index j = 0; j < x_ref.cols(); ++j)
    for (Eigen::Index i = 0; i < x_ref.rows(); ++i)
      if (pattern.selects(i, j, which)) {
        const double d = x_est(i, j) - x_ref(i, j);
        num += d * d;
        den += x_ref(i, j) * x_ref(i, j);
        ++cells;
      }
  if (cells == 0) throw ValidationError("no missing cells of the requested class");
  if (den == 0.0) throw ValidationError("zero denominator");
  return num / den;
}

std::vector<MissingPattern> structured_folds(Eigen::Index m, Eigen::Index n, int folds, std::uint64_t seed) {
  if (folds < 3) throw ValidationError("structured cross-validation needs at least 3 folds");
  if (folds > m || folds > n) throw ValidationError("more folds than rows or columns");
  Rng rng(seed);
  const auto row_perm = rng.permutation(m);
  const auto col_perm = rng.permutation(n);
  std::vector<int> row_fold(static_cast<std::size_t>(m)), col_fold(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < m; ++k) row_fold[static_cast<std::size_t>(row_perm[static_cast<std::size_t>(k)])] = static_cast<int>(k % folds);
  for (Eigen::Index k = 0; k < n; ++k) col_fold[static_cast<std::size_t>(col_perm[static_cast<std::size_t>(k)])] = static_cast<int>(k % folds);

  std::vector<MissingPattern> out(static_cast<std::size_t>(folds));
  for (Eigen::Index i = 0; i < m; ++i) out[static_cast<std::size_t>(row_fold[static_cast<std::size_t>(i)])].rows.insert(i);
  for (Eigen::Index j = 0; j < n; ++j) out[static_cast<std::size_t>(col_fold[static_cast<std::size_t>(j)])].cols.insert(j);

  // Cells are dealt round-robin in random order; a cell whose turn lands on
  // its own row or column fold moves to the next free fold.
  const auto cell_perm = rng.permutation(m * n);
  for (Eigen::Index k = 0; k < m * n; ++k) {
    const Eigen::Index cell = cell_perm[static_cast<std::size_t>(k)];
    const Eigen::Index i = cell % m, j = cell / m;
    int f = static_cast<int>(k % folds);
    while (f == row_fold[static_cast<std::size_t>(i)] || f == col_fold[static_cast<std::size_t>(j)]) f = (f + 1) % folds;
    out[static_cast<std::size_t>(f)].entries.insert({i, j});
  }
  return out;
}

CvBreakdown structured_cross_validation(const LinkedDataset& data, int folds, const ImputeOptions& opts,
                                        ImputeMethod method, std::uint64_t seed, int threads) {
  data.validate();
  if (!data.fully_observed()) throw ValidationError("structured cross-validation needs a fully observed X");
  const auto patterns = structured_folds(data.m1(), data.n1(), folds, seed);
  constexpr std::array<CellClass, 4> classes{CellClass::BothMissing, CellClass::ColOnly, CellClass::RowOnly,
                                             CellClass::EntryMissing};
  struct Sums {
    std::array<double, 4> num{}, den{};
    bool converged = true;
  };
  std::vector<Sums> sums(patterns.size());
  parallel_for(folds, threads, [&](int f) {
    const auto& pattern = patterns[static_cast<std::size_t>(f)];
    LinkedDataset masked = data;
    masked.mask_x = pattern.mask(data.m1(), data.n1());
    const ImputeResult r = impute(masked, pattern, opts, method);
    Sums& s = sums[static_cast<std::size_t>(f)];
    s.converged = r.report.converged;
    for (std::size_t c = 0; c < classes.size(); ++c) {
      s.num[c] = imputation_sse(r.x_hat, data.x, pattern, classes[c]);
      s.den[c] = imputation_sse(Matrix::Zero(data.m1(), data.n1()), data.x, pattern, classes[c]);
    }
  });

  std::array<double, 4> num{}, den{};
  CvBreakdown out;
  out.folds = folds;
  for (const auto& s : sums) {
    for (std::size_t c = 0; c < classes.size(); ++c) {
      num[c] += s.num[c];
      den[c] += s.den[c];
    }
    if (!s.converged) ++out.nonconverged_folds;
  }
  auto ratio = [&](std::size_t c) {
    if (den[c] == 0.0) throw ValidationError("zero denominator");
    return num[c] / den[c];
  };
  out.both = ratio(0);
  out.col_only = ratio(1);
  out.row_only = ratio(2);
  out.entry = ratio(3);
  return out;
}

}  // namespace lmf
