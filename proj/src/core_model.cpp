#include "lmf/core_model.hpp"

#include <cmath>

namespace lmf {
namespace {

MatrixTransform fit_transform(const Matrix& m, const Mask* mask, Centering centering,
                              const char* name) {
  MatrixTransform t;
  Eigen::Index observed = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (mask && !(*mask)(i, j)) continue;
      if (!std::isfinite(m(i, j))) throw ValidationError(std::string("non-finite data in ") + name);
      ++observed;
    }
  if (observed == 0) throw ValidationError(std::string("empty matrix: ") + name + " has no observed entries");

  if (centering == Centering::Overall) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        if (!mask || (*mask)(i, j)) sum += m(i, j);
    t.offset = sum / static_cast<double>(observed);
  } else if (centering == Centering::Columns) {
    t.column_offsets = Vector::Zero(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      double sum = 0.0;
      Eigen::Index count = 0;
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        if (!mask || (*mask)(i, j)) {
          sum += m(i, j);
          ++count;
        }
      if (count > 0) t.column_offsets(j) = sum / static_cast<double>(count);
    }
  }

  double ss = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double col_offset = t.column_offsets.size() ? t.column_offsets(j) : 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!mask || (*mask)(i, j)) {
        const double c = m(i, j) - t.offset - col_offset;
        ss += c * c;
      }
  }
  const double norm = std::sqrt(ss);
  t.scale = norm > 0.0 ? norm : 1.0;
  return t;
}

Matrix apply_transform(const Matrix& m, const Mask* mask, const MatrixTransform& t) {
  Matrix out = m;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double col_offset = t.column_offsets.size() ? t.column_offsets(j) : 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!mask || (*mask)(i, j)) out(i, j) = (m(i, j) - t.offset - col_offset) / t.scale;
  }
  return out;
}

// Composes an existing transform with a new one applied on top of it.
MatrixTransform compose(const MatrixTransform& first, const MatrixTransform& second) {
  // original = (pre * second.scale + second.offset + second.col) * first.scale + first.offset + first.col
  MatrixTransform t;
  t.scale = first.scale * second.scale;
  t.offset = second.offset * first.scale + first.offset;
  if (first.column_offsets.size() || second.column_offsets.size()) {
    const Eigen::Index n = std::max(first.column_offsets.size(), second.column_offsets.size());
    t.column_offsets = Vector::Zero(n);
    if (first.column_offsets.size()) t.column_offsets += first.column_offsets;
    if (second.column_offsets.size()) t.column_offsets += second.column_offsets * first.scale;
  }
  return t;
}

}  // namespace

LinkedDataset center_and_scale(const LinkedDataset& data, Centering centering) {
  data.validate();
  const Mask* mask = data.mask_x ? &*data.mask_x : nullptr;
  const MatrixTransform tx = fit_transform(data.x, mask, centering, "X");
  const MatrixTransform ty = fit_transform(data.y, nullptr, centering, "Y");
  const MatrixTransform tz = fit_transform(data.z, nullptr, centering, "Z");

  LinkedDataset out;
  out.x = apply_transform(data.x, mask, tx);
  out.y = apply_transform(data.y, nullptr, ty);
  out.z = apply_transform(data.z, nullptr, tz);
  out.mask_x = data.mask_x;
  out.preprocessing.x = compose(data.preprocessing.x, tx);
  out.preprocessing.y = compose(data.preprocessing.y, ty);
  out.preprocessing.z = compose(data.preprocessing.z, tz);
  return out;
}

Matrix restore_scale(const Matrix& m, const MatrixTransform& t) {
  Matrix out = m * t.scale;
  out.array() += t.offset;
  if (t.column_offsets.size()) out.rowwise() += t.column_offsets.transpose();
  return out;
}

LinkedDataset restore_scale(const LinkedDataset& data) {
  LinkedDataset out;
  out.x = restore_scale(data.x, data.preprocessing.x);
  out.y = restore_scale(data.y, data.preprocessing.y);
  out.z = restore_scale(data.z, data.preprocessing.z);
  if (data.mask_x) {
    out.mask_x = data.mask_x;
    for (Eigen::Index j = 0; j < out.x.cols(); ++j)
      for (Eigen::Index i = 0; i < out.x.rows(); ++i)
        if (!(*data.mask_x)(i, j)) out.x(i, j) = data.x(i, j);
  }
  return out;
}

double reconstruction_error(const Decomposition& truth, const Decomposition& estimate) {
  auto same = [](const Matrix& a, const Matrix& b) { return a.rows() == b.rows() && a.cols() == b.cols(); };
  if (!same(truth.jx, estimate.jx) || !same(truth.jy, estimate.jy) || !same(truth.jz, estimate.jz) ||
      !same(truth.ax, estimate.ax) || !same(truth.ay, estimate.ay) || !same(truth.az, estimate.az))
    throw ValidationError("component shapes differ between truth and estimate");
  const double denom = truth.jx.squaredNorm() + truth.jy.squaredNorm() + truth.jz.squaredNorm() +
                       truth.ax.squaredNorm() + truth.ay.squaredNorm() + truth.az.squaredNorm();
  if (denom == 0.0) throw ValidationError("zero denominator: truth is entirely zero");
  const double num = (estimate.jx - truth.jx).squaredNorm() + (estimate.jy - truth.jy).squaredNorm() +
                     (estimate.jz - truth.jz).squaredNorm() + (estimate.ax - truth.ax).squaredNorm() +
                     (estimate.ay - truth.ay).squaredNorm() + (estimate.az - truth.az).squaredNorm();
  return num / denom;
}

double total_sse(const LinkedDataset& data, const Decomposition& estimate) {
  if (estimate.jx.rows() != data.m1() || estimate.jx.cols() != data.n1() || estimate.jy.rows() != data.m2() ||
      estimate.jz.cols() != data.n2() || estimate.ax.rows() != data.m1() || estimate.ax.cols() != data.n1() ||
      estimate.ay.rows() != data.m2() || estimate.ay.cols() != data.n1() || estimate.az.rows() != data.m1() ||
      estimate.az.cols() != data.n2())
    throw ValidationError("component shapes differ from data");
  return (data.x - estimate.jx - estimate.ax).squaredNorm() + (data.y - estimate.jy - estimate.ay).squaredNorm() +
         (data.z - estimate.jz - estimate.az).squaredNorm();
}

double residual_error(const LinkedDataset& data, const Decomposition& estimate) {
  const double denom = data.x.squaredNorm() + data.y.squaredNorm() + data.z.squaredNorm();
  if (denom == 0.0) throw ValidationError("zero denominator: data matrices are zero");
  return total_sse(data, estimate) / denom;
}

}  // namespace lmf
