#include "lmf/joint.hpp"

#include "lmf/rng.hpp"

#include <cmath>
#include <limits>

namespace lmf {

void AlsOptions::validate() const {
  if (!(tolerance > 0.0)) throw ValidationError("tolerance must be positive");
  if (max_iterations < 1) throw ValidationError("max_iterations must be positive");
}

JointModel JointModel::empty(Eigen::Index m1, Eigen::Index n1, Eigen::Index m2, Eigen::Index n2) {
  return JointModel{Matrix(m1, 0), Matrix(n1, 0), Vector(0), Matrix(m2, 0), Matrix(n2, 0)};
}

JointStructure joint_structure(const JointModel& m) {
  return JointStructure{m.u * m.sx.asDiagonal() * m.v.transpose(), m.uy * m.v.transpose(),
                        m.u * m.vz.transpose()};
}

Vector solve_sx_diagonal(const Matrix& x, const Matrix& u, const Matrix& v, int* degenerate) {
  if (u.rows() != x.rows() || v.rows() != x.cols() || u.cols() != v.cols())
    throw ValidationError("solve_sx_diagonal: shape mismatch");
  if (u.cols() == 0) return Vector(0);
  const Matrix gram = (u.transpose() * u).cwiseProduct(v.transpose() * v);
  const Vector rhs = (u.transpose() * x * v).diagonal();
  return solve_gram(gram, rhs, degenerate);
}

JointModel diagonalize_sx(const Matrix& u, const Matrix& s, const Matrix& v, const Matrix& uy, const Matrix& vz) {
  const Eigen::Index r = s.rows();
  if (s.cols() != r || u.cols() != r || v.cols() != r || uy.cols() != r || vz.cols() != r)
    throw ValidationError("diagonalize_sx: factor column counts must match S");
  JointModel out;
  if (r == 0) return JointModel{u, v, Vector(0), uy, vz};
  Eigen::JacobiSVD<Matrix> svd(s, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix& p = svd.matrixU();
  const Matrix& q = svd.matrixV();
  out.u = u * p;
  out.v = v * q;
  out.sx = svd.singularValues();
  out.uy = uy * q;
  out.vz = vz * p;
  for (Eigen::Index k = 0; k < r; ++k) {
    if (out.u.rows() > 0 && out.u(argmax_abs(out.u.col(k)), k) < 0.0) {
      out.u.col(k) *= -1.0;
      out.v.col(k) *= -1.0;
      out.uy.col(k) *= -1.0;
      out.vz.col(k) *= -1.0;
    }
  }
  return out;
}

JointModel canonicalize(const JointModel& m) {
  const Eigen::Index r = m.rank();
  if (r == 0) return m;
  Eigen::HouseholderQR<Matrix> qr_u(m.u);
  Eigen::HouseholderQR<Matrix> qr_v(m.v);
  const Matrix qu = qr_u.householderQ() * Matrix::Identity(m.u.rows(), r);
  const Matrix qv = qr_v.householderQ() * Matrix::Identity(m.v.rows(), r);
  const Matrix ru = qu.transpose() * m.u;
  const Matrix rv = qv.transpose() * m.v;
  const Matrix s = ru * m.sx.asDiagonal() * rv.transpose();
  return diagonalize_sx(qu, s, qv, m.uy * rv.transpose(), m.vz * ru.transpose());
}

namespace detail {
namespace {

// Divides each column of `a` by its norm, multiplying the norm into the
// matching entry of sx and column of `partner`, then fixes the column sign.
// Reconstructions are unchanged.
void rescale_columns(Matrix& a, Vector& sx, Matrix& partner, int* degenerate) {
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    const double norm = a.col(k).norm();
    if (norm == 0.0 || !std::isfinite(norm)) {
      if (degenerate) ++*degenerate;
      continue;
    }
    double f = 1.0 / norm;
    double g = norm;
    if (a(argmax_abs(a.col(k)), k) < 0.0) {
      f = -f;
      g = -g;
    }
    a.col(k) *= f;
    sx(k) *= g;
    partner.col(k) *= g;
  }
}

}  // namespace

JointModel initialize(const SweepInputs& in, int rank, const AlsOptions& opts, int* degenerate) {
  const Eigen::Index m1 = in.x.rows(), n1 = in.x.cols(), m2 = in.y.rows(), n2 = in.z.cols();
  JointModel m = JointModel::empty(m1, n1, m2, n2);
  if (rank == 0) return m;
  Matrix vt;
  if (opts.init == InitMethod::Svd) {
    Matrix concat(m1, n1 + n2);
    concat << in.x, in.z;
    Eigen::BDCSVD<Matrix> svd(concat, Eigen::ComputeThinV);
    vt = svd.matrixV().leftCols(rank);
    for (Eigen::Index k = 0; k < rank; ++k)
      if (vt(argmax_abs(vt.col(k)), k) < 0.0) vt.col(k) *= -1.0;
  } else {
    Rng rng(opts.seed);
    vt = rng.normal_matrix(n1 + n2, rank);
  }
  m.v = vt.topRows(n1);
  m.vz = vt.bottomRows(n2);
  m.sx = Vector::Ones(rank);
  m.u = Matrix::Zero(m1, rank);
  m.uy = ls_coefficients(in.y, m.v, degenerate);
  return m;
}

void sweep(const SweepInputs& in, JointModel& m, int* degenerate,
           const std::function<void(const JointModel&)>& after_step) {
  if (m.rank() == 0) return;
  auto step = [&] {
    if (after_step) after_step(m);
  };
  // U from [X Z] ~ U [V S; Vz]^T
  {
    const Matrix vs = m.v * m.sx.asDiagonal();
    const Matrix gram = vs.transpose() * vs + m.vz.transpose() * m.vz;
    const Matrix cross = in.x * vs + in.z * m.vz;
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() == Eigen::Success && llt.rcond() > 1e-13) {
      m.u = llt.solve(cross.transpose()).transpose();
    } else {
      if (degenerate) ++*degenerate;
      m.u = gram.completeOrthogonalDecomposition().solve(cross.transpose()).transpose();
    }
  }
  step();
  rescale_columns(m.u, m.sx, m.vz, degenerate);
  step();

  // V from [X; Y] ~ [U S; Uy] V^T
  {
    const Matrix us = m.u * m.sx.asDiagonal();
    const Matrix gram = us.transpose() * us + m.uy.transpose() * m.uy;
    const Matrix cross = in.x.transpose() * us + in.y.transpose() * m.uy;
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() == Eigen::Success && llt.rcond() > 1e-13) {
      m.v = llt.solve(cross.transpose()).transpose();
    } else {
      if (degenerate) ++*degenerate;
      m.v = gram.completeOrthogonalDecomposition().solve(cross.transpose()).transpose();
    }
  }
  step();

  // Vz from Z ~ U Vz^T
  m.vz = ls_coefficients(in.z.transpose(), m.u, degenerate);
  step();
  rescale_columns(m.v, m.sx, m.uy, degenerate);
  step();

  // Uy from Y ~ Uy V^T
  m.uy = ls_coefficients(in.y, m.v, degenerate);
  step();

  m.sx = solve_sx_diagonal(in.x, m.u, m.v, degenerate);
  step();
}

double joint_sse(const SweepInputs& in, const JointModel& m) {
  if (m.rank() == 0) return in.x.squaredNorm() + in.y.squaredNorm() + in.z.squaredNorm();
  return (in.x - m.u * m.sx.asDiagonal() * m.v.transpose()).squaredNorm() +
         (in.y - m.uy * m.v.transpose()).squaredNorm() + (in.z - m.u * m.vz.transpose()).squaredNorm();
}

}  // namespace detail

namespace {

void check_fit_input(const LinkedDataset& data) {
  data.validate();
  if (!data.fully_observed())
    throw ValidationError("data has missing entries; use the imputation routines");
  if (!data.x.allFinite() || !data.y.allFinite() || !data.z.allFinite())
    throw ValidationError("non-finite data");
}

JointFit run_joint(const LinkedDataset& data, JointModel model, const AlsOptions& opts, int degenerate) {
  const detail::SweepInputs in{data.x, data.y, data.z};
  JointFit fit;
  fit.report.degenerate_solves = degenerate;
  fit.report.data_ss = data.x.squaredNorm() + data.y.squaredNorm() + data.z.squaredNorm();
  if (model.rank() == 0) {
    fit.report.final_sse = detail::joint_sse(in, model);
    fit.report.sse_trace.push_back(fit.report.final_sse);
    fit.report.converged = true;
    fit_monitor::record(fit.report);
    fit.model = model;
    fit.structure = joint_structure(model);
    return fit;
  }
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opts.max_iterations; ++it) {
    detail::sweep(in, model, &fit.report.degenerate_solves);
    const double sse = detail::joint_sse(in, model);
    if (!std::isfinite(sse)) throw NumericalError("ALS diverged: non-finite SSE");
    fit.report.sse_trace.push_back(sse);
    fit.report.iterations = it;
    if (previous - sse < opts.tolerance) {
      fit.report.converged = true;
      break;
    }
    previous = sse;
  }
  fit.model = canonicalize(model);
  fit.structure = joint_structure(fit.model);
  fit.report.final_sse = fit.report.sse_trace.back();
  fit_monitor::record(fit.report);
  return fit;
}

}  // namespace

JointFit fit_joint(const LinkedDataset& data, int rank, const AlsOptions& opts) {
  check_fit_input(data);
  opts.validate();
  RankSpec{rank, 0, 0, 0}.validate(data);
  int degenerate = 0;
  JointModel model = detail::initialize({data.x, data.y, data.z}, rank, opts, &degenerate);
  return run_joint(data, std::move(model), opts, degenerate);
}

JointFit fit_joint(const LinkedDataset& data, const JointModel& warm_start, const AlsOptions& opts) {
  check_fit_input(data);
  opts.validate();
  RankSpec{warm_start.rank(), 0, 0, 0}.validate(data);
  if (warm_start.u.rows() != data.m1() || warm_start.v.rows() != data.n1() || warm_start.uy.rows() != data.m2() ||
      warm_start.vz.rows() != data.n2())
    throw ValidationError("warm start factors do not match the data shape");
  return run_joint(data, warm_start, opts, 0);
}

}  // namespace lmf
