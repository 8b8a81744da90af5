#include "lmf/jive.hpp"

#include <cmath>
#include <thread>

namespace lmf {

Decomposition JiveModel::components() const {
  const JointStructure j = joint_structure(joint);
  Decomposition d;
  d.jx = j.jx;
  d.jy = j.jy;
  d.jz = j.jz;
  d.ax = ax.matrix();
  d.ay = ay.matrix();
  d.az = az.matrix();
  return d;
}

namespace {

struct JiveState {
  int joint_rank = 0;
  JointModel joint;
  bool joint_ready = false;
  Matrix jx, jy, jz;
  Matrix ax, ay, az;
  LowRank fx, fy, fz;
};

void check_input(const LinkedDataset& data, const RankSpec& ranks, const AlsOptions& opts) {
  data.validate();
  if (!data.fully_observed()) throw ValidationError("data has missing entries; use the imputation routines");
  if (!data.x.allFinite() || !data.y.allFinite() || !data.z.allFinite()) throw ValidationError("non-finite data");
  ranks.validate(data);
  opts.validate();
}

void joint_step(const LinkedDataset& data, JiveState& s, const AlsOptions& opts, int* degenerate) {
  const Matrix xj = data.x - s.ax;
  const Matrix yj = data.y - s.ay;
  const Matrix zj = data.z - s.az;
  const detail::SweepInputs in{xj, yj, zj};
  if (!s.joint_ready) {
    s.joint = detail::initialize(in, s.joint_rank, opts, degenerate);
    s.joint_ready = true;
  }
  if (s.joint.rank() == 0) return;
  detail::sweep(in, s.joint, degenerate);
  const JointStructure j = joint_structure(s.joint);
  s.jx = j.jx;
  s.jy = j.jy;
  s.jz = j.jz;
}

void individual_step(const LinkedDataset& data, const RankSpec& ranks, JiveState& s) {
  if (ranks.x > 0) {
    s.fx = truncated_svd(data.x - s.jx, ranks.x);
    s.ax = s.fx.matrix();
  }
  if (ranks.y > 0) {
    s.fy = truncated_svd(data.y - s.jy, ranks.y);
    s.ay = s.fy.matrix();
  }
  if (ranks.z > 0) {
    s.fz = truncated_svd(data.z - s.jz, ranks.z);
    s.az = s.fz.matrix();
  }
}

JiveFit run(const LinkedDataset& data, const RankSpec& ranks, EstimationOrder order, JiveState s,
            const AlsOptions& opts) {
  JiveFit fit;
  fit.report.data_ss = data.x.squaredNorm() + data.y.squaredNorm() + data.z.squaredNorm();
  int& degenerate = fit.report.degenerate_solves;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const Matrix jx0 = s.jx, jy0 = s.jy, jz0 = s.jz, ax0 = s.ax, ay0 = s.ay, az0 = s.az;
    if (order == EstimationOrder::JointFirst) {
      joint_step(data, s, opts, &degenerate);
      individual_step(data, ranks, s);
    } else {
      individual_step(data, ranks, s);
      joint_step(data, s, opts, &degenerate);
    }
    const double change = (s.jx - jx0).squaredNorm() + (s.jy - jy0).squaredNorm() + (s.jz - jz0).squaredNorm() +
                          (s.ax - ax0).squaredNorm() + (s.ay - ay0).squaredNorm() + (s.az - az0).squaredNorm();
    const double sse = (data.x - s.jx - s.ax).squaredNorm() + (data.y - s.jy - s.ay).squaredNorm() +
                       (data.z - s.jz - s.az).squaredNorm();
    if (!std::isfinite(sse)) throw NumericalError("LMF-JIVE diverged: non-finite SSE");
    fit.report.sse_trace.push_back(sse);
    fit.report.iterations = it;
    if (change < opts.tolerance) {
      fit.report.converged = true;
      break;
    }
  }
  fit.report.final_sse = fit.report.sse_trace.back();
  fit_monitor::record(fit.report);
  fit.model.joint = canonicalize(s.joint);
  fit.model.ax = std::move(s.fx);
  fit.model.ay = std::move(s.fy);
  fit.model.az = std::move(s.fz);
  fit.model.ranks = ranks;
  return fit;
}

JiveState zero_state(const LinkedDataset& data, int joint_rank) {
  JiveState s;
  s.joint_rank = joint_rank;
  s.joint = JointModel::empty(data.m1(), data.n1(), data.m2(), data.n2());
  s.jx = Matrix::Zero(data.m1(), data.n1());
  s.jy = Matrix::Zero(data.m2(), data.n1());
  s.jz = Matrix::Zero(data.m1(), data.n2());
  s.ax = s.jx;
  s.ay = s.jy;
  s.az = s.jz;
  s.fx = LowRank::zero(data.m1(), data.n1());
  s.fy = LowRank::zero(data.m2(), data.n1());
  s.fz = LowRank::zero(data.m1(), data.n2());
  return s;
}

// With no individual structure the decomposition is the joint fit itself;
// delegating keeps the two bit-identical, stopping rule included.
JiveFit from_joint(const LinkedDataset& data, const RankSpec& ranks, JointFit joint) {
  JiveFit fit;
  fit.model.joint = std::move(joint.model);
  fit.model.ax = LowRank::zero(data.m1(), data.n1());
  fit.model.ay = LowRank::zero(data.m2(), data.n1());
  fit.model.az = LowRank::zero(data.m1(), data.n2());
  fit.model.ranks = ranks;
  fit.report = std::move(joint.report);
  return fit;
}

bool joint_only(const RankSpec& r) { return r.x == 0 && r.y == 0 && r.z == 0; }

}  // namespace

JiveFit fit_jive(const LinkedDataset& data, const RankSpec& ranks, EstimationOrder order, const AlsOptions& opts) {
  check_input(data, ranks, opts);
  if (joint_only(ranks)) return from_joint(data, ranks, fit_joint(data, ranks.joint, opts));
  return run(data, ranks, order, zero_state(data, ranks.joint), opts);
}

JiveFit fit_jive(const LinkedDataset& data, const JiveModel& warm, const AlsOptions& opts) {
  check_input(data, warm.ranks, opts);
  const JointModel& j = warm.joint;
  if (j.rank() != warm.ranks.joint || j.u.rows() != data.m1() || j.v.rows() != data.n1() ||
      j.uy.rows() != data.m2() || j.vz.rows() != data.n2())
    throw ValidationError("warm start does not match the data shape or ranks");
  if (joint_only(warm.ranks)) return from_joint(data, warm.ranks, fit_joint(data, j, opts));
  JiveState s = zero_state(data, warm.ranks.joint);
  s.joint = j;
  s.joint_ready = true;
  const JointStructure js = joint_structure(j);
  s.jx = js.jx;
  s.jy = js.jy;
  s.jz = js.jz;
  auto restore = [](const LowRank& f, Matrix& a, LowRank& dst) {
    if (f.rank() == 0) return;
    if (f.u.rows() != a.rows() || f.v.rows() != a.cols())
      throw ValidationError("warm start individual factors do not match the data shape");
    dst = f;
    a = f.matrix();
  };
  restore(warm.ax, s.ax, s.fx);
  restore(warm.ay, s.ay, s.fy);
  restore(warm.az, s.az, s.fz);
  return run(data, warm.ranks, EstimationOrder::JointFirst, std::move(s), opts);
}

JiveFit fit_jive_best_order(const LinkedDataset& data, const RankSpec& ranks, const AlsOptions& opts, int threads) {
  check_input(data, ranks, opts);
  JiveFit joint_first, individual_first;
  if (threads > 1) {
    std::exception_ptr error;
    std::thread worker([&] {
      try {
        individual_first = fit_jive(data, ranks, EstimationOrder::IndividualFirst, opts);
      } catch (...) {
        error = std::current_exception();
      }
    });
    joint_first = fit_jive(data, ranks, EstimationOrder::JointFirst, opts);
    worker.join();
    if (error) std::rethrow_exception(error);
  } else {
    joint_first = fit_jive(data, ranks, EstimationOrder::JointFirst, opts);
    individual_first = fit_jive(data, ranks, EstimationOrder::IndividualFirst, opts);
  }
  return individual_first.report.final_sse < joint_first.report.final_sse ? individual_first : joint_first;
}

JiveModel orthogonalize(const JiveModel& model) {
  const JointModel& j = model.joint;
  const Eigen::Index r = j.rank();
  JiveModel out = model;
  out.orthogonalized = true;
  if (r == 0) return out;
  constexpr double kOrthoTol = 1e-8;
  const Matrix eye = Matrix::Identity(r, r);
  if ((j.u.transpose() * j.u - eye).cwiseAbs().maxCoeff() > kOrthoTol ||
      (j.v.transpose() * j.v - eye).cwiseAbs().maxCoeff() > kOrthoTol)
    throw ValidationError("factors not orthonormal");

  // Drops directions whose singular value is at rounding level relative to
  // the pre-projection scale; the projection can only lower the rank.
  auto refactor = [](const Matrix& a, int max_rank, double scale) {
    LowRank f = truncated_svd(a, max_rank);
    if (f.rank() == 0) return f;
    const double cutoff = scale * 1e-12 * static_cast<double>(std::max(a.rows(), a.cols()));
    Eigen::Index keep = 0;
    while (keep < f.rank() && f.s(keep) > cutoff) ++keep;
    return LowRank{f.u.leftCols(keep), f.s.head(keep), f.v.leftCols(keep)};
  };

  if (model.ay.rank() > 0) {
    const Matrix a = model.ay.matrix();
    const Matrix av = a * j.v;
    out.joint.uy = j.uy + av;
    out.ay = refactor(a - av * j.v.transpose(), model.ranks.y, model.ay.s(0));
  }
  if (model.az.rank() > 0) {
    const Matrix a = model.az.matrix();
    const Matrix ua = j.u.transpose() * a;  // r x n2
    out.joint.vz = j.vz + ua.transpose();
    out.az = refactor(a - j.u * ua, model.ranks.z, model.az.s(0));
  }
  return out;
}

bool verify_identifiability(const JiveModel& a, const JiveModel& b, double tol) {
  const Decomposition da = a.components();
  const Decomposition db = b.components();
  auto close = [tol](const Matrix& p, const Matrix& q) {
    if (p.rows() != q.rows() || p.cols() != q.cols()) throw ValidationError("verify_identifiability: shape mismatch");
    return p.size() == 0 || (p - q).cwiseAbs().maxCoeff() <= tol;
  };
  // Evaluate all six so shape errors surface regardless of order.
  const bool jx = close(da.jx, db.jx), jy = close(da.jy, db.jy), jz = close(da.jz, db.jz);
  const bool ax = close(da.ax, db.ax), ay = close(da.ay, db.ay), az = close(da.az, db.az);
  return jx && jy && jz && ax && ay && az;
}

}  // namespace lmf
