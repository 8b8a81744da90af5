#include "doctest.h"
#include "helpers.hpp"

#include "lmf/core_model.hpp"
#include "lmf/joint.hpp"
#include "lmf/simulation.hpp"

#include <vector>

using namespace lmf;
using lmf::test::max_abs;

namespace {

double relative_gap(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

JointModel random_model(Rng& rng, Eigen::Index m1, Eigen::Index n1, Eigen::Index m2, Eigen::Index n2, int r) {
  return JointModel{rng.normal_matrix(m1, r), rng.normal_matrix(n1, r), rng.normal_matrix(r, 1).col(0),
                    rng.normal_matrix(m2, r), rng.normal_matrix(n2, r)};
}

}  // namespace

TEST_SUITE("joint_factorization") {

TEST_CASE("S_x diagonal from the explicit design matrix") {
  Rng rng(21);
  const Matrix x = rng.normal_matrix(5, 5);
  const Matrix u = test::orthonormal(rng, 5, 2);
  const Matrix v = test::orthonormal(rng, 5, 2);
  Matrix w(25, 2);
  for (int k = 0; k < 2; ++k) {
    const Matrix outer = u.col(k) * v.col(k).transpose();
    w.col(k) = Eigen::Map<const Vector>(outer.data(), 25);
  }
  const Vector brute = (w.transpose() * w).ldlt().solve(w.transpose() * Eigen::Map<const Vector>(x.data(), 25));
  const Vector s = solve_sx_diagonal(x, u, v);
  CHECK(max_abs(s - brute) < 1e-12);

  // Non-orthogonal factors exercise the off-diagonal terms of W^T W.
  const Matrix u2 = rng.normal_matrix(5, 3), v2 = rng.normal_matrix(5, 3);
  Matrix w2(25, 3);
  for (int k = 0; k < 3; ++k) {
    const Matrix outer = u2.col(k) * v2.col(k).transpose();
    w2.col(k) = Eigen::Map<const Vector>(outer.data(), 25);
  }
  const Vector brute2 = (w2.transpose() * w2).ldlt().solve(w2.transpose() * Eigen::Map<const Vector>(x.data(), 25));
  CHECK(max_abs(solve_sx_diagonal(x, u2, v2) - brute2) < 1e-10);
}

TEST_CASE("S_x of a single scaled outer product") {
  Rng rng(3);
  const Matrix u = test::orthonormal(rng, 4, 1), v = test::orthonormal(rng, 6, 1);
  CHECK(solve_sx_diagonal(3.0 * u * v.transpose(), u, v)(0) == doctest::Approx(3.0));

  // X orthogonal to every u_i v_i^T direction.
  const Matrix basis = test::orthonormal(rng, 4, 2);
  const Matrix vb = test::orthonormal(rng, 6, 2);
  const Matrix x = basis.col(1) * vb.col(1).transpose();
  CHECK(std::abs(solve_sx_diagonal(x, basis.leftCols(1), vb.leftCols(1))(0)) < 1e-14);
}

TEST_CASE("diagonalize_sx keeps all three reconstructions") {
  Rng rng(31);
  const Matrix u = test::orthonormal(rng, 8, 4), v = test::orthonormal(rng, 7, 4);
  const Matrix s = rng.normal_matrix(4, 4), uy = rng.normal_matrix(6, 4), vz = rng.normal_matrix(5, 4);
  const JointModel m = diagonalize_sx(u, s, v, uy, vz);
  const JointStructure j = joint_structure(m);
  CHECK(relative_gap(j.jx, u * s * v.transpose()) < 1e-12);
  CHECK(relative_gap(j.jy, uy * v.transpose()) < 1e-12);
  CHECK(relative_gap(j.jz, u * vz.transpose()) < 1e-12);
  for (int k = 1; k < 4; ++k) CHECK(m.sx(k - 1) >= m.sx(k));
  CHECK(m.sx.minCoeff() >= 0.0);
}

TEST_CASE("diagonalize_sx fixed point and zero S") {
  Rng rng(32);
  const Matrix u = test::orthonormal(rng, 6, 3), v = test::orthonormal(rng, 5, 3);
  const Vector d = (Vector(3) << 5.0, 2.0, 0.5).finished();
  const Matrix uy = rng.normal_matrix(4, 3), vz = rng.normal_matrix(4, 3);
  const JointModel m = diagonalize_sx(u, d.asDiagonal(), v, uy, vz);
  CHECK(max_abs(m.sx - d) < 1e-14);
  for (int k = 0; k < 3; ++k) {
    const double sign = m.u(0, k) * u(0, k) > 0 ? 1.0 : -1.0;
    CHECK(max_abs(m.u.col(k) - sign * u.col(k)) < 1e-14);
    CHECK(max_abs(m.v.col(k) - sign * v.col(k)) < 1e-14);
  }

  const JointModel z = diagonalize_sx(u, Matrix::Zero(3, 3), v, uy, vz);
  CHECK(z.sx.isZero());
  CHECK(joint_structure(z).jx.isZero());
}

TEST_CASE("rank zero fit returns zero structure and the total sum of squares") {
  Rng rng(4);
  const LinkedDataset d = test::random_linked(rng, 5, 4, 3, 6);
  const JointFit f = fit_joint(d, 0);
  CHECK(f.structure.jx.isZero());
  CHECK(f.structure.jy.isZero());
  CHECK(f.structure.jz.isZero());
  CHECK(f.report.final_sse == doctest::Approx(d.x.squaredNorm() + d.y.squaredNorm() + d.z.squaredNorm()));
}

TEST_CASE("input checks") {
  Rng rng(4);
  LinkedDataset d = test::random_linked(rng, 5, 4, 3, 6);
  CHECK_THROWS_WITH_AS(fit_joint(d, 4), doctest::Contains("rank too large"), ValidationError);
  d.y(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS(fit_joint(d, 1), doctest::Contains("non-finite data"), ValidationError);
  AlsOptions bad;
  bad.tolerance = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("every ALS step lowers the SSE") {
  Rng rng(41);
  const LinkedDataset d = center_and_scale(test::random_linked(rng, 12, 10, 9, 8));
  const detail::SweepInputs in{d.x, d.y, d.z};
  int degenerate = 0;
  JointModel m = detail::initialize(in, 3, AlsOptions{}, &degenerate);
  double prev = detail::joint_sse(in, m);
  int steps = 0;
  bool monotone = true;
  for (int sweep = 0; sweep < 20; ++sweep)
    detail::sweep(in, m, &degenerate, [&](const JointModel& cur) {
      const double sse = detail::joint_sse(in, cur);
      if (sse > prev * (1.0 + 1e-12) + 1e-15) monotone = false;
      prev = sse;
      ++steps;
    });
  CHECK(monotone);
  CHECK(steps == 20 * 7);
}

TEST_CASE("fitted factors are in canonical form") {
  Rng rng(42);
  const LinkedDataset d = center_and_scale(test::random_linked(rng, 15, 12, 10, 9));
  const JointFit f = fit_joint(d, 3);
  const JointModel& m = f.model;
  CHECK(max_abs(m.u.transpose() * m.u - Matrix::Identity(3, 3)) < 1e-10);
  CHECK(max_abs(m.v.transpose() * m.v - Matrix::Identity(3, 3)) < 1e-10);
  for (int k = 0; k < 3; ++k) CHECK(m.u(argmax_abs(m.u.col(k)), k) > 0.0);
  for (int k = 1; k < 3; ++k) CHECK(m.sx(k - 1) >= m.sx(k));
  CHECK(max_relative_increase(f.report) <= 1e-10);
  CHECK(f.report.converged);
}

TEST_CASE("structures scale with the data") {
  Rng rng(43);
  const LinkedDataset d = center_and_scale(test::random_linked(rng, 10, 9, 8, 7));
  LinkedDataset scaled = d;
  scaled.x *= 3.0;
  scaled.y *= 3.0;
  scaled.z *= 3.0;
  AlsOptions opts;
  opts.tolerance = 1e-14;
  opts.max_iterations = 20000;
  const JointFit a = fit_joint(d, 2, opts);
  opts.tolerance = 9e-14;
  const JointFit b = fit_joint(scaled, 2, opts);
  CHECK(relative_gap(b.structure.jx, 3.0 * a.structure.jx) < 1e-6);
  CHECK(relative_gap(b.structure.jy, 3.0 * a.structure.jy) < 1e-6);
  CHECK(relative_gap(b.structure.jz, 3.0 * a.structure.jz) < 1e-6);
}

TEST_CASE("noiseless model data is recovered exactly") {
  SimDesign design;
  design.m1 = 20;
  design.n1 = 15;
  design.m2 = 12;
  design.n2 = 10;
  design.noise_sd = 0.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const SimulatedData sim = generate_linked(design, seed);
    AlsOptions opts;
    opts.tolerance = 1e-20;
    opts.max_iterations = 20000;
    const JointFit f = fit_joint(sim.data, 2, opts);
    Decomposition est = zero_decomposition(sim.data);
    est.jx = f.structure.jx;
    est.jy = f.structure.jy;
    est.jz = f.structure.jz;
    const double total = sim.data.x.squaredNorm() + sim.data.y.squaredNorm() + sim.data.z.squaredNorm();
    CHECK(reconstruction_error(sim.truth, est) < 1e-6);
    CHECK(f.report.final_sse < 1e-10 * total);
  }
}

TEST_CASE("warm start from a converged model stops at once") {
  Rng rng(44);
  const LinkedDataset d = center_and_scale(test::random_linked(rng, 10, 9, 8, 7));
  const JointFit a = fit_joint(d, 2);
  const JointFit b = fit_joint(d, a.model);
  CHECK(b.report.iterations <= 2);
  CHECK(b.report.final_sse <= a.report.final_sse * (1.0 + 1e-12));
}

TEST_CASE("random initialization depends only on the seed") {
  Rng rng(45);
  const LinkedDataset d = center_and_scale(test::random_linked(rng, 10, 9, 8, 7));
  AlsOptions opts;
  opts.init = InitMethod::Random;
  opts.seed = 77;
  const JointFit a = fit_joint(d, 2, opts), b = fit_joint(d, 2, opts);
  CHECK(max_abs(a.structure.jx - b.structure.jx) == 0.0);
}

TEST_CASE("frozen fit on a seeded design") {
  const SimulatedData sim = generate_linked(SimDesign{}, 42);
  const LinkedDataset d = center_and_scale(sim.data);
  const JointFit f = fit_joint(d, 2);
  CHECK(f.report.final_sse == doctest::Approx(1.2188726432153287).epsilon(1e-9));
  CHECK(f.model.sx(0) == doctest::Approx(0.56578025090140527).epsilon(1e-8));
}

}
