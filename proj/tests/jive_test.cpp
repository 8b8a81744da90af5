#include "doctest.h"
#include "helpers.hpp"

#include "lmf/core_model.hpp"
#include "lmf/jive.hpp"
#include "lmf/simulation.hpp"

using namespace lmf;
using lmf::test::max_abs;

namespace {

LinkedDataset noisy(std::uint64_t seed) {
  SimDesign design;
  design.m1 = 20;
  design.n1 = 18;
  design.m2 = 15;
  design.n2 = 12;
  design.ranks = {2, 2, 2, 2};
  return center_and_scale(generate_linked(design, seed).data);
}

}  // namespace

TEST_SUITE("jive_decomposition") {

TEST_CASE("empty individual ranks reduce to the joint fit") {
  const LinkedDataset d = noisy(1);
  const JiveFit j = fit_jive(d, RankSpec{2, 0, 0, 0});
  const JointFit f = fit_joint(d, 2);
  const Decomposition c = j.model.components();
  const JointStructure s = joint_structure(f.model);
  CHECK(max_abs(c.jx - s.jx) == 0.0);
  CHECK(max_abs(c.jy - s.jy) == 0.0);
  CHECK(max_abs(c.jz - s.jz) == 0.0);
  CHECK(j.report.sse_trace == f.report.sse_trace);
  CHECK(c.ax.isZero());
}

TEST_CASE("fit respects ranks and lowers the SSE") {
  const LinkedDataset d = noisy(2);
  for (auto order : {EstimationOrder::JointFirst, EstimationOrder::IndividualFirst}) {
    const JiveFit f = fit_jive(d, RankSpec{2, 1, 2, 3}, order);
    CHECK(f.model.ax.rank() <= 1);
    CHECK(f.model.ay.rank() <= 2);
    CHECK(f.model.az.rank() <= 3);
    CHECK(max_relative_increase(f.report) <= 1e-10);
    CHECK(residual_error(d, f.model.components()) <= 1.0);
    CHECK(f.report.final_sse == doctest::Approx(total_sse(d, f.model.components())).epsilon(1e-10));
  }
}

TEST_CASE("individual rank bounds are enforced") {
  const LinkedDataset d = noisy(3);
  CHECK_THROWS_WITH_AS(fit_jive(d, RankSpec{1, 0, 16, 0}), doctest::Contains("rank too large"), ValidationError);
}

TEST_CASE("best-order fit keeps the lower SSE") {
  const LinkedDataset d = noisy(4);
  const RankSpec r{2, 2, 2, 2};
  const JiveFit a = fit_jive(d, r, EstimationOrder::JointFirst);
  const JiveFit b = fit_jive(d, r, EstimationOrder::IndividualFirst);
  const JiveFit best = fit_jive_best_order(d, r, {}, 2);
  CHECK(best.report.final_sse == std::min(a.report.final_sse, b.report.final_sse));
}

TEST_CASE("orthogonalize removes the joint directions from A_y and A_z") {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const JiveFit f = fit_jive(noisy(seed), RankSpec{2, 2, 2, 2});
    const Decomposition before = f.model.components();
    const JiveModel o = orthogonalize(f.model);
    const Decomposition after = o.components();
    CHECK(o.orthogonalized);
    CHECK(max_abs(after.jy * after.ay.transpose()) < 1e-8);
    CHECK(max_abs(after.jz.transpose() * after.az) < 1e-8);
    CHECK(max_abs(after.jy + after.ay - before.jy - before.ay) < 1e-12);
    CHECK(max_abs(after.jz + after.az - before.jz - before.az) < 1e-12);
    CHECK(max_abs(after.jx - before.jx) == 0.0);
    CHECK(max_abs(after.ax - before.ax) == 0.0);

    const Decomposition again = orthogonalize(o).components();
    CHECK(max_abs(again.jy - after.jy) < 1e-10);
    CHECK(max_abs(again.az - after.az) < 1e-10);
  }
}

TEST_CASE("orthogonalize edge cases") {
  Rng rng(5);
  JiveModel m;
  m.joint = JointModel{test::orthonormal(rng, 6, 2), test::orthonormal(rng, 5, 2), Vector::Ones(2),
                       rng.normal_matrix(4, 2), rng.normal_matrix(3, 2)};
  m.ranks = {2, 0, 1, 0};
  m.ax = LowRank::zero(6, 5);
  m.az = LowRank::zero(6, 3);

  SUBCASE("A_y already orthogonal to row(V)") {
    const Matrix basis = test::orthonormal(rng, 5, 3);
    Matrix vperp = basis.col(2) - m.joint.v * (m.joint.v.transpose() * basis.col(2));
    vperp /= vperp.norm();
    m.ay = truncated_svd(rng.normal_matrix(4, 1) * vperp.transpose(), 1);
    const JiveModel o = orthogonalize(m);
    CHECK(max_abs(o.components().ay - m.components().ay) < 1e-12);
    CHECK(max_abs(o.components().jy - m.components().jy) < 1e-12);
  }
  SUBCASE("A_y inside row(V) is absorbed") {
    const Matrix ay = rng.normal_matrix(4, 1) * m.joint.v.col(0).transpose();
    m.ay = truncated_svd(ay, 1);
    const JiveModel o = orthogonalize(m);
    CHECK(max_abs(o.components().ay) < 1e-12);
    CHECK(max_abs(o.components().jy - m.components().jy - ay) < 1e-12);
  }
  SUBCASE("non-orthonormal factors are rejected") {
    m.ay = LowRank::zero(4, 5);
    m.joint.u *= 2.0;
    CHECK_THROWS_WITH_AS(orthogonalize(m), doctest::Contains("factors not orthonormal"), ValidationError);
  }
}

TEST_CASE("X's joint and individual parts are not orthogonalized") {
  const JiveFit f = fit_jive(noisy(20), RankSpec{2, 2, 2, 2});
  const JiveModel o = orthogonalize(f.model);
  const Matrix& u = o.joint.u;
  const Matrix& v = o.joint.v;
  const Matrix ax = o.components().ax;
  const Matrix row_part = ax * v * v.transpose();
  const Matrix col_part = u * u.transpose() * ax;
  CHECK((row_part - col_part).norm() > 1e-6 * ax.norm());
}

TEST_CASE("noiseless decompositions are identifiable") {
  SimDesign design;
  design.m1 = 20;
  design.n1 = 18;
  design.m2 = 15;
  design.n2 = 12;
  design.ranks = {2, 1, 1, 1};
  design.noise_sd = 0.0;
  const LinkedDataset d = generate_linked(design, 7).data;
  const double total = d.x.squaredNorm() + d.y.squaredNorm() + d.z.squaredNorm();
  AlsOptions opts;
  opts.tolerance = 1e-24;
  opts.max_iterations = 20000;
  const JiveFit a = fit_jive(d, design.ranks, EstimationOrder::JointFirst, opts);
  opts.init = InitMethod::Random;
  opts.seed = 99;
  const JiveFit b = fit_jive(d, design.ranks, EstimationOrder::IndividualFirst, opts);
  REQUIRE(a.report.final_sse < 1e-10 * total);
  REQUIRE(b.report.final_sse < 1e-10 * total);
  CHECK(verify_identifiability(orthogonalize(a.model), orthogonalize(b.model), 1e-6));
}

TEST_CASE("verify_identifiability") {
  const JiveFit f = fit_jive(noisy(30), RankSpec{1, 2, 0, 0});
  CHECK(verify_identifiability(f.model, f.model, 0.0));
  JiveModel swapped = f.model;
  swapped.joint = JointModel::empty(20, 18, 15, 12);
  swapped.ax = truncated_svd(f.model.components().jx, 1);
  CHECK_FALSE(verify_identifiability(f.model, swapped, 1e-6));
}

TEST_CASE("fixed point split of the Y variance") {
  const LinkedDataset d = noisy(40);
  AlsOptions opts;
  opts.tolerance = 1e-18;
  opts.max_iterations = 20000;
  const JiveModel o = orthogonalize(fit_jive(d, RankSpec{2, 2, 2, 2}, EstimationOrder::JointFirst, opts).model);
  const Decomposition c = o.components();
  const Matrix ey = d.y - c.jy - c.ay;
  const Matrix ez = d.z - c.jz - c.az;
  CHECK(std::abs((c.jy + c.ay).cwiseProduct(ey).sum()) < 1e-6 * d.y.squaredNorm());
  CHECK(std::abs((c.jz + c.az).cwiseProduct(ez).sum()) < 1e-6 * d.z.squaredNorm());
  CHECK(d.y.squaredNorm() ==
        doctest::Approx(c.jy.squaredNorm() + c.ay.squaredNorm() + ey.squaredNorm()).epsilon(1e-6));
}

}
