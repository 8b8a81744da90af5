#include "doctest.h"
#include "helpers.hpp"

#include "lmf/core_model.hpp"
#include "lmf/imputation.hpp"
#include "lmf/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

using namespace lmf;
using lmf::test::max_abs;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

LinkedDataset with_pattern(LinkedDataset d, const MissingPattern& p) {
  d.mask_x = p.mask(d.m1(), d.n1());
  for (Eigen::Index j = 0; j < d.n1(); ++j)
    for (Eigen::Index i = 0; i < d.m1(); ++i)
      if (!(*d.mask_x)(i, j)) d.x(i, j) = kNaN;
  return d;
}

}  // namespace

TEST_SUITE("imputation") {

TEST_CASE("initial values for an isolated hole") {
  const Matrix x = (Matrix(2, 2) << 1, 2, 3, kNaN).finished();
  const Mask obs = (Mask(2, 2) << true, true, true, false).finished();
  const Matrix init = initialize_missing(x, obs);
  CHECK(init(1, 1) == doctest::Approx(2.5));
  CHECK(init(0, 0) == 1.0);
  CHECK(init(1, 0) == 3.0);
}

TEST_CASE("initial values for a missing row and column") {
  const Matrix x = (Matrix(2, 2) << 1, kNaN, kNaN, kNaN).finished();
  const Mask obs = (Mask(2, 2) << true, false, false, false).finished();
  const Matrix init = initialize_missing(x, obs);
  CHECK(max_abs(init - Matrix::Ones(2, 2)) == 0.0);

  // Row and column means are distinct here.
  Matrix y = (Matrix(3, 3) << 1, 2, kNaN, 3, 6, kNaN, kNaN, kNaN, kNaN).finished();
  Mask o = Mask::Constant(3, 3, true);
  o.col(2).setConstant(false);
  o.row(2).setConstant(false);
  const Matrix iy = initialize_missing(y, o);
  CHECK(iy(0, 2) == doctest::Approx(1.5));  // row mean
  CHECK(iy(2, 0) == doctest::Approx(2.0));  // column mean
  CHECK(iy(2, 2) == doctest::Approx(3.0));  // overall mean
}

TEST_CASE("a constant matrix imputes its constant") {
  Matrix x = Matrix::Constant(4, 5, 5.0);
  Mask obs = Mask::Constant(4, 5, true);
  obs.row(1).setConstant(false);
  obs.col(3).setConstant(false);
  obs(2, 2) = false;
  CHECK(max_abs(initialize_missing(x, obs).array() - 5.0) < 1e-15);
  CHECK_THROWS_WITH_AS(initialize_missing(x, Mask::Constant(4, 5, false)), doctest::Contains("empty matrix"),
                       ValidationError);
}

TEST_CASE("cell classification") {
  MissingPattern p;
  p.rows = {1};
  p.cols = {2};
  p.entries = {{0, 0}};
  CHECK(p.classify(1, 2) == CellKind::BothMissing);
  CHECK(p.classify(1, 0) == CellKind::RowMissing);
  CHECK(p.classify(3, 2) == CellKind::ColMissing);
  CHECK(p.classify(0, 0) == CellKind::Entry);
  CHECK(p.classify(0, 1) == CellKind::Observed);
  const Mask m = p.mask(4, 4);
  CHECK(m.count() == 16 - 4 - 3 - 1);
  const MissingPattern back = MissingPattern::from_mask(m);
  CHECK(back.rows == p.rows);
  CHECK(back.cols == p.cols);
  CHECK(back.entries == p.entries);
}

TEST_CASE("imputation error") {
  Rng rng(1);
  const Matrix ref = rng.normal_matrix(6, 5);
  MissingPattern p;
  p.rows = {2};
  p.entries = {{0, 1}, {4, 4}};
  CHECK(imputation_error(ref, ref, p, CellClass::AllMissing) == 0.0);
  CHECK(imputation_error(Matrix::Zero(6, 5), ref, p, CellClass::AllMissing) == doctest::Approx(1.0));
  const Matrix est = rng.normal_matrix(6, 5);
  const double num = (est.row(2) - ref.row(2)).squaredNorm();
  CHECK(imputation_error(est, ref, p, CellClass::RowColMissing) ==
        doctest::Approx(num / ref.row(2).squaredNorm()).epsilon(1e-14));
  CHECK_THROWS_AS(imputation_error(est, ref, p, CellClass::ColOnly), ValidationError);
}

TEST_CASE("empty pattern returns the data") {
  Rng rng(2);
  const LinkedDataset d = center_and_scale(test::random_linked(rng, 8, 7, 6, 5));
  ImputeOptions opts;
  opts.ranks = {1, 1, 1, 1};
  const ImputeResult r = impute(d, MissingPattern{}, opts);
  CHECK(max_abs(r.x_hat - d.x) == 0.0);
  CHECK(r.report.iterations == 1);
  CHECK(r.report.converged);
}

TEST_CASE("a missing row is recovered through Z") {
  SimDesign design;
  design.m1 = 20;
  design.n1 = 16;
  design.m2 = 12;
  design.n2 = 14;
  design.noise_sd = 0.0;
  const SimulatedData sim = generate_linked(design, 5);
  MissingPattern p;
  p.rows = {3};
  ImputeOptions opts;
  opts.ranks = {2, 0, 0, 0};
  opts.inner.tolerance = 1e-20;
  opts.inner.max_iterations = 20000;
  opts.outer_tolerance = 1e-20;
  opts.outer_max_iterations = 20000;
  const LinkedDataset masked = with_pattern(sim.data, p);
  const ImputeResult r = impute(masked, p, opts, ImputeMethod::JointOnly);
  const double rel = (r.x_hat.row(3) - sim.data.x.row(3)).norm() / sim.data.x.row(3).norm();
  CHECK(rel < 1e-4);
}

TEST_CASE("observed cells are untouched and the total SSE never rises") {
  SimDesign design;
  design.m1 = 25;
  design.n1 = 20;
  design.m2 = 15;
  design.n2 = 15;
  design.ranks = {2, 1, 1, 1};
  const SimulatedData sim = generate_linked(design, 9);
  MissingPattern p;
  p.rows = {0, 7};
  p.cols = {4};
  p.entries = {{3, 3}, {10, 11}, {20, 2}};
  const LinkedDataset masked = center_and_scale(with_pattern(sim.data, p));
  ImputeOptions opts;
  opts.ranks = design.ranks;
  opts.inner.tolerance = 1e-14;
  opts.inner.max_iterations = 20000;
  opts.outer_tolerance = 1e-10;
  for (auto method : {ImputeMethod::Jive, ImputeMethod::JointOnly, ImputeMethod::SvdOnly}) {
    const ImputeResult r = impute(masked, p, opts, method);
    const Mask& obs = *masked.mask_x;
    bool same = true;
    for (Eigen::Index j = 0; j < obs.cols(); ++j)
      for (Eigen::Index i = 0; i < obs.rows(); ++i)
        if (obs(i, j) && r.x_hat(i, j) != masked.x(i, j)) same = false;
    CHECK(same);
    CHECK(r.x_hat.allFinite());
    CHECK(max_relative_increase(r.total_sse_trace) <= 1e-8);
    CHECK(r.worst_inner_increase <= 1e-10);
  }
}

TEST_CASE("zero ranks return the mean initialization") {
  Rng rng(3);
  LinkedDataset d = center_and_scale(test::random_linked(rng, 6, 6, 4, 4));
  MissingPattern p;
  p.entries = {{1, 1}};
  d = with_pattern(d, p);
  ImputeOptions opts;
  const ImputeResult r = impute(d, p, opts);
  CHECK(r.x_hat(1, 1) == doctest::Approx(initialize_missing(d.x, *d.mask_x)(1, 1)));
}

TEST_CASE("structured folds cover every row, column and cell once") {
  const Eigen::Index m = 23, n = 21;
  const int k = 5;
  const auto folds = structured_folds(m, n, k, 17);
  REQUIRE(folds.size() == static_cast<std::size_t>(k));
  std::vector<int> row_hits(m), col_hits(n);
  Eigen::MatrixXi cell_hits = Eigen::MatrixXi::Zero(m, n);
  for (const auto& f : folds) {
    for (auto i : f.rows) ++row_hits[static_cast<std::size_t>(i)];
    for (auto j : f.cols) ++col_hits[static_cast<std::size_t>(j)];
    for (auto [i, j] : f.entries) {
      CHECK(f.rows.count(i) == 0);
      CHECK(f.cols.count(j) == 0);
      ++cell_hits(i, j);
    }
  }
  CHECK(std::all_of(row_hits.begin(), row_hits.end(), [](int h) { return h == 1; }));
  CHECK(std::all_of(col_hits.begin(), col_hits.end(), [](int h) { return h == 1; }));
  CHECK(cell_hits.minCoeff() == 1);
  CHECK(cell_hits.maxCoeff() == 1);
  CHECK_THROWS_AS(structured_folds(10, 10, 2, 1), ValidationError);
  CHECK_THROWS_AS(structured_folds(4, 10, 5, 1), ValidationError);
}

TEST_CASE("structured cross-validation does not depend on thread count") {
  SimDesign design;
  design.m1 = 15;
  design.n1 = 15;
  design.m2 = 10;
  design.n2 = 10;
  design.ranks = {1, 1, 1, 1};
  const LinkedDataset d = center_and_scale(generate_linked(design, 2).data);
  ImputeOptions opts;
  opts.ranks = design.ranks;
  const CvBreakdown a = structured_cross_validation(d, 5, opts, ImputeMethod::Jive, 3, 1);
  const CvBreakdown b = structured_cross_validation(d, 5, opts, ImputeMethod::Jive, 3, 3);
  CHECK(a.both == b.both);
  CHECK(a.entry == b.entry);
  CHECK(a.folds == 5);
  CHECK(a.entry < 1.0);
}

}
