#include "lmf/rank_selection.hpp"

#include "lmf/parallel.hpp"
#include "lmf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <map>

namespace lmf {
namespace {

// Empirical quantile: the ceil(p * n)-th smallest value.
double upper_quantile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto idx = static_cast<std::ptrdiff_t>(std::ceil(p * n)) - 1;
  idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(values.size()) - 1);
  return values[static_cast<std::size_t>(idx)];
}

Vector leading_singular_values(const Matrix& m, int k) {
  if (k <= 0) return Vector(0);
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues().head(k);
}

int scan_individual(const Vector& observed, const std::vector<Vector>& permuted, double percentile) {
  int rank = 0;
  for (Eigen::Index k = 0; k < observed.size(); ++k) {
    std::vector<double> null;
    null.reserve(permuted.size());
    for (const Vector& s : permuted) null.push_back(s(k));
    if (observed(k) > upper_quantile(null, percentile))
      rank = static_cast<int>(k) + 1;
    else
      break;
  }
  return rank;
}

void check_complete(const LinkedDataset& data) {
  data.validate();
  if (!data.fully_observed()) throw ValidationError("rank selection needs fully observed data");
  if (!data.x.allFinite() || !data.y.allFinite() || !data.z.allFinite()) throw ValidationError("non-finite data");
}

}  // namespace

void PermutationOptions::validate() const {
  if (r_max < 1 || rx_max < 1 || ry_max < 1 || rz_max < 1) throw ValidationError("maximum ranks must be positive");
  if (n_permutations < 1) throw ValidationError("n_permutations must be positive");
  if (!(percentile > 0.0 && percentile < 1.0)) throw ValidationError("percentile must lie in (0, 1)");
  if (static_cast<double>(n_permutations) * (1.0 - percentile) < 1.0 - 1e-9)
    throw ValidationError("too few permutations for the requested percentile");
  if (max_outer_cycles < 1) throw ValidationError("max_outer_cycles must be positive");
  als.validate();
}

void CvSelectionOptions::validate() const {
  for (double f : {row_fraction, col_fraction, entry_fraction})
    if (!(f > 0.0 && f < 0.5)) throw ValidationError("holdout fractions must lie in (0, 0.5)");
  impute.validate();
}

std::vector<double> joint_rank_ssr_profile(const Matrix& x, const Matrix& y, const Matrix& z, int r_max,
                                           const AlsOptions& opts) {
  LinkedDataset ds;
  ds.x = x;
  ds.y = y;
  ds.z = z;
  check_complete(ds);
  if (r_max < 1) throw ValidationError("r_max must be positive");
  RankSpec{r_max, 0, 0, 0}.validate(ds);
  std::vector<double> profile;
  profile.reserve(static_cast<std::size_t>(r_max));
  for (int k = 0; k < r_max; ++k) {
    const JointFit fit = fit_joint(ds, 1, opts);
    profile.push_back(fit.report.final_sse);
    ds.x -= fit.structure.jx;
    ds.y -= fit.structure.jy;
    ds.z -= fit.structure.jz;
  }
  return profile;
}

int select_joint_rank(const Matrix& x, const Matrix& y, const Matrix& z, const PermutationOptions& opts,
                      std::uint64_t stream) {
  opts.validate();
  const int r_max = static_cast<int>(std::min({static_cast<Eigen::Index>(opts.r_max), x.rows(), x.cols(),
                                               y.rows(), z.cols()}));
  const std::vector<double> observed = joint_rank_ssr_profile(x, y, z, r_max, opts.als);

  std::vector<std::vector<double>> null(static_cast<std::size_t>(opts.n_permutations));
  parallel_for(opts.n_permutations, opts.threads, [&](int p) {
    Rng rng(derive_seed(opts.seed, stream, static_cast<std::uint64_t>(p)));
    const auto col_perm = rng.permutation(y.cols());
    const auto row_perm = rng.permutation(z.rows());
    Matrix yp(y.rows(), y.cols());
    Matrix zp(z.rows(), z.cols());
    for (Eigen::Index j = 0; j < y.cols(); ++j) yp.col(j) = y.col(col_perm[static_cast<std::size_t>(j)]);
    for (Eigen::Index i = 0; i < z.rows(); ++i) zp.row(i) = z.row(row_perm[static_cast<std::size_t>(i)]);
    null[static_cast<std::size_t>(p)] = joint_rank_ssr_profile(x, yp, zp, r_max, opts.als);
  });

  if (opts.rule == JointRankRule::Literal) {
    int selected = 0;
    for (int k = 0; k < r_max; ++k) {
      std::vector<double> values;
      for (const auto& prof : null) values.push_back(prof[static_cast<std::size_t>(k)]);
      if (observed[static_cast<std::size_t>(k)] > upper_quantile(values, opts.percentile)) selected = k + 1;
    }
    return selected;
  }
  if (opts.rule == JointRankRule::Flipped) {
    int selected = 0;
    for (int k = 0; k < r_max; ++k) {
      std::vector<double> values;
      for (const auto& prof : null) values.push_back(-prof[static_cast<std::size_t>(k)]);
      if (-observed[static_cast<std::size_t>(k)] > upper_quantile(values, opts.percentile)) selected = k + 1;
    }
    return selected;
  }

  // Permuting columns of Y and rows of Z keeps every matrix norm, so all
  // profiles start from the same total sum of squares.
  const double start = x.squaredNorm() + y.squaredNorm() + z.squaredNorm();
  auto drop = [start](const std::vector<double>& prof, int k) {
    const double before = k == 0 ? start : prof[static_cast<std::size_t>(k - 1)];
    return before - prof[static_cast<std::size_t>(k)];
  };
  int selected = 0;
  for (int k = 0; k < r_max; ++k) {
    std::vector<double> values;
    for (const auto& prof : null) values.push_back(drop(prof, k));
    if (drop(observed, k) > upper_quantile(values, opts.percentile))
      selected = k + 1;
    else
      break;
  }
  return selected;
}

IndividualRanks select_individual_ranks(const Matrix& x, const Matrix& y, const Matrix& z,
                                        const PermutationOptions& opts, std::uint64_t stream) {
  opts.validate();
  auto cap = [](int r, const Matrix& m) { return static_cast<int>(std::min<Eigen::Index>(r, std::min(m.rows(), m.cols()))); };
  const int kx = cap(opts.rx_max, x), ky = cap(opts.ry_max, y), kz = cap(opts.rz_max, z);
  const Vector sx = leading_singular_values(x, kx);
  const Vector sy = leading_singular_values(y, ky);
  const Vector sz = leading_singular_values(z, kz);

  const auto n = static_cast<std::size_t>(opts.n_permutations);
  std::vector<Vector> px(n), py(n), pz(n);
  parallel_for(opts.n_permutations, opts.threads, [&](int p) {
    Rng rng(derive_seed(opts.seed, stream, static_cast<std::uint64_t>(p)));
    Matrix xp = x;
    std::vector<double> all(xp.data(), xp.data() + xp.size());
    rng.shuffle(all);
    std::copy(all.begin(), all.end(), xp.data());

    Matrix yp = y;
    for (Eigen::Index i = 0; i < yp.rows(); ++i) {
      const auto perm = rng.permutation(yp.cols());
      for (Eigen::Index j = 0; j < yp.cols(); ++j) yp(i, j) = y(i, perm[static_cast<std::size_t>(j)]);
    }
    Matrix zp = z;
    for (Eigen::Index j = 0; j < zp.cols(); ++j) {
      const auto perm = rng.permutation(zp.rows());
      for (Eigen::Index i = 0; i < zp.rows(); ++i) zp(i, j) = z(perm[static_cast<std::size_t>(i)], j);
    }
    const auto idx = static_cast<std::size_t>(p);
    px[idx] = leading_singular_values(xp, kx);
    py[idx] = leading_singular_values(yp, ky);
    pz[idx] = leading_singular_values(zp, kz);
  });
  return IndividualRanks{scan_individual(sx, px, opts.percentile), scan_individual(sy, py, opts.percentile),
                         scan_individual(sz, pz, opts.percentile)};
}

RankSelection select_ranks_permutation(const LinkedDataset& data, const PermutationOptions& opts) {
  check_complete(data);
  opts.validate();
  RankSelection out;
  RankSpec current{0, 0, 0, 0};
  Decomposition parts = zero_decomposition(data);
  for (int cycle = 0; cycle < opts.max_outer_cycles; ++cycle) {
    const auto stream = static_cast<std::uint64_t>(2 * cycle);
    const int r = select_joint_rank(data.x - parts.ax, data.y - parts.ay, data.z - parts.az, opts, stream);
    RankSpec next{r, current.x, current.y, current.z};
    parts = fit_jive(data, next, EstimationOrder::JointFirst, opts.als).model.components();

    const IndividualRanks ind =
        select_individual_ranks(data.x - parts.jx, data.y - parts.jy, data.z - parts.jz, opts, stream + 1);
    next = RankSpec{r, ind.x, ind.y, ind.z};
    parts = fit_jive(data, next, EstimationOrder::JointFirst, opts.als).model.components();
    out.path.push_back(next);
    if (next == current) {
      out.converged = true;
      break;
    }
    current = next;
  }
  out.ranks = out.path.back();
  return out;
}

MissingPattern random_holdout(Eigen::Index m, Eigen::Index n, double row_fraction, double col_fraction,
                              double entry_fraction, std::uint64_t seed) {
  Rng rng(seed);
  auto count = [](double f, Eigen::Index size) {
    return std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::llround(f * static_cast<double>(size))), 1,
                                    std::max<Eigen::Index>(size - 1, 1));
  };
  MissingPattern p;
  for (Eigen::Index i : rng.sample(m, count(row_fraction, m))) p.rows.insert(i);
  for (Eigen::Index j : rng.sample(n, count(col_fraction, n))) p.cols.insert(j);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> remaining;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i)
      if (!p.rows.count(i) && !p.cols.count(j)) remaining.emplace_back(i, j);
  const auto k = static_cast<Eigen::Index>(std::llround(entry_fraction * static_cast<double>(remaining.size())));
  for (Eigen::Index idx : rng.sample(static_cast<Eigen::Index>(remaining.size()), k))
    p.entries.insert(remaining[static_cast<std::size_t>(idx)]);
  return p;
}

RankSelection select_ranks_cv(const LinkedDataset& data, const CvSelectionOptions& opts) {
  check_complete(data);
  opts.validate();
  const MissingPattern holdout =
      random_holdout(data.m1(), data.n1(), opts.row_fraction, opts.col_fraction, opts.entry_fraction, opts.seed);
  LinkedDataset masked = data;
  masked.mask_x = holdout.mask(data.m1(), data.n1());

  auto key = [](const RankSpec& r) { return std::array<int, 4>{r.joint, r.x, r.y, r.z}; };
  std::map<std::array<int, 4>, double> cache;
  auto score = [&](const RankSpec& r) {
    ImputeOptions io = opts.impute;
    io.ranks = r;
    const ImputeResult res = impute(masked, holdout, io, ImputeMethod::Jive);
    return imputation_sse(res.x_hat, data.x, holdout, CellClass::AllMissing);
  };
  auto within_bounds = [&](const RankSpec& r) {
    try {
      r.validate(data);
      return true;
    } catch (const ValidationError&) {
      return false;
    }
  };

  RankSelection out;
  RankSpec current{0, 0, 0, 0};
  double best = score(current);
  cache[key(current)] = best;
  out.path.push_back(current);
  out.sse_path.push_back(best);

  for (;;) {
    std::vector<RankSpec> candidates;
    for (int c = 0; c < 4; ++c) {
      for (int delta : {+1, -1}) {
        if (delta < 0 && opts.search == SearchMode::Forward) continue;
        RankSpec cand = current;
        int* slot[4] = {&cand.joint, &cand.x, &cand.y, &cand.z};
        *slot[c] += delta;
        if (*slot[c] < 0 || !within_bounds(cand)) continue;
        candidates.push_back(cand);
      }
    }
    std::vector<double> scores(candidates.size());
    parallel_for(static_cast<int>(candidates.size()), opts.threads, [&](int i) {
      const auto idx = static_cast<std::size_t>(i);
      const auto hit = cache.find(key(candidates[idx]));
      scores[idx] = hit != cache.end() ? hit->second : score(candidates[idx]);
    });
    std::size_t arg = candidates.size();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      cache[key(candidates[i])] = scores[i];
      if (scores[i] < best && (arg == candidates.size() || scores[i] < scores[arg])) arg = i;
    }
    if (arg == candidates.size()) break;
    current = candidates[arg];
    best = scores[arg];
    out.path.push_back(current);
    out.sse_path.push_back(best);
  }
  out.ranks = current;
  out.converged = true;
  return out;
}

}  // namespace lmf
