#include "lmf/simulation.hpp"

#include "lmf/core_model.hpp"
#include "lmf/parallel.hpp"
#include "lmf/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace lmf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream ids that keep the studies' random draws apart.
enum Stream : std::uint64_t {
  kDataStream = 1,
  kRankStream = 2,
  kPatternStream = 3,
  kSelectStream = 5,
  kFoldStream = 6,
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? kNaN : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return kNaN;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

Decomposition joint_only(const JointStructure& s, const LinkedDataset& data) {
  Decomposition d = zero_decomposition(data);
  d.jx = s.jx;
  d.jy = s.jy;
  d.jz = s.jz;
  return d;
}

// Fitting happens on the preprocessed scale when requested; the estimate is
// mapped back (offsets go into the joint part) so errors are on the data scale.
Decomposition to_data_scale(Decomposition d, const PreprocessInfo& info) {
  d.jx = restore_scale(d.jx, info.x);
  d.jy = restore_scale(d.jy, info.y);
  d.jz = restore_scale(d.jz, info.z);
  d.ax *= info.x.scale;
  d.ay *= info.y.scale;
  d.az *= info.z.scale;
  return d;
}

std::vector<std::uint64_t> replicate_seeds(std::uint64_t master, std::uint64_t stream, int n) {
  std::vector<std::uint64_t> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = derive_seed(master, stream, static_cast<std::uint64_t>(k));
  return out;
}

RankSpec random_ranks(Rng& rng, int max_rank) {
  const auto draw = [&] { return static_cast<int>(rng.below(static_cast<std::uint64_t>(max_rank + 1))); };
  RankSpec r;
  r.joint = draw();
  r.x = draw();
  r.y = draw();
  r.z = draw();
  return r;
}

double fit_increase(const FitReport& r) { return max_relative_increase(r); }

}  // namespace

void SimDesign::validate() const {
  if (m1 < 1 || n1 < 1 || m2 < 1 || n2 < 1) throw ValidationError("dimensions must be positive");
  if (replicates < 1) throw ValidationError("replicates must be at least 1");
  if (!(joint_sd >= 0.0) || !(individual_sd >= 0.0) || !(noise_sd >= 0.0))
    throw ValidationError("standard deviations must be nonnegative");
  LinkedDataset shape;
  shape.x = Matrix::Zero(m1, n1);
  shape.y = Matrix::Zero(m2, n1);
  shape.z = Matrix::Zero(m1, n2);
  ranks.validate(shape);
}

nlohmann::json SimDesign::to_json() const {
  return {{"m1", m1},
          {"n1", n1},
          {"m2", m2},
          {"n2", n2},
          {"ranks", {{"joint", ranks.joint}, {"x", ranks.x}, {"y", ranks.y}, {"z", ranks.z}}},
          {"joint_sd", joint_sd},
          {"individual_sd", individual_sd},
          {"noise_sd", noise_sd},
          {"replicates", replicates},
          {"seed", seed}};
}

SimulatedData generate_linked(const SimDesign& design, std::uint64_t seed) {
  return generate_linked(design, design.ranks, seed);
}

SimulatedData generate_linked(const SimDesign& design, const RankSpec& ranks, std::uint64_t seed) {
  SimDesign d = design;
  d.ranks = ranks;
  d.validate();
  Rng rng(seed);
  const double js = d.joint_sd, is = d.individual_sd;

  SimulatedData out;
  JointModel& j = out.joint_truth;
  j.u = rng.normal_matrix(d.m1, ranks.joint, js);
  j.sx = rng.normal_matrix(ranks.joint, 1, js).col(0);
  j.v = rng.normal_matrix(d.n1, ranks.joint, js);
  j.uy = rng.normal_matrix(d.m2, ranks.joint, js);
  j.vz = rng.normal_matrix(d.n2, ranks.joint, js);
  const Matrix uix = rng.normal_matrix(d.m1, ranks.x, is);
  const Matrix vix = rng.normal_matrix(d.n1, ranks.x, is);
  const Matrix uiy = rng.normal_matrix(d.m2, ranks.y, is);
  const Matrix viy = rng.normal_matrix(d.n1, ranks.y, is);
  const Matrix uiz = rng.normal_matrix(d.m1, ranks.z, is);
  const Matrix viz = rng.normal_matrix(d.n2, ranks.z, is);
  out.noise_x = rng.normal_matrix(d.m1, d.n1, d.noise_sd);
  out.noise_y = rng.normal_matrix(d.m2, d.n1, d.noise_sd);
  out.noise_z = rng.normal_matrix(d.m1, d.n2, d.noise_sd);

  Decomposition& t = out.truth;
  t.jx = j.u * j.sx.asDiagonal() * j.v.transpose();
  t.jy = j.uy * j.v.transpose();
  t.jz = j.u * j.vz.transpose();
  t.ax = uix * vix.transpose();
  t.ay = uiy * viy.transpose();
  t.az = uiz * viz.transpose();

  out.data.x = t.jx + t.ax + out.noise_x;
  out.data.y = t.jy + t.ay + out.noise_y;
  out.data.z = t.jz + t.az + out.noise_z;
  return out;
}

// ---- StudyReport

std::size_t StudyReport::column_index(const std::string& column) const {
  for (std::size_t c = 0; c < columns.size(); ++c)
    if (columns[c] == column) return c;
  throw ValidationError("unknown report column: " + column);
}

std::vector<double> StudyReport::values(const std::string& group, const std::string& column) const {
  const std::size_t c = column_index(column);
  std::vector<double> out;
  for (const auto& row : rows)
    if (row.group == group && std::isfinite(row.values[c])) out.push_back(row.values[c]);
  return out;
}

StudyReport::Summary StudyReport::summary(const std::string& group, const std::string& column) const {
  const auto v = values(group, column);
  return Summary{group, column, mean_of(v), sd_of(v), static_cast<int>(v.size())};
}

std::vector<StudyReport::Summary> StudyReport::summarize() const {
  std::vector<std::string> groups;
  for (const auto& row : rows)
    if (std::find(groups.begin(), groups.end(), row.group) == groups.end()) groups.push_back(row.group);
  std::vector<Summary> out;
  for (const auto& g : groups)
    for (const auto& c : columns) {
      Summary s = summary(g, c);
      if (s.n > 0) out.push_back(s);
    }
  return out;
}

namespace {
nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }
}  // namespace

nlohmann::json StudyReport::to_json() const {
  nlohmann::json j;
  j["study"] = study;
  j["version"] = version;
  j["design"] = design;
  j["columns"] = columns;
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json values_json = nlohmann::json::array();
    for (double v : row.values) values_json.push_back(number_or_null(v));
    rows_json.push_back({{"group", row.group}, {"replicate", row.replicate}, {"values", values_json}});
  }
  j["rows"] = rows_json;
  nlohmann::json summary_json = nlohmann::json::array();
  for (const auto& s : summarize())
    summary_json.push_back(
        {{"group", s.group}, {"column", s.column}, {"mean", number_or_null(s.mean)}, {"sd", number_or_null(s.sd)}, {"n", s.n}});
  j["summary"] = summary_json;
  if (!extras.empty()) j["extras"] = extras;
  return j;
}

std::string StudyReport::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "group,replicate";
  for (const auto& c : columns) os << ',' << c;
  os << '\n';
  for (const auto& row : rows) {
    os << row.group << ',' << row.replicate;
    for (double v : row.values) {
      os << ',';
      if (std::isfinite(v))
        os << v;
      else
        os << "NA";
    }
    os << '\n';
  }
  return os.str();
}

// ---- studies

StudyReport run_joint_study(const SimDesign& design, const StudyOptions& opts) {
  design.validate();
  StudyReport report;
  report.study = "joint-study";
  report.design = design.to_json();
  report.design["preprocess"] = opts.preprocess;
  report.columns = {"e_rec", "e_res", "iterations", "converged", "final_sse", "max_sse_increase"};
  report.rows.resize(static_cast<std::size_t>(design.replicates));
  const auto seeds = replicate_seeds(design.seed, kDataStream, design.replicates);

  parallel_for(design.replicates, opts.threads, [&](int k) {
    const SimulatedData sim = generate_linked(design, seeds[static_cast<std::size_t>(k)]);
    const LinkedDataset fit_data = opts.preprocess ? center_and_scale(sim.data) : sim.data;
    const JointFit fit = fit_joint(fit_data, design.ranks.joint, opts.als);
    const Decomposition est = to_data_scale(joint_only(fit.structure, fit_data), fit_data.preprocessing);
    report.rows[static_cast<std::size_t>(k)] =
        StudyReport::Row{"all", k,
                         {reconstruction_error(sim.truth, est), residual_error(sim.data, est),
                          static_cast<double>(fit.report.iterations), fit.report.converged ? 1.0 : 0.0,
                          fit.report.final_sse, fit_increase(fit.report)}};
  });
  return report;
}

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw ValidationError("correlation needs two equal-length series");
  const double ma = mean_of(a), mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw ValidationError("correlation of a constant series");
  return sab / std::sqrt(saa * sbb);
}

StudyReport run_noise_sweep(const SimDesign& design, const std::vector<double>& variances,
                            const StudyOptions& opts) {
  design.validate();
  if (variances.empty()) throw ValidationError("noise sweep needs at least one variance");
  for (double v : variances)
    if (!(v >= 0.0)) throw ValidationError("noise variances must be nonnegative");
  StudyReport report;
  report.study = "noise-sweep";
  report.design = design.to_json();
  report.design["variances"] = variances;
  report.design["preprocess"] = opts.preprocess;
  report.columns = {"noise_variance", "e_rec", "e_res", "iterations", "converged", "max_sse_increase"};
  const int n = static_cast<int>(variances.size());
  report.rows.resize(variances.size());
  const auto seeds = replicate_seeds(design.seed, kDataStream, n);

  parallel_for(n, opts.threads, [&](int k) {
    SimDesign d = design;
    d.noise_sd = std::sqrt(variances[static_cast<std::size_t>(k)]);
    const SimulatedData sim = generate_linked(d, seeds[static_cast<std::size_t>(k)]);
    const LinkedDataset fit_data = opts.preprocess ? center_and_scale(sim.data) : sim.data;
    const JointFit fit = fit_joint(fit_data, d.ranks.joint, opts.als);
    const Decomposition est = to_data_scale(joint_only(fit.structure, fit_data), fit_data.preprocessing);
    report.rows[static_cast<std::size_t>(k)] = StudyReport::Row{
        "all", k,
        {variances[static_cast<std::size_t>(k)], reconstruction_error(sim.truth, est), residual_error(sim.data, est),
         static_cast<double>(fit.report.iterations), fit.report.converged ? 1.0 : 0.0, fit_increase(fit.report)}};
  });

  std::vector<double> var, rec, res;
  for (const auto& row : report.rows) {
    var.push_back(row.values[0]);
    rec.push_back(row.values[1]);
    res.push_back(row.values[2]);
  }
  if (n >= 2) {
    report.extras["correlation_variance_e_rec"] = pearson_correlation(var, rec);
    report.extras["correlation_variance_e_res"] = pearson_correlation(var, res);
  }
  return report;
}

StudyReport run_jive_study(const SimDesign& design, const StudyOptions& opts) {
  design.validate();
  struct Setting {
    const char* name;
    double joint_sd, individual_sd;
  };
  const std::vector<Setting> settings{{"equal", 1.0, 1.0}, {"higher-joint", 3.0, 1.0}, {"higher-individual", 1.0, 3.0}};

  StudyReport report;
  report.study = "jive-study";
  report.design = design.to_json();
  report.design["preprocess"] = opts.preprocess;
  report.design["settings"] = nlohmann::json::array();
  for (const auto& s : settings)
    report.design["settings"].push_back({{"name", s.name}, {"joint_sd", s.joint_sd}, {"individual_sd", s.individual_sd}});
  report.columns = {"jo_e_rec", "jf_e_rec", "if_e_rec", "jo_e_res", "jf_e_res",
                    "if_e_res", "jo_sse",   "jf_sse",   "if_sse",   "max_sse_increase",
                    "jo_converged", "jf_converged", "if_converged"};
  const int reps = design.replicates;
  const int jobs = reps * static_cast<int>(settings.size());
  report.rows.resize(static_cast<std::size_t>(jobs));

  parallel_for(jobs, opts.threads, [&](int job) {
    const int si = job / reps, k = job % reps;
    const Setting& s = settings[static_cast<std::size_t>(si)];
    SimDesign d = design;
    d.joint_sd = s.joint_sd;
    d.individual_sd = s.individual_sd;
    const SimulatedData sim =
        generate_linked(d, derive_seed(design.seed, kDataStream + 16 * static_cast<std::uint64_t>(si), static_cast<std::uint64_t>(k)));
    const LinkedDataset fit_data = opts.preprocess ? center_and_scale(sim.data) : sim.data;

    const JointFit jo = fit_joint(fit_data, d.ranks.joint, opts.als);
    const JiveFit jf = fit_jive(fit_data, d.ranks, EstimationOrder::JointFirst, opts.als);
    const JiveFit iff = fit_jive(fit_data, d.ranks, EstimationOrder::IndividualFirst, opts.als);
    const Decomposition e_jo = to_data_scale(joint_only(jo.structure, fit_data), fit_data.preprocessing);
    const Decomposition e_jf = to_data_scale(jf.model.components(), fit_data.preprocessing);
    const Decomposition e_if = to_data_scale(iff.model.components(), fit_data.preprocessing);
    const double worst =
        std::max({fit_increase(jo.report), fit_increase(jf.report), fit_increase(iff.report)});
    report.rows[static_cast<std::size_t>(job)] = StudyReport::Row{
        s.name, k,
        {reconstruction_error(sim.truth, e_jo), reconstruction_error(sim.truth, e_jf),
         reconstruction_error(sim.truth, e_if), residual_error(sim.data, e_jo), residual_error(sim.data, e_jf),
         residual_error(sim.data, e_if), jo.report.final_sse, jf.report.final_sse, iff.report.final_sse, worst,
         jo.report.converged ? 1.0 : 0.0, jf.report.converged ? 1.0 : 0.0, iff.report.converged ? 1.0 : 0.0}};
  });
  return report;
}

std::vector<ImputationSetting> imputation_settings(const ImputationStudyOptions& opts) {
  std::vector<ImputationSetting> settings;
  for (Eigen::Index side : opts.side_dims)
    for (double var : opts.noise_variances) {
      std::ostringstream name;
      name << "side=" << side << ",var=" << var;
      settings.push_back({side, var, name.str()});
    }
  return settings;
}

ImputationReplicate imputation_replicate(const SimDesign& design, const ImputationStudyOptions& opts, int setting,
                                         int replicate) {
  const auto settings = imputation_settings(opts);
  if (setting < 0 || setting >= static_cast<int>(settings.size())) throw ValidationError("setting out of range");
  const ImputationSetting& s = settings[static_cast<std::size_t>(setting)];
  ImputationReplicate rep;
  rep.design = design;
  rep.design.m2 = s.side;
  rep.design.n2 = s.side;
  rep.design.noise_sd = std::sqrt(s.variance);
  const std::uint64_t stream = 16 * static_cast<std::uint64_t>(setting);
  const auto k = static_cast<std::uint64_t>(replicate);
  Rng rank_rng(derive_seed(design.seed, kRankStream + stream, k));
  rep.ranks = random_ranks(rank_rng, opts.max_rank);
  rep.sim = generate_linked(rep.design, rep.ranks, derive_seed(design.seed, kDataStream + stream, k));

  const SimDesign& d = rep.design;
  Rng pat_rng(derive_seed(design.seed, kPatternStream + stream, k));
  for (auto i : pat_rng.sample(d.m1, opts.missing_rows)) rep.pattern.rows.insert(i);
  for (auto j : pat_rng.sample(d.n1, opts.missing_cols)) rep.pattern.cols.insert(j);
  for (auto c : pat_rng.sample(d.m1 * d.n1, opts.missing_entries)) {
    const Eigen::Index i = c % d.m1, j = c / d.m1;
    if (!rep.pattern.rows.count(i) && !rep.pattern.cols.count(j)) rep.pattern.entries.insert({i, j});
  }
  return rep;
}

StudyReport run_imputation_study(const SimDesign& design, const ImputationStudyOptions& opts) {
  design.validate();
  if (opts.side_dims.empty() || opts.noise_variances.empty()) throw ValidationError("empty imputation study grid");
  if (opts.max_rank < 0) throw ValidationError("max_rank must be nonnegative");
  if (opts.missing_rows < 1 || opts.missing_cols < 1 || opts.missing_entries < 1)
    throw ValidationError("imputation study needs missing rows, columns and entries");

  StudyReport report;
  report.study = "imputation-study";
  report.design = design.to_json();
  report.design["side_dims"] = opts.side_dims;
  report.design["noise_variances"] = opts.noise_variances;
  report.design["missing"] = {{"rows", opts.missing_rows}, {"cols", opts.missing_cols}, {"entries", opts.missing_entries}};
  report.design["max_rank"] = opts.max_rank;
  report.design["preprocess"] = opts.study.preprocess;
  report.columns = {"rank_joint", "rank_x", "rank_y", "rank_z",
                    "rc_svd_x", "rc_lmf_x", "rc_jive_x", "rc_svd_true", "rc_lmf_true", "rc_jive_true", "rc_oracle",
                    "en_svd_x", "en_lmf_x", "en_jive_x", "en_svd_true", "en_lmf_true", "en_jive_true", "en_oracle",
                    "outer_svd", "outer_lmf", "outer_jive", "converged_all", "max_sse_increase"};

  const auto settings = imputation_settings(opts);
  const int reps = design.replicates;
  const int jobs = reps * static_cast<int>(settings.size());
  report.rows.resize(static_cast<std::size_t>(jobs));

  parallel_for(jobs, opts.study.threads, [&](int job) {
    const int si = job / reps, k = job % reps;
    const ImputationSetting& s = settings[static_cast<std::size_t>(si)];
    const ImputationReplicate rep = imputation_replicate(design, opts, si, k);
    const SimulatedData& sim = rep.sim;
    const MissingPattern& pattern = rep.pattern;
    const RankSpec& ranks = rep.ranks;
    const SimDesign& d = rep.design;

    LinkedDataset masked = sim.data;
    masked.mask_x = pattern.mask(d.m1, d.n1);
    for (Eigen::Index j = 0; j < d.n1; ++j)
      for (Eigen::Index i = 0; i < d.m1; ++i)
        if (!(*masked.mask_x)(i, j)) masked.x(i, j) = kNaN;
    const LinkedDataset fit_data = opts.study.preprocess ? center_and_scale(masked) : masked;

    ImputeOptions io;
    io.ranks = ranks;
    io.inner = opts.study.als;
    io.outer_tolerance = opts.outer_tolerance;
    io.outer_max_iterations = opts.outer_max_iterations;

    const Matrix x_true = sim.truth.jx + sim.truth.ax;
    std::vector<double> values;
    values.reserve(report.columns.size());
    values.insert(values.end(), {static_cast<double>(ranks.joint), static_cast<double>(ranks.x),
                                 static_cast<double>(ranks.y), static_cast<double>(ranks.z)});

    const std::array<ImputeMethod, 3> methods{ImputeMethod::SvdOnly, ImputeMethod::JointOnly, ImputeMethod::Jive};
    std::array<Matrix, 3> estimates;
    std::array<int, 3> outer{};
    bool converged = true;
    double worst = 0.0;
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const ImputeResult r = impute(fit_data, pattern, io, methods[mi]);
      estimates[mi] = restore_scale(r.x_hat, fit_data.preprocessing.x);
      outer[mi] = r.report.iterations;
      converged = converged && r.report.converged;
      worst = std::max(worst, r.worst_inner_increase);
    }
    const auto err = [&](const Matrix& est, const Matrix& ref, CellClass c) {
      try {
        return imputation_error(est, ref, pattern, c);
      } catch (const ValidationError&) {
        return kNaN;  // no cells of this class, or an all-zero reference
      }
    };
    const Matrix zero = Matrix::Zero(d.m1, d.n1);
    for (CellClass c : {CellClass::RowColMissing, CellClass::EntryMissing}) {
      for (std::size_t mi = 0; mi < 3; ++mi) values.push_back(err(estimates[mi], sim.data.x, c));
      for (std::size_t mi = 0; mi < 3; ++mi) values.push_back(err(estimates[mi], x_true, c));
      // Oracle: the imputation that recovers the truth exactly leaves only the noise.
      values.push_back(err(x_true, sim.data.x, c));
    }
    values.insert(values.end(), {static_cast<double>(outer[0]), static_cast<double>(outer[1]),
                                 static_cast<double>(outer[2]), converged ? 1.0 : 0.0, worst});
    report.rows[static_cast<std::size_t>(job)] = StudyReport::Row{s.name, k, std::move(values)};
  });
  return report;
}

StudyReport run_rank_selection_study(const SimDesign& design, RankMethod method, const RankStudyOptions& opts) {
  design.validate();
  if (opts.max_rank < 0) throw ValidationError("max_rank must be nonnegative");
  StudyReport report;
  report.study = method == RankMethod::Permutation ? "rank-permutation-study" : "rank-cv-study";
  report.design = design.to_json();
  report.design["max_rank"] = opts.max_rank;
  report.design["preprocess"] = opts.study.preprocess;
  report.columns = {"true_joint", "true_x", "true_y", "true_z", "sel_joint", "sel_x", "sel_y", "sel_z", "converged"};
  const int reps = design.replicates;
  report.rows.resize(static_cast<std::size_t>(reps));

  parallel_for(reps, opts.study.threads, [&](int k) {
    Rng rank_rng(derive_seed(design.seed, kRankStream, static_cast<std::uint64_t>(k)));
    const RankSpec truth = random_ranks(rank_rng, opts.max_rank);
    const SimulatedData sim = generate_linked(design, truth, derive_seed(design.seed, kDataStream, static_cast<std::uint64_t>(k)));
    const LinkedDataset fit_data = opts.study.preprocess ? center_and_scale(sim.data) : sim.data;
    const std::uint64_t sel_seed = derive_seed(design.seed, kSelectStream, static_cast<std::uint64_t>(k));
    RankSelection sel;
    if (method == RankMethod::Permutation) {
      PermutationOptions p = opts.permutation;
      p.seed = sel_seed;
      p.als = opts.study.als;
      p.threads = 1;
      sel = select_ranks_permutation(fit_data, p);
    } else {
      CvSelectionOptions c = opts.cv;
      c.seed = sel_seed;
      c.impute.inner = opts.study.als;
      c.threads = 1;
      sel = select_ranks_cv(fit_data, c);
    }
    report.rows[static_cast<std::size_t>(k)] = StudyReport::Row{
        "all", k,
        {static_cast<double>(truth.joint), static_cast<double>(truth.x), static_cast<double>(truth.y),
         static_cast<double>(truth.z), static_cast<double>(sel.ranks.joint), static_cast<double>(sel.ranks.x),
         static_cast<double>(sel.ranks.y), static_cast<double>(sel.ranks.z), sel.converged ? 1.0 : 0.0}};
  });

  const std::array<const char*, 4> names{"joint", "x", "y", "z"};
  for (std::size_t c = 0; c < names.size(); ++c) {
    int under = 0, over = 0, correct = 0;
    double abs_dev = 0.0;
    for (const auto& row : report.rows) {
      const double t = row.values[c], s = row.values[c + 4];
      if (s < t) ++under;
      else if (s > t) ++over;
      else ++correct;
      abs_dev += std::abs(s - t);
    }
    const double n = static_cast<double>(report.rows.size());
    report.extras[names[c]] = {{"under", under / n}, {"over", over / n}, {"correct", correct / n}, {"mad", abs_dev / n}};
  }
  return report;
}

StudyReport run_structured_cv_study(const SimDesign& design, int folds, const ImputeOptions& impute_opts, int threads,
                                    bool preprocess) {
  design.validate();
  StudyReport report;
  report.study = "structured-cv";
  report.design = design.to_json();
  report.design["folds"] = folds;
  report.design["preprocess"] = preprocess;
  report.columns = {"svd_both", "svd_col", "svd_row", "svd_entry", "lmf_both", "lmf_col", "lmf_row", "lmf_entry",
                    "jive_both", "jive_col", "jive_row", "jive_entry", "nonconverged_folds"};
  const int reps = design.replicates;
  report.rows.resize(static_cast<std::size_t>(reps));

  parallel_for(reps, threads, [&](int k) {
    const SimulatedData sim = generate_linked(design, derive_seed(design.seed, kDataStream, static_cast<std::uint64_t>(k)));
    const LinkedDataset fit_data = preprocess ? center_and_scale(sim.data) : sim.data;
    const std::uint64_t fold_seed = derive_seed(design.seed, kFoldStream, static_cast<std::uint64_t>(k));
    ImputeOptions io = impute_opts;
    io.ranks = design.ranks;
    std::vector<double> values;
    int nonconverged = 0;
    for (ImputeMethod m : {ImputeMethod::SvdOnly, ImputeMethod::JointOnly, ImputeMethod::Jive}) {
      const CvBreakdown b = structured_cross_validation(fit_data, folds, io, m, fold_seed, 1);
      values.insert(values.end(), {b.both, b.col_only, b.row_only, b.entry});
      nonconverged += b.nonconverged_folds;
    }
    values.push_back(static_cast<double>(nonconverged));
    report.rows[static_cast<std::size_t>(k)] = StudyReport::Row{"all", k, std::move(values)};
  });
  return report;
}

}  // namespace lmf
