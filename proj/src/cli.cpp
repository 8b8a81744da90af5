#include "lmf/cli.hpp"

#include "lmf/core_model.hpp"
#include "lmf/csv.hpp"
#include "lmf/parallel.hpp"
#include "lmf/rng.hpp"
#include "lmf/simulation.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>

namespace lmf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  int threads = 0;  // 0 = LMF_THREADS or 1
  double tol = 1e-5;
  int max_iter = 5000;
  std::string init = "svd";
};

struct Inputs {
  std::string x, y, z;
  std::string center = "overall";
  bool no_preprocess = false;
};

struct Ranks {
  int joint = 0, x = 0, y = 0, z = 0;
  RankSpec spec() const { return RankSpec{joint, x, y, z}; }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--out", c.out, "Output directory")->capture_default_str();
  app->add_option("--seed", c.seed, "Master seed; a random one is drawn and logged when omitted");
  app->add_option("--threads", c.threads, "Worker threads (default: LMF_THREADS, else 1)")->check(CLI::NonNegativeNumber);
  app->add_option("--tol", c.tol, "Convergence tolerance")->capture_default_str();
  app->add_option("--max-iter", c.max_iter, "Maximum iterations")->capture_default_str();
  app->add_option("--init", c.init, "Initialization of the joint factors")
      ->check(CLI::IsMember({"svd", "random"}))
      ->capture_default_str();
}

void add_inputs(CLI::App* app, Inputs& in) {
  app->add_option("--x", in.x, "CSV for X (m1 x n1)")->required();
  app->add_option("--y", in.y, "CSV for Y (m2 x n1)")->required();
  app->add_option("--z", in.z, "CSV for Z (m1 x n2)")->required();
  app->add_option("--center", in.center, "Centering before scaling to unit norm")
      ->check(CLI::IsMember({"overall", "columns", "none"}))
      ->capture_default_str();
  app->add_flag("--no-preprocess", in.no_preprocess, "Fit the data as given, without centering or scaling");
}

void add_ranks(CLI::App* app, Ranks& r) {
  app->add_option("--rank", r.joint, "Joint rank")->check(CLI::NonNegativeNumber);
  app->add_option("--rank-x", r.x, "Individual rank of X")->check(CLI::NonNegativeNumber);
  app->add_option("--rank-y", r.y, "Individual rank of Y")->check(CLI::NonNegativeNumber);
  app->add_option("--rank-z", r.z, "Individual rank of Z")->check(CLI::NonNegativeNumber);
}

std::uint64_t resolve_seed(const Common& c, std::ostream& err) {
  if (c.seed) return *c.seed;
  std::random_device rd;
  const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  err << "seed: " << seed << "\n";
  return seed;
}

int resolve_threads(const Common& c) { return c.threads > 0 ? c.threads : default_threads(); }

AlsOptions als_options(const Common& c, std::uint64_t seed) {
  AlsOptions o;
  o.tolerance = c.tol;
  o.max_iterations = c.max_iter;
  o.seed = seed;
  o.init = c.init == "random" ? InitMethod::Random : InitMethod::Svd;
  o.validate();
  return o;
}

Centering centering(const std::string& s) {
  if (s == "columns") return Centering::Columns;
  if (s == "none") return Centering::None;
  return Centering::Overall;
}

struct Loaded {
  AlignedData aligned;
  LinkedDataset fit_data;  // preprocessed unless --no-preprocess
};

Loaded load(const Inputs& in) {
  Loaded l;
  l.aligned = align_linked(read_matrix_csv(in.x), read_matrix_csv(in.y), read_matrix_csv(in.z));
  l.fit_data = in.no_preprocess ? l.aligned.data : center_and_scale(l.aligned.data, centering(in.center));
  return l;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + dir + ": " + ec.message());
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << j.dump(2) << "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
}

json transform_json(const MatrixTransform& t) {
  json j{{"offset", t.offset}, {"scale", t.scale}};
  if (t.column_offsets.size() > 0) j["column_offsets"] = std::vector<double>(t.column_offsets.data(), t.column_offsets.data() + t.column_offsets.size());
  return j;
}

json preprocessing_json(const PreprocessInfo& p) {
  return {{"x", transform_json(p.x)}, {"y", transform_json(p.y)}, {"z", transform_json(p.z)}};
}

json ranks_json(const RankSpec& r) { return {{"joint", r.joint}, {"x", r.x}, {"y", r.y}, {"z", r.z}}; }

json report_json(const FitReport& r) {
  return {{"iterations", r.iterations},
          {"converged", r.converged},
          {"final_sse", r.final_sse},
          {"degenerate_solves", r.degenerate_solves},
          {"data_ss", r.data_ss},
          {"sse_trace", r.sse_trace}};
}

Matrix diag_matrix(const Vector& s) { return s.asDiagonal(); }

void write_factors(const std::string& dir, const JiveModel& m, const AlignedData& a) {
  const auto comp = [](const std::string& p, Eigen::Index n) { return numbered_ids(p, n); };
  const Eigen::Index r = m.joint.rank();
  const auto jc = comp("joint", r);
  write_matrix_csv(dir + "/U.csv", m.joint.u, a.x_rows, jc);
  write_matrix_csv(dir + "/V.csv", m.joint.v, a.x_cols, jc);
  write_matrix_csv(dir + "/S_x.csv", diag_matrix(m.joint.sx), jc, jc);
  write_matrix_csv(dir + "/U_y.csv", m.joint.uy, a.y_rows, jc);
  write_matrix_csv(dir + "/V_z.csv", m.joint.vz, a.z_cols, jc);

  const auto individual = [&](const std::string& name, const LowRank& f, const std::vector<std::string>& rows,
                              const std::vector<std::string>& cols) {
    const auto ic = comp(name + "_", f.rank());
    write_matrix_csv(dir + "/U_i" + name + ".csv", f.u, rows, ic);
    write_matrix_csv(dir + "/S_i" + name + ".csv", diag_matrix(f.s), ic, ic);
    write_matrix_csv(dir + "/V_i" + name + ".csv", f.v, cols, ic);
  };
  individual("x", m.ax, a.x_rows, a.x_cols);
  individual("y", m.ay, a.y_rows, a.x_cols);
  individual("z", m.az, a.x_rows, a.z_cols);

  const Decomposition d = m.components();
  write_matrix_csv(dir + "/J_x.csv", d.jx, a.x_rows, a.x_cols);
  write_matrix_csv(dir + "/J_y.csv", d.jy, a.y_rows, a.x_cols);
  write_matrix_csv(dir + "/J_z.csv", d.jz, a.x_rows, a.z_cols);
  write_matrix_csv(dir + "/A_x.csv", d.ax, a.x_rows, a.x_cols);
  write_matrix_csv(dir + "/A_y.csv", d.ay, a.y_rows, a.x_cols);
  write_matrix_csv(dir + "/A_z.csv", d.az, a.x_rows, a.z_cols);
}

// ---- fit

struct FitArgs {
  Common common;
  Inputs inputs;
  Ranks ranks;
  std::string order = "joint-first";
  bool orthogonalize_output = false;
};

int cmd_fit(const FitArgs& a, std::ostream& err) {
  const std::uint64_t seed = resolve_seed(a.common, err);
  const AlsOptions als = als_options(a.common, seed);
  const Loaded l = load(a.inputs);
  if (!l.fit_data.fully_observed())
    throw ValidationError("X has missing entries; use the impute command");
  const RankSpec ranks = a.ranks.spec();
  ranks.validate(l.fit_data);

  json orders = json::object();
  JiveFit best;
  std::string best_order;
  const auto consider = [&](EstimationOrder order, const std::string& name) {
    JiveFit fit = fit_jive(l.fit_data, ranks, order, als);
    orders[name] = report_json(fit.report);
    if (best_order.empty() || fit.report.final_sse < best.report.final_sse) {
      best = std::move(fit);
      best_order = name;
    }
  };
  if (a.order == "joint-first" || a.order == "both") consider(EstimationOrder::JointFirst, "joint-first");
  if (a.order == "individual-first" || a.order == "both") consider(EstimationOrder::IndividualFirst, "individual-first");
  if (a.orthogonalize_output) best.model = orthogonalize(best.model);

  ensure_dir(a.common.out);
  write_factors(a.common.out, best.model, l.aligned);
  const Decomposition d = best.model.components();
  json report{{"version", kVersion},
              {"command", "fit"},
              {"seed", seed},
              {"ranks", ranks_json(ranks)},
              {"order", best_order},
              {"orthogonalized", best.model.orthogonalized},
              {"preprocessed", !a.inputs.no_preprocess},
              {"preprocessing", preprocessing_json(l.fit_data.preprocessing)},
              {"residual_error", residual_error(l.fit_data, d)},
              {"fit", report_json(best.report)},
              {"orders", orders}};
  write_json(a.common.out + "/fit_report.json", report);
  err << "fit: order " << best_order << ", " << best.report.iterations << " iterations, SSE "
      << best.report.final_sse << (best.report.converged ? "" : " (not converged)") << "\n";
  return 0;
}

// ---- impute

struct ImputeArgs {
  Common common;
  Inputs inputs;
  Ranks ranks;
  std::string method = "jive";
  std::string order = "joint-first";
  std::string truth;
  double outer_tol = 1e-4;
  int outer_max_iter = 1000;
  int cv_folds = 0;
  bool structured = false;
};

ImputeMethod impute_method(const std::string& s) {
  if (s == "joint") return ImputeMethod::JointOnly;
  if (s == "svd") return ImputeMethod::SvdOnly;
  return ImputeMethod::Jive;
}

json error_breakdown(const Matrix& est, const Matrix& ref, const MissingPattern& p) {
  json j = json::object();
  const std::vector<std::pair<const char*, CellClass>> classes{
      {"all", CellClass::AllMissing}, {"row_col", CellClass::RowColMissing}, {"entry", CellClass::EntryMissing},
      {"both", CellClass::BothMissing}, {"row_only", CellClass::RowOnly}, {"col_only", CellClass::ColOnly}};
  for (const auto& [name, c] : classes) {
    try {
      j[name] = imputation_error(est, ref, p, c);
    } catch (const ValidationError&) {
      j[name] = nullptr;
    }
  }
  return j;
}

int cmd_impute(const ImputeArgs& a, std::ostream& err) {
  const std::uint64_t seed = resolve_seed(a.common, err);
  ImputeOptions io;
  io.inner = als_options(a.common, seed);
  io.ranks = a.ranks.spec();
  io.outer_tolerance = a.outer_tol;
  io.outer_max_iterations = a.outer_max_iter;
  io.order = a.order == "individual-first" ? EstimationOrder::IndividualFirst : EstimationOrder::JointFirst;
  io.validate();
  const ImputeMethod method = impute_method(a.method);
  const Loaded l = load(a.inputs);
  io.ranks.validate(l.fit_data);
  ensure_dir(a.common.out);

  if (a.cv_folds > 0) {
    if (!a.structured) throw ValidationError("--cv-folds requires --structured");
    const CvBreakdown b =
        structured_cross_validation(l.fit_data, a.cv_folds, io, method, derive_seed(seed, 6, 0), resolve_threads(a.common));
    json report{{"version", kVersion},
                {"command", "impute"},
                {"mode", "structured-cv"},
                {"seed", seed},
                {"method", a.method},
                {"folds", b.folds},
                {"ranks", ranks_json(io.ranks)},
                {"nonconverged_folds", b.nonconverged_folds},
                {"errors",
                 {{"both_missing", b.both}, {"col_missing", b.col_only}, {"row_missing", b.row_only}, {"entry_missing", b.entry}}}};
    write_json(a.common.out + "/cv_report.json", report);
    err << "structured cv: both " << b.both << ", column " << b.col_only << ", row " << b.row_only << ", entry "
        << b.entry << "\n";
    return 0;
  }
  if (a.structured) throw ValidationError("--structured requires --cv-folds");

  const Mask observed = l.fit_data.mask_x ? *l.fit_data.mask_x : Mask::Constant(l.fit_data.m1(), l.fit_data.n1(), true);
  const MissingPattern pattern = MissingPattern::from_mask(observed);
  const ImputeResult r = impute(l.fit_data, pattern, io, method);
  const Matrix x_hat = restore_scale(r.x_hat, l.fit_data.preprocessing.x);
  write_matrix_csv(a.common.out + "/X_imputed.csv", x_hat, l.aligned.x_rows, l.aligned.x_cols);

  json report{{"version", kVersion},
              {"command", "impute"},
              {"seed", seed},
              {"method", a.method},
              {"ranks", ranks_json(io.ranks)},
              {"missing", {{"rows", pattern.rows.size()}, {"cols", pattern.cols.size()}, {"entries", pattern.entries.size()}}},
              {"preprocessing", preprocessing_json(l.fit_data.preprocessing)},
              {"outer", report_json(r.report)},
              {"last_inner", report_json(r.last_inner)}};
  if (!a.truth.empty()) {
    const MatrixFile t = read_matrix_csv(a.truth);
    if (t.row_ids != l.aligned.x_rows || t.col_ids != l.aligned.x_cols)
      throw ValidationError(a.truth + ": identifiers differ from X");
    if (!t.complete()) throw ValidationError(a.truth + ": truth must be fully observed");
    const MatrixTransform& tx = l.fit_data.preprocessing.x;
    Matrix truth_scaled = t.values;
    if (tx.column_offsets.size() > 0) truth_scaled.rowwise() -= tx.column_offsets.transpose();
    truth_scaled = (truth_scaled.array() - tx.offset) / tx.scale;
    report["errors"] = error_breakdown(r.x_hat, truth_scaled, pattern);
    report["errors_data_scale"] = error_breakdown(x_hat, t.values, pattern);
  }
  write_json(a.common.out + "/impute_report.json", report);
  err << "impute: " << r.report.iterations << " outer iterations" << (r.report.converged ? "" : " (not converged)")
      << "\n";
  return 0;
}

// ---- ranks

struct RanksArgs {
  Common common;
  Inputs inputs;
  std::string method = "permutation";
  int max_rank = 6;
  int permutations = 100;
  double percentile = 0.95;
  std::string rule = "variance";
  std::string search = "forward";
  int max_cycles = 10;
};

int cmd_ranks(const RanksArgs& a, std::ostream& err) {
  const std::uint64_t seed = resolve_seed(a.common, err);
  const AlsOptions als = als_options(a.common, seed);
  const Loaded l = load(a.inputs);
  RankSelection sel;
  json settings;
  if (a.method == "permutation") {
    PermutationOptions p;
    p.r_max = p.rx_max = p.ry_max = p.rz_max = a.max_rank;
    p.n_permutations = a.permutations;
    p.percentile = a.percentile;
    p.seed = seed;
    p.max_outer_cycles = a.max_cycles;
    p.rule = a.rule == "literal"   ? JointRankRule::Literal
             : a.rule == "flipped" ? JointRankRule::Flipped
                                   : JointRankRule::VarianceExplained;
    p.als = als;
    p.threads = resolve_threads(a.common);
    sel = select_ranks_permutation(l.fit_data, p);
    settings = {{"max_rank", a.max_rank}, {"permutations", a.permutations}, {"percentile", a.percentile}, {"rule", a.rule}};
  } else {
    CvSelectionOptions c;
    c.seed = seed;
    c.impute.inner = als;
    c.search = a.search == "stepwise" ? SearchMode::Stepwise : SearchMode::Forward;
    c.threads = resolve_threads(a.common);
    sel = select_ranks_cv(l.fit_data, c);
    settings = {{"search", a.search}};
  }
  json path = json::array();
  for (const auto& r : sel.path) path.push_back(ranks_json(r));
  json report{{"version", kVersion}, {"command", "ranks"},  {"method", a.method},
              {"seed", seed},        {"settings", settings}, {"ranks", ranks_json(sel.ranks)},
              {"converged", sel.converged}, {"path", path}};
  if (!sel.sse_path.empty()) report["heldout_sse_path"] = sel.sse_path;
  ensure_dir(a.common.out);
  write_json(a.common.out + "/ranks.json", report);
  err << "ranks: " << sel.ranks.to_string() << (sel.converged ? "" : " (not converged)") << "\n";
  return 0;
}

// ---- simulate

struct SimulateArgs {
  Common common;
  std::string study;
  Ranks ranks{2, 0, 0, 0};
  bool ranks_set = false;
  Eigen::Index m1 = 50, n1 = 50, m2 = 50, n2 = 50;
  double joint_sd = 1.0, individual_sd = 1.0, noise_sd = 1.0;
  int replicates = 100;
  int folds = 20;
  int points = 100;
  bool no_preprocess = false;
};

SimDesign design_from(const SimulateArgs& a, std::uint64_t seed) {
  SimDesign d;
  d.m1 = a.m1;
  d.n1 = a.n1;
  d.m2 = a.m2;
  d.n2 = a.n2;
  d.ranks = a.ranks.spec();
  d.joint_sd = a.joint_sd;
  d.individual_sd = a.individual_sd;
  d.noise_sd = a.noise_sd;
  d.replicates = a.replicates;
  d.seed = seed;
  d.validate();
  return d;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& err) {
  const std::uint64_t seed = resolve_seed(a.common, err);
  const int threads = resolve_threads(a.common);
  StudyOptions so;
  so.als = als_options(a.common, seed);
  so.threads = threads;
  so.preprocess = !a.no_preprocess;
  SimulateArgs args = a;
  if (!a.ranks_set && (a.study == "jive-study" || a.study == "structured-cv")) args.ranks = Ranks{2, 2, 2, 2};
  const SimDesign design = design_from(args, seed);
  ensure_dir(a.common.out);

  if (a.study == "data") {
    const SimulatedData sim = generate_linked(design, derive_seed(seed, 1, 0));
    const auto rows = numbered_ids("r", design.m1), cols = numbered_ids("c", design.n1);
    const auto yrows = numbered_ids("y", design.m2), zcols = numbered_ids("z", design.n2);
    const std::string& o = a.common.out;
    write_matrix_csv(o + "/X.csv", sim.data.x, rows, cols);
    write_matrix_csv(o + "/Y.csv", sim.data.y, yrows, cols);
    write_matrix_csv(o + "/Z.csv", sim.data.z, rows, zcols);
    write_matrix_csv(o + "/J_x_true.csv", sim.truth.jx, rows, cols);
    write_matrix_csv(o + "/J_y_true.csv", sim.truth.jy, yrows, cols);
    write_matrix_csv(o + "/J_z_true.csv", sim.truth.jz, rows, zcols);
    write_matrix_csv(o + "/A_x_true.csv", sim.truth.ax, rows, cols);
    write_matrix_csv(o + "/A_y_true.csv", sim.truth.ay, yrows, cols);
    write_matrix_csv(o + "/A_z_true.csv", sim.truth.az, rows, zcols);
    write_matrix_csv(o + "/X_true.csv", sim.truth.jx + sim.truth.ax, rows, cols);
    write_json(o + "/design.json", json{{"version", kVersion}, {"design", design.to_json()}});
    err << "data written to " << o << "\n";
    return 0;
  }

  StudyReport report;
  if (a.study == "joint-study") {
    report = run_joint_study(design, so);
  } else if (a.study == "noise-sweep") {
    std::vector<double> variances;
    for (int i = 1; i <= a.points; ++i) variances.push_back(static_cast<double>(i) / a.points);
    report = run_noise_sweep(design, variances, so);
  } else if (a.study == "jive-study") {
    report = run_jive_study(design, so);
  } else if (a.study == "imputation-study") {
    ImputationStudyOptions io;
    io.study = so;
    report = run_imputation_study(design, io);
  } else if (a.study == "rank-permutation-study" || a.study == "rank-cv-study") {
    RankStudyOptions ro;
    ro.study = so;
    report = run_rank_selection_study(
        design, a.study == "rank-cv-study" ? RankMethod::CrossValidation : RankMethod::Permutation, ro);
  } else if (a.study == "structured-cv") {
    ImputeOptions io;
    io.inner = so.als;
    report = run_structured_cv_study(design, a.folds, io, threads, !a.no_preprocess);
  } else {
    throw ValidationError("unknown study: " + a.study);
  }
  write_json(a.common.out + "/" + a.study + ".json", report.to_json());
  write_text(a.common.out + "/" + a.study + ".csv", report.to_csv());
  for (const auto& s : report.summarize())
    err << s.group << " " << s.column << ": mean " << s.mean << " sd " << s.sd << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Linked matrix factorization of three linked matrices"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit LMF or LMF-JIVE and write factors, structures and a report");
  add_common(fit_cmd, fit.common);
  add_inputs(fit_cmd, fit.inputs);
  add_ranks(fit_cmd, fit.ranks);
  fit_cmd->add_option("--order", fit.order, "Estimation order")
      ->check(CLI::IsMember({"joint-first", "individual-first", "both"}))
      ->capture_default_str();
  fit_cmd->add_flag("--orthogonalize", fit.orthogonalize_output, "Make joint and individual Y/Z parts orthogonal");

  ImputeArgs imp;
  auto* imp_cmd = app.add_subcommand("impute", "Impute missing entries of X");
  add_common(imp_cmd, imp.common);
  add_inputs(imp_cmd, imp.inputs);
  add_ranks(imp_cmd, imp.ranks);
  imp_cmd->add_option("--method", imp.method, "Imputation model")
      ->check(CLI::IsMember({"jive", "joint", "svd"}))
      ->capture_default_str();
  imp_cmd->add_option("--order", imp.order, "Estimation order of the LMF-JIVE fits")
      ->check(CLI::IsMember({"joint-first", "individual-first"}))
      ->capture_default_str();
  imp_cmd->add_option("--truth", imp.truth, "CSV with the complete X, for error reporting");
  imp_cmd->add_option("--outer-tol", imp.outer_tol, "Tolerance on the squared change of the completed X")
      ->capture_default_str();
  imp_cmd->add_option("--outer-max-iter", imp.outer_max_iter, "Maximum imputation iterations")->capture_default_str();
  imp_cmd->add_option("--cv-folds", imp.cv_folds, "Number of cross-validation folds")->check(CLI::NonNegativeNumber);
  imp_cmd->add_flag("--structured", imp.structured, "Hold out rows, columns and entries in every fold");

  RanksArgs rk;
  auto* rk_cmd = app.add_subcommand("ranks", "Select joint and individual ranks");
  add_common(rk_cmd, rk.common);
  add_inputs(rk_cmd, rk.inputs);
  rk_cmd->add_option("--method", rk.method, "Selection method")
      ->check(CLI::IsMember({"permutation", "cv"}))
      ->capture_default_str();
  rk_cmd->add_option("--max-rank", rk.max_rank, "Largest rank tested (permutation)")->capture_default_str();
  rk_cmd->add_option("--permutations", rk.permutations, "Permutations per test")->capture_default_str();
  rk_cmd->add_option("--percentile", rk.percentile, "Null percentile to beat")->capture_default_str();
  rk_cmd->add_option("--rule", rk.rule, "Joint rank comparison")
      ->check(CLI::IsMember({"variance", "literal", "flipped"}))
      ->capture_default_str();
  rk_cmd->add_option("--search", rk.search, "CV search")
      ->check(CLI::IsMember({"forward", "stepwise"}))
      ->capture_default_str();
  rk_cmd->add_option("--max-cycles", rk.max_cycles, "Outer cycles of the permutation method")->capture_default_str();

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation study or write a simulated dataset");
  add_common(sim_cmd, sim.common);
  sim_cmd->add_option("study", sim.study, "Study name")
      ->required()
      ->check(CLI::IsMember({"joint-study", "noise-sweep", "jive-study", "imputation-study", "rank-permutation-study",
                             "rank-cv-study", "structured-cv", "data"}));
  auto* rank_opt = sim_cmd->add_option("--rank", sim.ranks.joint, "Joint rank")->check(CLI::NonNegativeNumber);
  auto* rx_opt = sim_cmd->add_option("--rank-x", sim.ranks.x, "Individual rank of X")->check(CLI::NonNegativeNumber);
  auto* ry_opt = sim_cmd->add_option("--rank-y", sim.ranks.y, "Individual rank of Y")->check(CLI::NonNegativeNumber);
  auto* rz_opt = sim_cmd->add_option("--rank-z", sim.ranks.z, "Individual rank of Z")->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--m1", sim.m1, "Rows of X and Z")->capture_default_str();
  sim_cmd->add_option("--n1", sim.n1, "Columns of X and Y")->capture_default_str();
  sim_cmd->add_option("--m2", sim.m2, "Rows of Y")->capture_default_str();
  sim_cmd->add_option("--n2", sim.n2, "Columns of Z")->capture_default_str();
  sim_cmd->add_option("--joint-sd", sim.joint_sd, "Sd of joint factor entries")->capture_default_str();
  sim_cmd->add_option("--individual-sd", sim.individual_sd, "Sd of individual factor entries")->capture_default_str();
  sim_cmd->add_option("--noise-sd", sim.noise_sd, "Noise sd")->capture_default_str();
  sim_cmd->add_option("--replicates", sim.replicates, "Replicates per setting")->capture_default_str();
  sim_cmd->add_option("--folds", sim.folds, "Folds for structured-cv")->capture_default_str();
  sim_cmd->add_option("--points", sim.points, "Noise variances i/points, i = 1..points (noise-sweep)")
      ->capture_default_str();
  sim_cmd->add_flag("--no-preprocess", sim.no_preprocess, "Fit the simulated data without centering or scaling");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  sim.ranks_set = rank_opt->count() + rx_opt->count() + ry_opt->count() + rz_opt->count() > 0;

  try {
    if (*fit_cmd) return cmd_fit(fit, err);
    if (*imp_cmd) return cmd_impute(imp, err);
    if (*rk_cmd) return cmd_ranks(rk, err);
    if (*sim_cmd) return cmd_simulate(sim, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace lmf::cli
