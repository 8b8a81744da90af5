#include "doctest.h"
#include "helpers.hpp"

#include "lmf/cli.hpp"
#include "lmf/core_model.hpp"
#include "lmf/csv.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace lmf;
using lmf::test::max_abs;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string scratch(const std::string& name) {
  const fs::path p = fs::path(LMF_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Matrix load(const std::string& path) { return read_matrix_csv(path).values; }

MatrixFile parse(const std::string& text) {
  std::istringstream in(text);
  return parse_matrix_csv(in, "test.csv");
}

// Writes a small simulated dataset into dir and returns its path.
std::string simulated(const std::string& name, const std::vector<std::string>& extra = {}) {
  const std::string dir = scratch(name);
  std::vector<std::string> args{"simulate", "data",  "--out",  dir,    "--seed", "3",   "--m1",
                                "20",       "--n1",  "18",     "--m2", "15",     "--n2", "12"};
  args.insert(args.end(), extra.begin(), extra.end());
  const Run r = run_cli(args);
  REQUIRE(r.code == 0);
  return dir;
}

std::vector<std::string> inputs(const std::string& dir) {
  return {"--x", dir + "/X.csv", "--y", dir + "/Y.csv", "--z", dir + "/Z.csv"};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("csv parsing") {
  const MatrixFile f = parse("id,a,b\nr1,1,2\nr2,3,4\n");
  CHECK(f.row_ids == std::vector<std::string>{"r1", "r2"});
  CHECK(f.col_ids == std::vector<std::string>{"a", "b"});
  CHECK(max_abs(f.values - (Matrix(2, 2) << 1, 2, 3, 4).finished()) == 0.0);
  CHECK(f.complete());

  const MatrixFile na = parse("\xEF\xBB\xBF,a,b\r\nr1,NA,2\r\nr2,3,\r\n");
  CHECK(na.observed.count() == 2);
  CHECK_FALSE(na.observed(0, 0));
  CHECK_FALSE(na.observed(1, 1));
  CHECK(std::isnan(na.values(0, 0)));

  CHECK_THROWS_WITH_AS(parse(",a,b\nr1,1\n"), doctest::Contains("line 2"), ValidationError);
  CHECK_THROWS_WITH_AS(parse(",a,a\nr1,1,2\n"), doctest::Contains("duplicate"), ValidationError);
  CHECK_THROWS_WITH_AS(parse(",a,b\nr1,1,2\nr1,3,4\n"), doctest::Contains("duplicate"), ValidationError);
  CHECK_THROWS_WITH_AS(parse(",a,b\nr1,1,x7\n"), doctest::Contains("x7"), ValidationError);
  CHECK_THROWS_WITH_AS(parse(",a,b\nr1,1,x7\n"), doctest::Contains("r1"), ValidationError);
}

TEST_CASE("csv round trip keeps full precision") {
  Rng rng(1);
  const Matrix m = rng.normal_matrix(3, 4);
  std::ostringstream os;
  write_matrix_csv(os, m, numbered_ids("r", 3), numbered_ids("c", 4));
  const MatrixFile back = parse(os.str());
  CHECK(max_abs(back.values - m) == 0.0);
  CHECK(back.row_ids[2] == "r3");
}

TEST_CASE("alignment of linked files") {
  const MatrixFile x = parse(",a,b\nr1,1,2\nr2,3,4\n");
  const MatrixFile y = parse(",b,a\ny1,20,10\n");
  const MatrixFile z = parse(",z1\nr2,40\nr1,30\n");
  const AlignedData al = align_linked(x, y, z);
  CHECK(max_abs(al.data.y - (Matrix(1, 2) << 10, 20).finished()) == 0.0);
  CHECK(max_abs(al.data.z - (Matrix(2, 1) << 30, 40).finished()) == 0.0);

  const MatrixFile bad = parse(",a,c\ny1,1,2\n");
  CHECK_THROWS_WITH_AS(align_linked(x, bad, z), doctest::Contains("missing: 'b'"), ValidationError);
  CHECK_THROWS_WITH_AS(align_linked(x, bad, z), doctest::Contains("unexpected: 'c'"), ValidationError);
  const MatrixFile holey = parse(",b,a\ny1,NA,10\n");
  CHECK_THROWS_AS(align_linked(x, holey, z), ValidationError);
}

TEST_CASE("fit with zero ranks") {
  const std::string dir = simulated("zero");
  std::vector<std::string> args{"fit", "--rank", "0", "--out", dir + "/fit", "--seed", "1"};
  const auto in = inputs(dir);
  args.insert(args.end(), in.begin(), in.end());
  const Run r = run_cli(args);
  CHECK(r.code == 0);
  CHECK(load(dir + "/fit/J_x.csv").isZero());
  CHECK(load(dir + "/fit/A_y.csv").isZero());
  const auto report = nlohmann::json::parse(slurp(dir + "/fit/fit_report.json"));
  CHECK(report["residual_error"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("factor files rebuild the emitted structures") {
  const std::string dir = simulated("factors", {"--rank-x", "1", "--rank-y", "2", "--rank-z", "1"});
  std::vector<std::string> args{"fit",      "--rank", "2", "--rank-x", "1",         "--rank-y", "2",
                                "--rank-z", "1",      "--order", "both", "--orthogonalize", "--out", dir + "/fit"};
  const auto in = inputs(dir);
  args.insert(args.end(), in.begin(), in.end());
  REQUIRE(run_cli(args).code == 0);
  const std::string f = dir + "/fit/";
  const Matrix u = load(f + "U.csv"), v = load(f + "V.csv"), s = load(f + "S_x.csv");
  CHECK(max_abs(u * s * v.transpose() - load(f + "J_x.csv")) < 1e-8);
  CHECK(max_abs(load(f + "U_y.csv") * v.transpose() - load(f + "J_y.csv")) < 1e-8);
  CHECK(max_abs(u * load(f + "V_z.csv").transpose() - load(f + "J_z.csv")) < 1e-8);
  for (const char* n : {"x", "y", "z"}) {
    const std::string k(n);
    const Matrix a = load(f + "U_i" + k + ".csv") * load(f + "S_i" + k + ".csv") * load(f + "V_i" + k + ".csv").transpose();
    CHECK(max_abs(a - load(f + "A_" + k + ".csv")) < 1e-8);
  }
  const auto report = nlohmann::json::parse(slurp(f + "fit_report.json"));
  CHECK(report["orthogonalized"] == true);
  CHECK(report["ranks"]["y"] == 2);
}

TEST_CASE("end-to-end recovery on simulated data") {
  const std::string dir = simulated("recover");
  std::vector<std::string> args{"fit", "--rank", "2", "--no-preprocess", "--out", dir + "/fit"};
  const auto in = inputs(dir);
  args.insert(args.end(), in.begin(), in.end());
  REQUIRE(run_cli(args).code == 0);
  const std::string f = dir + "/fit/";
  Decomposition truth{load(dir + "/J_x_true.csv"), load(dir + "/J_y_true.csv"), load(dir + "/J_z_true.csv"),
                      load(dir + "/A_x_true.csv"), load(dir + "/A_y_true.csv"), load(dir + "/A_z_true.csv")};
  Decomposition est{load(f + "J_x.csv"), load(f + "J_y.csv"), load(f + "J_z.csv"),
                    load(f + "A_x.csv"), load(f + "A_y.csv"), load(f + "A_z.csv")};
  const double e = reconstruction_error(truth, est);

  const std::string study = scratch("recover_study");
  REQUIRE(run_cli({"simulate", "joint-study", "--seed", "3", "--m1", "20", "--n1", "18", "--m2", "15", "--n2", "12",
               "--replicates", "20", "--no-preprocess", "--out", study})
              .code == 0);
  const auto report = nlohmann::json::parse(slurp(study + "/joint-study.json"));
  double mean = 0.0, sd = 0.0;
  for (const auto& s : report["summary"])
    if (s["column"] == "e_rec") {
      mean = s["mean"].get<double>();
      sd = s["sd"].get<double>();
    }
  REQUIRE(mean > 0.0);
  CHECK(e < mean + 3.0 * sd);
}

TEST_CASE("simulation reports are reproducible") {
  const std::string a = scratch("rep_a"), b = scratch("rep_b");
  for (const auto& dir : {a, b})
    REQUIRE(run_cli({"simulate", "joint-study", "--seed", "7", "--replicates", "3", "--m1", "20", "--n1", "20", "--m2",
                 "20", "--n2", "20", "--out", dir})
                .code == 0);
  CHECK(slurp(a + "/joint-study.json") == slurp(b + "/joint-study.json"));
  CHECK(slurp(a + "/joint-study.csv") == slurp(b + "/joint-study.csv"));
  CHECK_FALSE(slurp(a + "/joint-study.csv").empty());
}

TEST_CASE("omitted seed is drawn and logged") {
  const std::string dir = scratch("seedless");
  const Run r = run_cli({"simulate", "data", "--m1", "5", "--n1", "5", "--m2", "5", "--n2", "5", "--out", dir});
  CHECK(r.code == 0);
  CHECK(r.err.find("seed: ") != std::string::npos);
}

TEST_CASE("impute writes the completed matrix and errors") {
  const std::string dir = simulated("impute");
  MatrixFile x = read_matrix_csv(dir + "/X.csv");
  x.values.row(2).setConstant(std::numeric_limits<double>::quiet_NaN());
  x.values(5, 7) = std::numeric_limits<double>::quiet_NaN();
  write_matrix_csv(dir + "/X_holes.csv", x.values, x.row_ids, x.col_ids);
  const Run r = run_cli({"impute", "--x", dir + "/X_holes.csv", "--y", dir + "/Y.csv", "--z", dir + "/Z.csv", "--rank",
                     "2", "--truth", dir + "/X.csv", "--seed", "1", "--out", dir + "/imp"});
  REQUIRE(r.code == 0);
  const MatrixFile done = read_matrix_csv(dir + "/imp/X_imputed.csv");
  CHECK(done.complete());
  CHECK(done.values(0, 0) == doctest::Approx(x.values(0, 0)).epsilon(1e-14));
  const auto report = nlohmann::json::parse(slurp(dir + "/imp/impute_report.json"));
  CHECK(report.contains("errors"));
  CHECK(report.contains("errors_data_scale"));
}

TEST_CASE("structured cross-validation command") {
  const std::string dir = simulated("cv");
  const Run r = run_cli({"impute", "--x", dir + "/X.csv", "--y", dir + "/Y.csv", "--z", dir + "/Z.csv", "--rank", "2",
                     "--cv-folds", "5", "--structured", "--seed", "2", "--out", dir + "/cv"});
  REQUIRE(r.code == 0);
  const auto report = nlohmann::json::parse(slurp(dir + "/cv/cv_report.json"));
  CHECK(report.dump().find("both") != std::string::npos);
}

TEST_CASE("rank selection command") {
  const std::string dir = simulated("ranks");
  const Run r = run_cli({"ranks", "--x", dir + "/X.csv", "--y", dir + "/Y.csv", "--z", dir + "/Z.csv", "--max-rank", "3",
                     "--permutations", "20", "--seed", "4", "--out", dir + "/rk"});
  REQUIRE(r.code == 0);
  const auto report = nlohmann::json::parse(slurp(dir + "/rk/ranks.json"));
  CHECK(report["ranks"]["joint"].get<int>() >= 0);
}

TEST_CASE("exit codes") {
  const std::string dir = simulated("codes");
  const auto in = inputs(dir);
  std::vector<std::string> too_big{"fit", "--rank", "99", "--out", dir + "/o"};
  too_big.insert(too_big.end(), in.begin(), in.end());
  CHECK(run_cli(too_big).code == 1);
  CHECK(run_cli({"fit", "--rank", "1", "--x", dir + "/nope.csv", "--y", dir + "/Y.csv", "--z", dir + "/Z.csv"}).code == 1);
  CHECK(run_cli({"fit", "--bogus"}).code == 1);
  CHECK(run_cli({"--help"}).code == 0);

  MatrixFile x = read_matrix_csv(dir + "/X.csv");
  x.values *= 1e300;
  write_matrix_csv(dir + "/X_huge.csv", x.values, x.row_ids, x.col_ids);
  const Run r = run_cli({"fit", "--rank", "1", "--no-preprocess", "--x", dir + "/X_huge.csv", "--y", dir + "/Y.csv", "--z",
                     dir + "/Z.csv", "--out", dir + "/o"});
  CHECK(r.code == 2);
}

}
