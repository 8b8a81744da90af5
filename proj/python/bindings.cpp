#include "lmf/core_model.hpp"
#include "lmf/simulation.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>

namespace py = pybind11;
using namespace lmf;

namespace {

LinkedDataset make_dataset(const Matrix& x, const Matrix& y, const Matrix& z) {
  LinkedDataset d;
  d.x = x;
  d.y = y;
  d.z = z;
  const Mask observed = x.array().isFinite();
  if (!observed.all()) d.mask_x = observed;
  d.validate();
  return d;
}

AlsOptions als(double tol, int max_iter, std::uint64_t seed, const std::string& init) {
  AlsOptions o;
  o.tolerance = tol;
  o.max_iterations = max_iter;
  o.seed = seed;
  if (init == "random")
    o.init = InitMethod::Random;
  else if (init != "svd")
    throw ValidationError("init must be 'svd' or 'random'");
  o.validate();
  return o;
}

EstimationOrder order_of(const std::string& s) {
  if (s == "joint-first") return EstimationOrder::JointFirst;
  if (s == "individual-first") return EstimationOrder::IndividualFirst;
  throw ValidationError("order must be 'joint-first' or 'individual-first'");
}

ImputeMethod method_of(const std::string& s) {
  if (s == "jive") return ImputeMethod::Jive;
  if (s == "joint") return ImputeMethod::JointOnly;
  if (s == "svd") return ImputeMethod::SvdOnly;
  throw ValidationError("method must be 'jive', 'joint' or 'svd'");
}

py::dict decomposition_dict(const Decomposition& d) {
  py::dict out;
  out["jx"] = d.jx;
  out["jy"] = d.jy;
  out["jz"] = d.jz;
  out["ax"] = d.ax;
  out["ay"] = d.ay;
  out["az"] = d.az;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Linked matrix factorization of X (m1 x n1), Y (m2 x n1) and Z (m1 x n2)";
  m.attr("__version__") = kVersion;

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<RankSpec>(m, "RankSpec")
      .def(py::init<>())
      .def(py::init([](int joint, int x, int y, int z) { return RankSpec{joint, x, y, z}; }), py::arg("joint") = 0,
           py::arg("x") = 0, py::arg("y") = 0, py::arg("z") = 0)
      .def_readwrite("joint", &RankSpec::joint)
      .def_readwrite("x", &RankSpec::x)
      .def_readwrite("y", &RankSpec::y)
      .def_readwrite("z", &RankSpec::z)
      .def("total", &RankSpec::total)
      .def("__eq__", [](const RankSpec& a, const RankSpec& b) { return a == b; })
      .def("__repr__", [](const RankSpec& r) { return "RankSpec" + r.to_string(); });

  py::class_<FitReport>(m, "FitReport")
      .def_readonly("sse_trace", &FitReport::sse_trace)
      .def_readonly("iterations", &FitReport::iterations)
      .def_readonly("converged", &FitReport::converged)
      .def_readonly("final_sse", &FitReport::final_sse)
      .def_readonly("degenerate_solves", &FitReport::degenerate_solves)
      .def_readonly("data_ss", &FitReport::data_ss)
      .def_property_readonly("max_relative_increase",
                             [](const FitReport& r) { return max_relative_increase(r); });

  py::class_<JointModel>(m, "JointModel")
      .def_readonly("u", &JointModel::u)
      .def_readonly("v", &JointModel::v)
      .def_readonly("sx", &JointModel::sx)
      .def_readonly("uy", &JointModel::uy)
      .def_readonly("vz", &JointModel::vz)
      .def_property_readonly("rank", &JointModel::rank);

  py::class_<LowRank>(m, "LowRank")
      .def_readonly("u", &LowRank::u)
      .def_readonly("s", &LowRank::s)
      .def_readonly("v", &LowRank::v)
      .def("matrix", &LowRank::matrix);

  py::class_<JiveModel>(m, "JiveModel")
      .def_readonly("joint", &JiveModel::joint)
      .def_readonly("ax", &JiveModel::ax)
      .def_readonly("ay", &JiveModel::ay)
      .def_readonly("az", &JiveModel::az)
      .def_readonly("ranks", &JiveModel::ranks)
      .def_readonly("orthogonalized", &JiveModel::orthogonalized)
      .def("components", [](const JiveModel& jm) { return decomposition_dict(jm.components()); });

  py::class_<JointFit>(m, "JointFit")
      .def_readonly("model", &JointFit::model)
      .def_readonly("report", &JointFit::report)
      .def_property_readonly("jx", [](const JointFit& f) { return f.structure.jx; })
      .def_property_readonly("jy", [](const JointFit& f) { return f.structure.jy; })
      .def_property_readonly("jz", [](const JointFit& f) { return f.structure.jz; });

  py::class_<JiveFit>(m, "JiveFit")
      .def_readonly("model", &JiveFit::model)
      .def_readonly("report", &JiveFit::report);

  m.def(
      "center_and_scale",
      [](const Matrix& x, const Matrix& y, const Matrix& z, const std::string& centering) {
        Centering c = Centering::Overall;
        if (centering == "columns")
          c = Centering::Columns;
        else if (centering == "none")
          c = Centering::None;
        else if (centering != "overall")
          throw ValidationError("centering must be 'overall', 'columns' or 'none'");
        const LinkedDataset d = center_and_scale(make_dataset(x, y, z), c);
        py::dict info;
        info["x"] = py::make_tuple(d.preprocessing.x.offset, d.preprocessing.x.scale);
        info["y"] = py::make_tuple(d.preprocessing.y.offset, d.preprocessing.y.scale);
        info["z"] = py::make_tuple(d.preprocessing.z.offset, d.preprocessing.z.scale);
        return py::make_tuple(d.x, d.y, d.z, info);
      },
      py::arg("x"), py::arg("y"), py::arg("z"), py::arg("centering") = "overall",
      "Center each matrix and scale it to unit Frobenius norm; returns (x, y, z, transforms).");

  m.def(
      "fit_joint",
      [](const Matrix& x, const Matrix& y, const Matrix& z, int rank, double tol, int max_iter, std::uint64_t seed,
         const std::string& init) {
        py::gil_scoped_release release;
        return fit_joint(make_dataset(x, y, z), rank, als(tol, max_iter, seed, init));
      },
      py::arg("x"), py::arg("y"), py::arg("z"), py::arg("rank"), py::arg("tol") = 1e-5, py::arg("max_iter") = 5000,
      py::arg("seed") = 0, py::arg("init") = "svd", "Joint-only LMF by alternating least squares.");

  m.def(
      "fit_jive",
      [](const Matrix& x, const Matrix& y, const Matrix& z, const RankSpec& ranks, const std::string& order,
         double tol, int max_iter, std::uint64_t seed, const std::string& init) {
        const AlsOptions o = als(tol, max_iter, seed, init);
        const LinkedDataset d = make_dataset(x, y, z);
        py::gil_scoped_release release;
        if (order == "both") return fit_jive_best_order(d, ranks, o);
        return fit_jive(d, ranks, order_of(order), o);
      },
      py::arg("x"), py::arg("y"), py::arg("z"), py::arg("ranks"), py::arg("order") = "joint-first",
      py::arg("tol") = 1e-5, py::arg("max_iter") = 5000, py::arg("seed") = 0, py::arg("init") = "svd",
      "LMF-JIVE with joint and individual structure; order 'both' keeps the lower SSE.");

  m.def("orthogonalize", &orthogonalize, py::arg("model"));
  m.def("verify_identifiability", &verify_identifiability, py::arg("a"), py::arg("b"), py::arg("tol"));
  m.def(
      "diagonalize_sx",
      [](const Matrix& u, const Matrix& s, const Matrix& v, const Matrix& uy, const Matrix& vz) {
        return diagonalize_sx(u, s, v, uy, vz);
      },
      py::arg("u"), py::arg("s"), py::arg("v"), py::arg("uy"), py::arg("vz"));

  m.def(
      "reconstruction_error",
      [](const py::dict& truth, const py::dict& estimate) {
        const auto get = [](const py::dict& d) {
          Decomposition out;
          out.jx = d["jx"].cast<Matrix>();
          out.jy = d["jy"].cast<Matrix>();
          out.jz = d["jz"].cast<Matrix>();
          out.ax = d["ax"].cast<Matrix>();
          out.ay = d["ay"].cast<Matrix>();
          out.az = d["az"].cast<Matrix>();
          return out;
        };
        return reconstruction_error(get(truth), get(estimate));
      },
      py::arg("truth"), py::arg("estimate"));

  m.def(
      "impute",
      [](const Matrix& x, const Matrix& y, const Matrix& z, const RankSpec& ranks, const std::string& method,
         double outer_tol, int outer_max_iter, double tol, int max_iter) {
        const LinkedDataset d = make_dataset(x, y, z);
        const Mask observed = d.mask_x ? *d.mask_x : Mask::Constant(d.m1(), d.n1(), true);
        ImputeOptions io;
        io.ranks = ranks;
        io.inner = als(tol, max_iter, 0, "svd");
        io.outer_tolerance = outer_tol;
        io.outer_max_iterations = outer_max_iter;
        const ImputeMethod im = method_of(method);
        ImputeResult r;
        {
          py::gil_scoped_release release;
          r = impute(d, MissingPattern::from_mask(observed), io, im);
        }
        py::dict out;
        out["x_hat"] = r.x_hat;
        out["model"] = r.model;
        out["report"] = r.report;
        out["total_sse_trace"] = r.total_sse_trace;
        return out;
      },
      py::arg("x"), py::arg("y"), py::arg("z"), py::arg("ranks"), py::arg("method") = "jive",
      py::arg("outer_tol") = 1e-4, py::arg("outer_max_iter") = 1000, py::arg("tol") = 1e-5,
      py::arg("max_iter") = 5000, "EM imputation of the NaN entries of x.");

  m.def(
      "select_ranks",
      [](const Matrix& x, const Matrix& y, const Matrix& z, const std::string& method, std::uint64_t seed,
         int max_rank, int permutations, int threads) {
        const LinkedDataset d = make_dataset(x, y, z);
        RankSelection sel;
        py::gil_scoped_release release;
        if (method == "permutation") {
          PermutationOptions p;
          p.r_max = p.rx_max = p.ry_max = p.rz_max = max_rank;
          p.n_permutations = permutations;
          p.seed = seed;
          p.threads = threads;
          sel = select_ranks_permutation(d, p);
        } else if (method == "cv") {
          CvSelectionOptions c;
          c.seed = seed;
          c.threads = threads;
          sel = select_ranks_cv(d, c);
        } else {
          throw ValidationError("method must be 'permutation' or 'cv'");
        }
        return std::make_pair(sel.ranks, sel.converged);
      },
      py::arg("x"), py::arg("y"), py::arg("z"), py::arg("method") = "permutation", py::arg("seed") = 0,
      py::arg("max_rank") = 6, py::arg("permutations") = 100, py::arg("threads") = 1,
      "Select (joint, x, y, z) ranks; returns (RankSpec, converged).");

  m.def(
      "generate_linked",
      [](int m1, int n1, int m2, int n2, const RankSpec& ranks, double joint_sd, double individual_sd,
         double noise_sd, std::uint64_t seed) {
        SimDesign d;
        d.m1 = m1;
        d.n1 = n1;
        d.m2 = m2;
        d.n2 = n2;
        d.ranks = ranks;
        d.joint_sd = joint_sd;
        d.individual_sd = individual_sd;
        d.noise_sd = noise_sd;
        const SimulatedData s = generate_linked(d, seed);
        py::dict out;
        out["x"] = s.data.x;
        out["y"] = s.data.y;
        out["z"] = s.data.z;
        out["truth"] = decomposition_dict(s.truth);
        return out;
      },
      py::arg("m1") = 50, py::arg("n1") = 50, py::arg("m2") = 50, py::arg("n2") = 50, py::arg("ranks") = RankSpec{2, 0, 0, 0},
      py::arg("joint_sd") = 1.0, py::arg("individual_sd") = 1.0, py::arg("noise_sd") = 1.0, py::arg("seed") = 0,
      "Draw one linked dataset; returns dict with x, y, z and the noiseless truth components.");

  m.def(
      "run_joint_study_json",
      [](int replicates, std::uint64_t seed, int threads) {
        SimDesign d;
        d.replicates = replicates;
        d.seed = seed;
        StudyOptions o;
        o.threads = threads;
        py::gil_scoped_release release;
        return run_joint_study(d, o).to_json().dump();
      },
      py::arg("replicates") = 100, py::arg("seed") = 0, py::arg("threads") = 1);
}
