#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ltts/certificate.hpp"
#include "ltts/cli.hpp"
#include "ltts/experiments.hpp"

namespace py = pybind11;
using namespace ltts;

namespace {

DenseTensor from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  std::vector<std::size_t> shape(a.shape(), a.shape() + a.ndim());
  return DenseTensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> to_array(const DenseTensor& t) {
  py::array_t<double> out(t.shape());
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

py::dict certificate_dict(const Certificate& c) {
  py::dict d;
  d["e_taylor"] = c.e_taylor;
  d["e_tt_raw"] = c.e_tt_raw;
  d["k_n"] = c.k_n;
  d["e_det"] = c.e_det;
  d["lambda"] = c.lambda;
  d["y_max"] = c.y_max;
  d["m_bound"] = c.m_bound;
  d["provenance"] = to_string(c.provenance);
  return d;
}

} // namespace

PYBIND11_MODULE(_ltts, m) {
  m.doc() = "Local tensor-train surrogates with deterministic error certificates.";
  m.attr("__version__") = cli::version();

  // Translators run newest first, so the base class goes in before the specific errors.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<OutOfPatchError>(m, "OutOfPatchError", PyExc_ValueError);

  m.def("bessel_constant", &bessel_constant);
  m.def("feature_norm_bound", &feature_norm_bound, py::arg("order"));

  py::enum_<FamilyKind>(m, "FamilyKind")
      .value("ExpSum", FamilyKind::ExpSum)
      .value("ProductCos", FamilyKind::ProductCos)
      .value("PolyMatched", FamilyKind::PolyMatched)
      .value("PolyHigher", FamilyKind::PolyHigher)
      .value("QuadraticForm", FamilyKind::QuadraticForm)
      .value("Trig", FamilyKind::Trig)
      .value("Gauss", FamilyKind::Gauss);

  py::class_<FamilyInstance>(m, "FamilyInstance")
      .def_readonly("kind", &FamilyInstance::kind)
      .def_readonly("dim", &FamilyInstance::dim)
      .def_readonly("seed", &FamilyInstance::seed)
      .def("__call__", [](const FamilyInstance& f, std::vector<double> x) { return evaluate(f, x); })
      .def("box_tensor", [](const FamilyInstance& f, int p) { return to_array(box_tensor(f, p)); }, py::arg("p"));
  m.def("draw_instance", &draw_instance, py::arg("kind"), py::arg("dim"), py::arg("p"), py::arg("seed"));
  m.def("ones_instance", &ones_instance, py::arg("kind"), py::arg("dim"));

  py::class_<PatchSpec>(m, "PatchSpec")
      .def(py::init([](std::vector<double> x0, double r, int p, int chi) {
             PatchSpec s{std::move(x0), r, p, chi};
             s.validate();
             return s;
           }),
           py::arg("x0"), py::arg("r"), py::arg("p") = 2, py::arg("chi") = 1)
      .def_readonly("x0", &PatchSpec::x0)
      .def_readonly("r", &PatchSpec::r)
      .def_readonly("p", &PatchSpec::p)
      .def_readonly("chi", &PatchSpec::chi);
  m.def("normalize", [](std::vector<double> x, const PatchSpec& s) { return normalize(x, s); });

  py::class_<TTTensor>(m, "TTTensor")
      .def_property_readonly("order", &TTTensor::order)
      .def_property_readonly("ranks", &TTTensor::ranks)
      .def("__call__", [](const TTTensor& tt, std::vector<double> xi) { return tt_eval(tt, xi); }, py::arg("xi"))
      .def("norm", &tt_norm)
      .def("param_count", &param_count)
      .def("dense", [](const TTTensor& tt) { return to_array(densify(tt)); });

  m.def(
      "tt_svd",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a, std::size_t chi) {
        auto res = tt_svd(from_array(a), chi);
        return py::make_tuple(res.tt, res.report.aggregate_bound());
      },
      py::arg("tensor"), py::arg("chi"), "Returns (tt, truncation bound).");

  py::class_<QcnnModel>(m, "QcnnModel")
      .def_static("random", &QcnnModel::random, py::arg("qubits"), py::arg("seed"))
      .def_readonly("theta", &QcnnModel::theta)
      .def("__call__", [](const QcnnModel& q, std::vector<double> x) { return evaluate(q, x); });

  m.def(
      "fd_derivatives",
      [](const std::function<double(std::vector<double>)>& fn, std::vector<double> x0, int p, double h) {
        BlackBox g(x0.size(), [&fn](std::span<const double> x) { return fn({x.begin(), x.end()}); }, std::nullopt,
                   false);
        py::dict out;
        for (const auto& [alpha, v] : fd_derivatives(g, x0, p, h)) {
          out[py::tuple(py::cast(alpha.values()))] = v;
        }
        return py::make_tuple(out, g.queries());
      },
      py::arg("fn"), py::arg("x0"), py::arg("p"), py::arg("h"), "Returns (derivatives keyed by exponent, queries).");

  m.def("certificate",
        [](double c_le_p, double c_p1, double r, std::size_t order, int p, double tt_err, double y_max) {
          return certificate_dict(build_certificate(SmoothnessBudget{c_le_p, c_p1}, r, order, p, tt_err, y_max));
        },
        py::arg("c_le_p"), py::arg("c_p1"), py::arg("r"), py::arg("order"), py::arg("p"), py::arg("tt_err"),
        py::arg("y_max"));
  m.def("pdim_hypothesis", &pdim_hypothesis, py::arg("order"), py::arg("mode"), py::arg("chi"));
  m.def("pdim_loss", &pdim_loss, py::arg("d_hyp"));
  m.def("uniform_deviation", &uniform_deviation, py::arg("m"), py::arg("d"), py::arg("n"), py::arg("delta"));
  m.def("sample_complexity", &sample_complexity, py::arg("m"), py::arg("d"), py::arg("eta"), py::arg("delta"));

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the ltts command line; returns (exit code, stdout, stderr).");
}
