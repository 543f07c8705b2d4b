#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <sstream>

#include "nfde/cli.hpp"
#include "nfde/experiments.hpp"

namespace py = pybind11;
using namespace nfde;

// JSON crosses the boundary as text; the Python wrapper does the dict conversion.
namespace {

json parse(const std::string& s) { return json::parse(s); }

struct PyTrajectory {
  double dt;
  std::vector<double> times;
  Mat states;  // one row per sample
};

PyTrajectory wrap(const Trajectory& tr) {
  PyTrajectory p{tr.dt, tr.times, Mat(tr.states.size(), tr.states.empty() ? 0 : tr.states[0].size())};
  for (std::size_t k = 0; k < tr.states.size(); ++k) p.states.row(k) = tr.states[k].transpose();
  return p;
}

}  // namespace

PYBIND11_MODULE(_nfde, m) {
  m.doc() = "Nonlinear fractional diffusion solver and estimate checks";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<StepError>(m, "StepError", PyExc_RuntimeError);

  py::class_<Nonlinearity>(m, "Nonlinearity")
      .def_static("from_json", [](const std::string& s) { return Nonlinearity::from_json(parse(s)); })
      .def_static("pure_power", &Nonlinearity::pure_power, py::arg("m"))
      .def_static("two_power", &Nonlinearity::two_power, py::arg("m_lo"), py::arg("m_hi"), py::arg("a") = 1.0,
                  py::arg("b") = 1.0)
      .def_static("linear", &Nonlinearity::linear)
      .def("value", py::vectorize(&Nonlinearity::value))
      .def("derivative", py::vectorize(&Nonlinearity::derivative))
      .def("inverse", py::vectorize(&Nonlinearity::inverse))
      .def("legendre", py::vectorize(&Nonlinearity::legendre))
      .def_property_readonly("mu0", &Nonlinearity::mu0)
      .def_property_readonly("mu1", &Nonlinearity::mu1)
      .def_property_readonly("m0", &Nonlinearity::m0)
      .def_property_readonly("m1", &Nonlinearity::m1)
      .def_property_readonly("kappa_lower", &Nonlinearity::kappa_lower)
      .def_property_readonly("kappa_upper", &Nonlinearity::kappa_upper)
      .def("to_json", [](const Nonlinearity& n) { return n.to_json().dump(); });

  py::class_<DiscreteOperator, std::shared_ptr<DiscreteOperator>>(m, "Operator")
      .def_property_readonly("size", [](const DiscreteOperator& op) { return op.domain().size(); })
      .def_property_readonly("s", &DiscreteOperator::s)
      .def_property_readonly("gamma", &DiscreteOperator::gamma)
      .def_property_readonly("weight", [](const DiscreteOperator& op) { return op.domain().weight(); })
      .def_property_readonly("lambda1", &DiscreteOperator::lambda1)
      .def_property_readonly("matrix", &DiscreteOperator::matrix)
      .def_property_readonly("eigenvalues", &DiscreteOperator::eigenvalues)
      .def_property_readonly("green", &DiscreteOperator::green)
      .def_property_readonly("nodes",
                             [](const DiscreteOperator& op) {
                               const auto& d = op.domain();
                               Mat x(d.size(), d.dimension());
                               for (int i = 0; i < d.size(); ++i)
                                 for (int c = 0; c < d.dimension(); ++c) x(i, c) = d.node(i)[c];
                               return x;
                             })
      .def("apply", &DiscreteOperator::apply)
      .def("apply_inverse", &DiscreteOperator::apply_inverse)
      .def("first_eigenfunction", &DiscreteOperator::first_eigenfunction)
      .def("to_json", [](const DiscreteOperator& op) { return op.to_json().dump(); });

  m.def(
      "build_operator",
      [](const std::string& domain, const std::string& op) {
        return std::make_shared<DiscreteOperator>(build_operator(Domain::from_json(parse(domain)), parse(op)));
      },
      py::arg("domain"), py::arg("operator"));

  py::class_<PyTrajectory>(m, "Trajectory")
      .def_readonly("dt", &PyTrajectory::dt)
      .def_readonly("times", &PyTrajectory::times)
      .def_readonly("states", &PyTrajectory::states);

  m.def(
      "evolve",
      [](const DiscreteOperator& op, const Nonlinearity& nl, const Vec& u0, const std::vector<double>& times,
         const std::string& stepper) {
        Trajectory tr;
        {
          py::gil_scoped_release release;
          tr = evolve(op, nl, u0, times, StepperConfig::from_json(parse(stepper)));
        }
        return wrap(tr);
      },
      py::arg("op"), py::arg("nl"), py::arg("u0"), py::arg("times"), py::arg("stepper") = "{}");

  m.def(
      "run_experiment",
      [](const std::string& cfg) {
        const auto c = ExperimentConfig::from_json(parse(cfg));
        py::gil_scoped_release release;
        return run_experiment(c).manifest_entry().dump();
      },
      py::arg("config"));
  m.def(
      "certify_kernels",
      [](const std::string& cfg) {
        const auto c = ExperimentConfig::from_json(parse(cfg));
        py::gil_scoped_release release;
        return certify_kernels(c).dump();
      },
      py::arg("config"));
  m.def(
      "run_sweep",
      [](const std::string& spec) {
        const auto s = SweepSpec::from_json(parse(spec));
        py::gil_scoped_release release;
        return run_sweep(s).dump();
      },
      py::arg("spec"));
  m.def(
      "make_initial",
      [](const std::string& domain, const std::string& desc) {
        return make_initial(Domain::from_json(parse(domain)), parse(desc));
      },
      py::arg("domain"), py::arg("descriptor"));
  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"nfde"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = run_cli(int(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
