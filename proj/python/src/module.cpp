#include <memory>
#include <string>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "homog/errors.hpp"
#include "homog/sweep.hpp"

namespace py = pybind11;
using namespace homog;

namespace {

PeriodicMeasure measure_from_text(const std::string& text) { return parse_measure(std::string_view(text)); }

std::shared_ptr<HomogenizationModel> make_model(const PeriodicMeasure& m, int resolution, const std::string& coef,
                                                int workers) {
  auto sp = std::make_shared<const DiscreteSpace>(build_space(m, resolution));
  ModelOptions opts;
  opts.workers = workers;
  return std::make_shared<HomogenizationModel>(sp, check_bounds(parse_expr(coef, m.dim()), m, resolution), opts);
}

// Python's FiberOperator keeps its model alive.
struct PyFiber {
  std::shared_ptr<HomogenizationModel> model;
  FiberOperator op;
  PyFiber(std::shared_ptr<HomogenizationModel> m, double eps, const RVec& theta)
      : model(std::move(m)), op(*model, eps, theta) {}
};

std::string sweep_json(const ExperimentConfig& cfg) { return report_json(run_sweep(prepare_study(cfg))).dump(); }

}  // namespace

PYBIND11_MODULE(_homog, m) {
  m.doc() = "Periodic homogenization on singular periodic measures";
  m.attr("__version__") = HOMOG_VERSION;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto config = py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<SyntaxError>(m, "SyntaxError", config.ptr());
  py::register_exception<HypothesisError>(m, "HypothesisError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  py::class_<PeriodicMeasure>(m, "Measure")
      .def_property_readonly("dim", &PeriodicMeasure::dim)
      .def_property_readonly("num_components", [](const PeriodicMeasure& pm) { return pm.components().size(); })
      .def("to_json", [](const PeriodicMeasure& pm) { return to_json(pm).dump(); })
      .def("total_mass", [](const PeriodicMeasure& pm) { return total_mass(pm); });
  m.def("parse_measure", &measure_from_text, py::arg("text"));
  m.def("lebesgue_measure", &lebesgue_measure, py::arg("dim"));
  m.def("square_grid_measure", &square_grid_measure, py::arg("dim"));

  m.def(
      "evaluate",
      [](const std::string& expr, const std::vector<double>& y) {
        return parse_expr(expr, static_cast<int>(y.size())).eval(y);
      },
      py::arg("expr"), py::arg("y"));

  py::class_<DiscreteSpace, std::shared_ptr<DiscreteSpace>>(m, "Space")
      .def(py::init([](const PeriodicMeasure& pm, int n) { return std::make_shared<DiscreteSpace>(build_space(pm, n)); }),
           py::arg("measure"), py::arg("resolution"))
      .def_property_readonly("dim", &DiscreteSpace::dim)
      .def_property_readonly("resolution", &DiscreteSpace::resolution)
      .def_property_readonly("num_dofs", &DiscreteSpace::num_dofs)
      .def_property_readonly("warnings", &DiscreteSpace::warnings)
      .def("node_coords", &DiscreteSpace::node_coords, py::arg("dof"))
      .def("mass_matrix", [](const DiscreteSpace& sp) { return Eigen::MatrixXd(assemble_mass(sp)); })
      .def(
          "stiffness_matrix",
          [](const DiscreteSpace& sp, const RVec& kappa) {
            return Eigen::MatrixXcd(assemble_shifted_stiffness(sp, constant_field(sp, 1.0), kappa));
          },
          py::arg("kappa"), "Dense shifted stiffness with A = 1.")
      .def("connectivity", [](const DiscreteSpace& sp) { return check_connectivity(sp).components; });

  m.def(
      "poincare_constant",
      [](const DiscreteSpace& sp, int points, int workers) {
        PoincareOptions opts;
        opts.workers = workers;
        const auto est = poincare_constant(sp, default_kappa_grid(sp.dim(), points), opts);
        py::dict out;
        out["lambda_min"] = est.lambda_min;
        out["kappa_argmin"] = est.kappa_argmin;
        out["C_P"] = est.C_P;
        return out;
      },
      py::arg("space"), py::arg("kappa_points") = 9, py::arg("workers") = 1);
  m.def(
      "mean_zero_eigenvalue", [](const DiscreteSpace& sp, const RVec& kappa) { return mean_zero_eigenvalue(sp, kappa); },
      py::arg("space"), py::arg("kappa"));

  py::class_<HomogenizationModel, std::shared_ptr<HomogenizationModel>>(m, "Model")
      .def(py::init(&make_model), py::arg("measure"), py::arg("resolution"), py::arg("coefficient"),
           py::arg("workers") = 1)
      .def_property_readonly("a_hom", &HomogenizationModel::a_hom)
      .def_property_readonly("num_dofs", [](const HomogenizationModel& md) { return md.space().num_dofs(); })
      .def_property_readonly("correctors", [](const HomogenizationModel& md) { return md.correctors().N; })
      .def_property_readonly("mass_vector", &HomogenizationModel::m)
      .def(
          "interpolate",
          [](const HomogenizationModel& md, const std::string& expr) {
            return interpolate(md.space(), parse_expr(expr, md.space().dim()));
          },
          py::arg("expr"))
      .def("m_norm", [](const HomogenizationModel& md, const CVec& v) { return m_norm(md.mass(), v); });

  py::class_<PyFiber>(m, "FiberOperator")
      .def(py::init<std::shared_ptr<HomogenizationModel>, double, const RVec&>(), py::arg("model"), py::arg("eps"),
           py::arg("theta"))
      .def_property_readonly("kappa", [](const PyFiber& f) { return f.op.kappa(); })
      .def("solve", [](const PyFiber& f, const CVec& data) { return f.op.fiber_solve(data).u; }, py::arg("F"))
      .def("homog_coefficient", [](const PyFiber& f, const CVec& data) { return f.op.homog_coefficient(data); },
           py::arg("F"))
      .def("error_map", [](const PyFiber& f, const CVec& data) { return f.op.error_map(data); }, py::arg("F"))
      .def("error_operator_norm", [](const PyFiber& f) { return f.op.error_operator_norm(); })
      .def(
          "solve_remainder",
          [](const PyFiber& f, const CVec& data) {
            const auto r = f.op.solve_remainder(data);
            py::dict out;
            out["c"] = r.c;
            out["R"] = r.R;
            out["mean"] = r.mean;
            out["residual"] = r.residual;
            out["compatibility"] = r.compatibility;
            out["U"] = f.op.first_order_approx(r.c, r.R);
            out["defect"] = f.op.defect(data, r);
            return out;
          },
          py::arg("F"));

  py::class_<ExperimentConfig>(m, "Config")
      .def_readwrite("workers", &ExperimentConfig::workers)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("resolution", &ExperimentConfig::resolution)
      .def_readwrite("output", &ExperimentConfig::output)
      .def_readonly("eps", &ExperimentConfig::eps)
      .def_readonly("coefficient", &ExperimentConfig::coefficient)
      .def("hash", [](const ExperimentConfig& c) { return config_hash(c); });
  m.def(
      "parse_config",
      [](const std::string& text, const std::filesystem::path& base_dir) {
        nlohmann::json doc;
        try {
          doc = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
          throw ConfigError(std::string("config: invalid JSON: ") + e.what());
        }
        return parse_config(doc, base_dir);
      },
      py::arg("text"), py::arg("base_dir") = std::filesystem::path{});
  m.def("load_config", &load_config, py::arg("path"));
  m.def("run_sweep_json", &sweep_json, py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def(
      "emit_sweep",
      [](const ExperimentConfig& cfg, const std::filesystem::path& dir) {
        emit_report(run_sweep(prepare_study(cfg)), dir);
      },
      py::arg("config"), py::arg("directory"), py::call_guard<py::gil_scoped_release>());
}
