#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hybridcare/analytics.hpp"
#include "hybridcare/commands.hpp"
#include "hybridcare/errors.hpp"
#include "hybridcare/multitype.hpp"
#include "hybridcare/params.hpp"
#include "hybridcare/simulator.hpp"
#include "hybridcare/solver.hpp"

namespace py = pybind11;
using namespace hybridcare;

namespace {

std::string repr_fields(const char* name, std::initializer_list<std::pair<const char*, double>> fields) {
  std::ostringstream os;
  os << name << "(";
  bool first = true;
  for (const auto& [k, v] : fields) {
    os << (first ? "" : ", ") << k << "=" << format_number(v);
    first = false;
  }
  os << ")";
  return os.str();
}

PolicyComparison compare(const std::vector<PatientParams>& types, double capacity,
                         std::optional<std::vector<double>> thresholds, double horizon, double dt, int replications,
                         std::uint64_t seed, std::optional<long> onsite_slots, unsigned threads) {
  SimConfig cfg;
  cfg.instance = {types, capacity};
  cfg.thresholds = thresholds ? *thresholds : solve_multitype(cfg.instance).a_star;
  cfg.horizon = horizon;
  cfg.dt = dt;
  cfg.replications = replications;
  cfg.seed = seed;
  cfg.onsite_slots = onsite_slots;
  cfg.threads = threads;
  py::gil_scoped_release release;
  return compare_policies(cfg);
}

py::tuple run(const std::string& command, const std::filesystem::path& config, std::optional<std::string> format,
              std::optional<std::uint64_t> seed, unsigned threads) {
  CommandOptions opts;
  opts.config = config;
  opts.format = std::move(format);
  opts.seed = seed;
  opts.threads = threads;
  std::ostringstream out, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = run_command(command, opts, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Call-in threshold analysis, capacity allocation and ward simulation";
  m.attr("__version__") = "0.1.0";

  m.attr("InfeasibleError") = py::reinterpret_steal<py::object>(
      PyErr_NewException("hybridcare.InfeasibleError", PyExc_RuntimeError, nullptr));
  m.attr("IdentifiabilityError") = py::reinterpret_steal<py::object>(
      PyErr_NewException("hybridcare.IdentifiabilityError", PyExc_RuntimeError, nullptr));
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InfeasibleError& e) {
      const py::object type = py::module_::import("hybridcare._core").attr("InfeasibleError");
      py::object err = type(e.what());
      err.attr("w_min") = e.w_min();
      err.attr("capacity") = e.capacity();
      PyErr_SetObject(type.ptr(), err.ptr());
    } catch (const IdentifiabilityError& e) {
      const py::object type = py::module_::import("hybridcare._core").attr("IdentifiabilityError");
      PyErr_SetString(type.ptr(), e.what());
    } catch (const ValidationError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const DomainError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const UnsupportedError& e) {
      PyErr_SetString(PyExc_NotImplementedError, e.what());
    }
  });

  py::class_<PatientParams>(m, "PatientParams")
      .def(py::init([](py::kwargs kw) {
             PatientParams p;
             py::object self = py::cast(p);
             for (const auto& [k, v] : kw) {
               const std::string key = py::str(k);
               if (!py::hasattr(self, key.c_str())) throw py::type_error("unknown parameter '" + key + "'");
               self.attr(key.c_str()) = v;
             }
             p = self.cast<PatientParams>();
             validate(p);
             return p;
           }))
      .def_readwrite("lambda_", &PatientParams::lambda)
      .def_readwrite("x", &PatientParams::x)
      .def_readwrite("T", &PatientParams::T)
      .def_readwrite("theta_R", &PatientParams::theta_R)
      .def_readwrite("theta_H", &PatientParams::theta_H)
      .def_readwrite("theta_T", &PatientParams::theta_T)
      .def_readwrite("sigma_R", &PatientParams::sigma_R)
      .def_readwrite("sigma_H", &PatientParams::sigma_H)
      .def_readwrite("h_R", &PatientParams::h_R)
      .def_readwrite("h_H", &PatientParams::h_H)
      .def_readwrite("h_T", &PatientParams::h_T)
      .def_readwrite("S_bar", &PatientParams::S_bar)
      .def("validate", [](const PatientParams& p) { validate(p); })
      .def("max_threshold", &max_threshold)
      .def("__repr__", [](const PatientParams& p) {
        return repr_fields(
            "PatientParams", {{"lambda_", p.lambda}, {"x", p.x}, {"T", p.T}, {"theta_R", p.theta_R},
                              {"theta_H", p.theta_H}, {"theta_T", p.theta_T}, {"sigma_R", p.sigma_R},
                              {"sigma_H", p.sigma_H}, {"h_R", p.h_R}, {"h_H", p.h_H}, {"h_T", p.h_T},
                              {"S_bar", p.S_bar}});
      });

  py::class_<DerivedCoeffs>(m, "DerivedCoeffs")
      .def_readonly("rho", &DerivedCoeffs::rho)
      .def_readonly("alpha", &DerivedCoeffs::alpha)
      .def_readonly("beta", &DerivedCoeffs::beta)
      .def_readonly("gamma", &DerivedCoeffs::gamma)
      .def_readonly("eta", &DerivedCoeffs::eta)
      .def_readonly("Delta", &DerivedCoeffs::Delta)
      .def_readonly("A_bar", &DerivedCoeffs::A_bar);

  py::class_<Workloads>(m, "Workloads")
      .def_readonly("onsite", &Workloads::onsite)
      .def_readonly("remote", &Workloads::remote)
      .def_readonly("total", &Workloads::total)
      .def("__repr__", [](const Workloads& w) {
        return repr_fields("Workloads", {{"onsite", w.onsite}, {"remote", w.remote}, {"total", w.total}});
      });

  py::enum_<WorkloadShape>(m, "WorkloadShape")
      .value("Decreasing", WorkloadShape::Decreasing)
      .value("Unimodal", WorkloadShape::Unimodal)
      .value("Increasing", WorkloadShape::Increasing);

  py::class_<WorkloadCase>(m, "WorkloadCase")
      .def_readonly("shape", &WorkloadCase::shape)
      .def_readonly("a0", &WorkloadCase::a0);

  py::enum_<Regime>(m, "Regime")
      .value("MaxAllowable", Regime::MaxAllowable)
      .value("Interior", Regime::Interior)
      .value("ImmediateOnsite", Regime::ImmediateOnsite)
      .value("CapacityBinding", Regime::CapacityBinding);

  py::class_<ThresholdSolution>(m, "ThresholdSolution")
      .def_readonly("a_star", &ThresholdSolution::a_star)
      .def_readonly("regime", &ThresholdSolution::regime)
      .def_readonly("gamma_shadow", &ThresholdSolution::gamma_shadow)
      .def_readonly("cost", &ThresholdSolution::cost)
      .def_readonly("call_in_prob", &ThresholdSolution::call_in_prob)
      .def_readonly("workloads", &ThresholdSolution::workloads)
      .def_readonly("remote_moment_negative", &ThresholdSolution::remote_moment_negative);

  py::class_<FeasibilitySummary>(m, "FeasibilitySummary")
      .def_readonly("workload_case", &FeasibilitySummary::workload_case)
      .def_readonly("a_min", &FeasibilitySummary::a_min)
      .def_readonly("w_min", &FeasibilitySummary::w_min)
      .def("feasible_for", &FeasibilitySummary::feasible_for);

  py::class_<TravelSample>(m, "TravelSample")
      .def_readonly("T", &TravelSample::T)
      .def_readonly("a_star", &TravelSample::a_star)
      .def_readonly("da_dT", &TravelSample::da_dT);

  py::class_<TravelProfile>(m, "TravelProfile")
      .def_readonly("T_LB", &TravelProfile::T_LB)
      .def_readonly("T_UB", &TravelProfile::T_UB)
      .def_readonly("T_hat", &TravelProfile::T_hat)
      .def_readonly("empty_interval", &TravelProfile::empty_interval)
      .def_readonly("samples", &TravelProfile::samples);

  m.def("derive_coeffs", &derive_coeffs);
  m.def("call_in_prob", &call_in_prob, py::arg("rho"), py::arg("x"),
        py::arg("a"));
  m.def("workloads", &workloads, py::arg("params"), py::arg("a"));
  m.def("cost_rate", &cost_rate, py::arg("params"), py::arg("a"));
  m.def("cost_rate_quadratic", [](const PatientParams& p, double a) { return cost_rate_quadratic(p, a).value; },
        py::arg("params"), py::arg("a"));
  m.def("classify_workload", &classify_workload);
  m.def("feasibility", &feasibility);
  m.def("solve_uncapacitated", &solve_uncapacitated);
  m.def("solve_capacitated", &solve_capacitated, py::arg("params"), py::arg("capacity"));
  m.def("solve_quadratic", &solve_quadratic, py::arg("params"), py::arg("capacity") = std::nullopt);
  m.def(
      "travel_profile",
      [](const PatientParams& p, const std::vector<double>& T_grid) { return travel_profile(p, T_grid); },
      py::arg("params"), py::arg("T_grid"));

  py::class_<MultiSolution>(m, "MultiSolution")
      .def_readonly("a_star", &MultiSolution::a_star)
      .def_readonly("gamma_shadow", &MultiSolution::gamma_shadow)
      .def_readonly("interior_set", &MultiSolution::interior_set)
      .def_readonly("workloads", &MultiSolution::workloads)
      .def_readonly("costs", &MultiSolution::costs)
      .def_readonly("total_workload", &MultiSolution::total_workload)
      .def_readonly("total_cost", &MultiSolution::total_cost)
      .def_readonly("constraint_active", &MultiSolution::constraint_active)
      .def_readonly("method", &MultiSolution::method)
      .def_readonly("a_min", &MultiSolution::a_min)
      .def_readonly("a_inf", &MultiSolution::a_inf);

  py::class_<KktReport>(m, "KktReport")
      .def_readonly("between", &KktReport::between)
      .def_readonly("active", &KktReport::active)
      .def_readonly("stationary", &KktReport::stationary)
      .def_readonly("passed", &KktReport::passed)
      .def_readonly("capacity_residual", &KktReport::capacity_residual)
      .def_readonly("stationarity_residuals", &KktReport::stationarity_residuals);

  m.def(
      "solve_multitype",
      [](const std::vector<PatientParams>& types, double capacity) { return solve_multitype({types, capacity}); },
      py::arg("types"), py::arg("capacity") = std::numeric_limits<double>::infinity());
  m.def(
      "kkt_check",
      [](const std::vector<PatientParams>& types, double capacity, const MultiSolution& sol) {
        return kkt_check({types, capacity}, sol);
      },
      py::arg("types"), py::arg("capacity"), py::arg("solution"));

  py::class_<PolicyComparison>(m, "PolicyComparison")
      .def_property_readonly("cost_best_score", [](const PolicyComparison& c) { return c.first.mean_cost; })
      .def_property_readonly("cost_index", [](const PolicyComparison& c) { return c.second.mean_cost; })
      .def_readonly("differences", &PolicyComparison::differences)
      .def_readonly("mean_difference", &PolicyComparison::mean_difference)
      .def_readonly("std_error", &PolicyComparison::std_error)
      .def_readonly("ci_low", &PolicyComparison::ci_low)
      .def_readonly("ci_high", &PolicyComparison::ci_high)
      .def_readonly("relative_improvement", &PolicyComparison::relative_improvement);

  m.def("compare_policies", &compare, py::arg("types"), py::arg("capacity"), py::arg("thresholds") = std::nullopt,
        py::arg("horizon") = 1e4, py::arg("dt") = 0.01, py::arg("replications") = 10, py::arg("seed") = 1,
        py::arg("onsite_slots") = std::nullopt, py::arg("threads") = 0,
        "Simulate both swap policies on common random numbers. Thresholds default to the shared-multiplier optimum.");

  m.def("run_command", &run, py::arg("command"), py::arg("config"), py::arg("format") = std::nullopt,
        py::arg("seed") = std::nullopt, py::arg("threads") = 0,
        "Run a CLI command in process; returns (exit_code, stdout, stderr).");
}
