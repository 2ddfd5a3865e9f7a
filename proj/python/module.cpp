#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bentcable/cli.hpp"
#include "bentcable/io.hpp"
#include "bentcable/model.hpp"
#include "bentcable/simulate.hpp"
#include "bentcable/summarize.hpp"

namespace py = pybind11;
using namespace bentcable;

namespace {

py::object json_to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

// Fits a long-format CSV and returns the population summary as a dict.
py::object fit_csv(const std::string& csv, int p, const std::string& variant, int iterations, int burnin,
                   std::uint64_t seed, int chains) {
  const auto ds = parse_csv(csv);
  ChainSettings cs;
  cs.iterations = iterations;
  cs.burnin = burnin;
  cs.seed = seed;
  cs.variant = parse_variant(variant);
  cs.validate();
  const auto scales = elicit_scale_matrices(ds);
  const auto hyper = default_hyperparameters(p, scales.beta, scales.alpha);
  std::vector<ChainOutput> out;
  {
    py::gil_scoped_release release;
    out = run_chains(ds, hyper, cs, chains, default_thread_count());
  }
  return json_to_py(to_json(summarize_population(merge_chains(out))));
}

}  // namespace

PYBIND11_MODULE(_bentcable, m) {
  m.doc() = "Bayesian mixture bent-cable models for longitudinal data";
  m.attr("__version__") = BENTCABLE_VERSION;

  m.def(
      "q_basis", [](double t, double gamma, double tau) { return q_basis(t, {gamma, tau}); }, py::arg("t"),
      py::arg("gamma"), py::arg("tau"));
  m.def(
      "bent_cable",
      [](double t, double b0, double b1, double b2, double gamma, double tau) {
        return bent_cable(t, {b0, b1, b2}, {gamma, tau});
      },
      py::arg("t"), py::arg("beta0"), py::arg("beta1"), py::arg("beta2"), py::arg("gamma"), py::arg("tau"));
  m.def(
      "critical_time_point",
      [](double b0, double b1, double b2, double gamma, double tau) {
        return critical_time_point({b0, b1, b2}, {gamma, tau});
      },
      py::arg("beta0"), py::arg("beta1"), py::arg("beta2"), py::arg("gamma"), py::arg("tau"),
      "Time at which the cable's slope changes sign, or None.");

  m.def("scenario_names", &builtin_scenario_names);
  m.def(
      "simulate",
      [](const std::string& scenario, std::uint64_t seed) {
        ScenarioSpec spec = builtin_scenario(scenario);
        spec.seed = seed;
        const auto [ds, truth] = generate(spec);
        return py::make_tuple(to_csv(ds), json_to_py(to_json(truth)));
      },
      py::arg("scenario") = "S2", py::arg("seed") = 1,
      "Returns (csv_text, truth_dict) for a built-in scenario.");
  m.def("fit", &fit_csv, py::arg("csv"), py::arg("p") = 1, py::arg("variant") = "flexible",
        py::arg("iterations") = 20000, py::arg("burnin") = 5000, py::arg("seed") = 1, py::arg("chains") = 1,
        "Fits CSV text (header id,time,y) and returns the population summary.");
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line in-process; returns (exit_code, stdout, stderr).");

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ModelSetupError>(m, "ModelSetupError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);
}
