// Python bindings: scenario handling, both solver pipelines through the run
// bundle writer, history/decomposition loading, and comparison metrics.
// Structured results cross the boundary as JSON text; the package wrapper
// decodes them into dicts.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cyclofem/history_io.hpp"
#include "cyclofem/pgd.hpp"
#include "cyclofem/runner.hpp"
#include "cyclofem/scenario.hpp"
#include "cyclofem/timegrid.hpp"
#include "cyclofem/version.hpp"

namespace py = pybind11;
using namespace cyclofem;

namespace {

py::dict history_dict(const HistoryRecord& h) {
  py::dict d;
  d["times"] = h.times;
  d["loads"] = h.loads;
  d["u"] = h.u;
  d["work"] = h.work;
  d["dissipation"] = h.dissipation;
  d["stored"] = h.stored;
  d["newton_iters"] = h.newton_iters;
  return d;
}

py::dict decomposition_dict(const Decomposition& dec) {
  py::dict d;
  d["n_tau"] = dec.grid.n_tau;
  d["period"] = dec.grid.period;
  d["scales"] = dec.grid.scales;
  py::list modes;
  for (const Mode& m : dec.modes) {
    py::dict md;
    md["zeta"] = m.zeta;
    md["phi"] = m.phi;
    py::list theta;
    for (const Eigen::VectorXd& t : m.theta) theta.append(t);
    md["theta"] = theta;
    modes.append(md);
  }
  d["modes"] = modes;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "cyclic elastoplasticity: stepped and separated space-time solvers";
  m.attr("__version__") = CYCLOFEM_VERSION;

  m.def(
      "builtin_scenarios",
      [] { return std::vector<std::string>{"plate-paper", "monopile-paper"}; },
      "Names accepted by builtin_scenario_json.");

  m.def(
      "builtin_scenario_json",
      [](const std::string& name) { return scenario_to_json_text(builtin_scenario(name)); },
      py::arg("name"), "Canonical JSON text of a built-in scenario.");

  m.def(
      "validate_scenario_json",
      [](const std::string& text) {
        Scenario s = scenario_from_json_text(text);
        s.validate();
        return scenario_to_json_text(s);
      },
      py::arg("text"), "Parses, validates, and canonicalizes scenario JSON.");

  m.def(
      "config_fingerprint",
      [](const std::string& text) { return config_fingerprint(scenario_from_json_text(text)); },
      py::arg("text"), "Hash of the canonical configuration, as recorded in run reports.");

  m.def(
      "dof_counts",
      [](long long n_dof, int n_tau, const std::vector<int>& scales, int modes) {
        const DofCounts c = dof_counts(n_dof, n_tau, scales, modes);
        return py::make_tuple(c.incremental, c.separated);
      },
      py::arg("n_dof"), py::arg("n_tau"), py::arg("scales"), py::arg("modes"),
      "Unknown counts (stepped, separated) for a spatial problem.");

  m.def(
      "run_json",
      [](const std::string& scenario_json, const std::string& out_dir, const std::string& solver,
         int modes, long long cycles, const std::vector<int>& scales, unsigned long long seed,
         int threads, bool with_oracle, int snapshot_every) {
        Scenario s = scenario_from_json_text(scenario_json);
        RunOverrides ov;
        ov.solver = solver;
        ov.modes = modes;
        ov.cycles = cycles;
        ov.scales = scales;
        ov.apply(s);
        RunOptions opt;
        opt.out_dir = out_dir;
        opt.seed = seed;
        opt.threads = threads;
        opt.with_oracle = with_oracle;
        opt.snapshot_every = snapshot_every;
        RunReport rep;
        {
          py::gil_scoped_release release;
          rep = run_scenario(s, opt);
        }
        return report_to_json_text(rep);
      },
      py::arg("scenario_json"), py::arg("out_dir") = "out", py::arg("solver") = "",
      py::arg("modes") = 0, py::arg("cycles") = 0, py::arg("scales") = std::vector<int>{},
      py::arg("seed") = 0, py::arg("threads") = 0, py::arg("with_oracle") = true,
      py::arg("snapshot_every") = 0,
      "Runs a scenario, writes the output bundle, and returns the report JSON.");

  m.def(
      "compare_json",
      [](const Eigen::MatrixXd& reference, const Eigen::MatrixXd& other, int n_tau,
         const std::vector<int>& dofs) {
        CompareSelection sel;
        sel.n_tau = n_tau;
        sel.dofs = dofs;
        return comparison_to_json_text(compare_histories(reference, other, sel));
      },
      py::arg("reference"), py::arg("other"), py::arg("n_tau") = 0,
      py::arg("dofs") = std::vector<int>{},
      "Error metrics between two displacement histories, as JSON.");

  m.def(
      "load_history", [](const std::string& path) { return history_dict(load_history(path)); },
      py::arg("path"), "Loads a stepped history bundle into arrays.");

  m.def(
      "load_decomposition",
      [](const std::string& path) { return decomposition_dict(load_decomposition(path)); },
      py::arg("path"), "Loads a separated decomposition into arrays.");

  m.def(
      "reconstruct",
      [](const std::string& path) {
        return Eigen::MatrixXd(reconstruct_all(load_decomposition(path)));
      },
      py::arg("path"), "Dense displacement history evaluated from a stored decomposition.");

  m.def(
      "cycle_boundary_jumps",
      [](const std::string& path) { return cycle_boundary_jumps(load_decomposition(path)); },
      py::arg("path"), "Reconstruction mismatch at each interior cycle boundary.");
}
