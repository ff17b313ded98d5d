#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cyclofem/beam.hpp"
#include "cyclofem/history_io.hpp"
#include "cyclofem/incremental.hpp"
#include "cyclofem/mesh.hpp"
#include "cyclofem/timegrid.hpp"

namespace cyclofem {

// Piecewise-linear load amplitude over one cycle, repeated periodically.
struct LoadProgram {
  double period = 1.0;
  std::vector<double> knot_t;  // ascending, first 0, last == period
  std::vector<double> knot_p;  // first == last (cycles close on themselves)

  void validate() const;
  double amplitude(double t) const;  // t taken modulo period
  double min_amplitude() const;
  double max_amplitude() const;
};

struct PlateGeometry {
  double side = 30.0;
  double hole_radius = 6.0;
  int n_theta = 60;
  int n_rings = 13;
  double thickness = 0.1;
};

// Declarative problem description: geometry, material, load program, and
// time discretization for either solver pipeline.
struct Scenario {
  std::string name;
  std::string kind;  // "plane-strain" | "winkler-beam"
  std::map<std::string, std::string> units;

  PlateGeometry plate;      // used when kind == plane-strain
  MaterialParams material;  // used when kind == plane-strain
  BeamModel beam;           // used when kind == winkler-beam

  LoadProgram load;
  int n_tau = 101;
  std::vector<int> scales;  // large-time scale sizes, product = cycle count
  int warmup_cycles = 2;

  std::string solver = "incremental";  // or "pgd"
  int modes = 3;
  SolverSettings settings;

  void validate() const;
  long long cycles() const;        // product of scales
  long long total_cycles() const;  // warmup + cycles
};

// Built-in benchmark scenarios; each self-checks its embedded parameter table.
Scenario builtin_scenario(const std::string& name);
std::vector<std::string> builtin_scenario_names();

// Versioned JSON config round trip.
Scenario scenario_from_json_text(const std::string& text);
std::string scenario_to_json_text(const Scenario& s);
Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& s, const std::string& path);

std::unique_ptr<System> make_system(const Scenario& s);
TimeGrid scenario_grid(const Scenario& s);

// Sampled load program across `cycles` cycles at the small-time nodes; cycle
// boundaries are shared, so the arrays have (n_tau - 1) * cycles + 1 entries.
void load_schedule(const Scenario& s, long long cycles, std::vector<double>& times,
                   std::vector<double>& loads);

// Default observable: plate top-left corner (both components) or pile head.
std::vector<TraceColumn> default_traces(const Scenario& s, const System& system);

}  // namespace cyclofem
