#include "cyclofem/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace cyclofem {

using nlohmann::json;

// ---------------------------------------------------------------------------
// LoadProgram

void LoadProgram::validate() const {
  if (!(period > 0)) throw std::invalid_argument("load program: period must be > 0");
  if (knot_t.size() < 2 || knot_t.size() != knot_p.size())
    throw std::invalid_argument("load program: need >= 2 knots with matching amplitudes");
  if (knot_t.front() != 0.0 || knot_t.back() != period)
    throw std::invalid_argument("load program: knots must span [0, period]");
  for (std::size_t i = 1; i < knot_t.size(); ++i)
    if (!(knot_t[i] > knot_t[i - 1]))
      throw std::invalid_argument("load program: knot times must be strictly ascending");
  if (knot_p.front() != knot_p.back())
    throw std::invalid_argument("load program: cycles are periodic, first and last amplitude must match");
}

double LoadProgram::amplitude(double t) const {
  double s = std::fmod(t, period);
  if (s < 0) s += period;
  for (std::size_t i = 1; i < knot_t.size(); ++i) {
    if (s <= knot_t[i]) {
      const double a = (s - knot_t[i - 1]) / (knot_t[i] - knot_t[i - 1]);
      return knot_p[i - 1] + a * (knot_p[i] - knot_p[i - 1]);
    }
  }
  return knot_p.back();
}

double LoadProgram::min_amplitude() const {
  double m = knot_p.front();
  for (double p : knot_p) m = std::min(m, p);
  return m;
}

double LoadProgram::max_amplitude() const {
  double m = knot_p.front();
  for (double p : knot_p) m = std::max(m, p);
  return m;
}

// ---------------------------------------------------------------------------
// Scenario

void Scenario::validate() const {
  if (kind != "plane-strain" && kind != "winkler-beam")
    throw std::invalid_argument("scenario: kind must be plane-strain or winkler-beam");
  if (kind == "plane-strain") {
    material.validate();
    if (!(plate.side > 0) || !(plate.hole_radius > 0) || !(plate.thickness > 0))
      throw std::invalid_argument("scenario: plate dimensions must be positive");
    if (plate.n_theta < 8 || plate.n_rings < 2)
      throw std::invalid_argument("scenario: plate mesh resolution too coarse");
  } else {
    beam.validate();
  }
  load.validate();
  if (n_tau < 2) throw std::invalid_argument("scenario: n_tau must be >= 2");
  if (scales.empty()) throw std::invalid_argument("scenario: need at least one scale");
  for (int s : scales)
    if (s < 1) throw std::invalid_argument("scenario: scale sizes must be >= 1");
  if (warmup_cycles < 0) throw std::invalid_argument("scenario: warmup_cycles must be >= 0");
  if (solver != "incremental" && solver != "pgd")
    throw std::invalid_argument("scenario: solver must be incremental or pgd");
  if (modes < 1) throw std::invalid_argument("scenario: modes must be >= 1");
  settings.validate();
}

long long Scenario::cycles() const {
  long long c = 1;
  for (int s : scales) c *= s;
  return c;
}

long long Scenario::total_cycles() const { return warmup_cycles + cycles(); }

// ---------------------------------------------------------------------------
// Built-in benchmarks with embedded parameter self-checks

namespace {

void check_value(const std::string& scenario, const std::string& field, double got,
                 double expected) {
  if (got != expected) {
    std::ostringstream os;
    os << "builtin scenario " << scenario << ": field " << field << " = " << got
       << " disagrees with the recorded value " << expected;
    throw std::logic_error(os.str());
  }
}

Scenario plate_paper() {
  Scenario s;
  s.name = "plate-paper";
  s.kind = "plane-strain";
  s.units = {{"length", "mm"}, {"force", "N"}, {"stress", "MPa"}};
  s.plate = PlateGeometry{};  // 30 mm square, 6 mm hole, 0.1 mm thickness
  s.material.E = 205.0;
  s.material.nu = 0.3;
  s.material.sigma_p = 100.0;
  s.material.H_iso = 1140.0;
  s.material.H_kin = 21640.0;
  s.material.beta = 0.4;
  s.load.period = 1.0;
  s.load.knot_t = {0.0, 0.25, 0.75, 1.0};
  s.load.knot_p = {0.0, 250.0, -50.0, 0.0};
  s.n_tau = 101;
  s.scales = {5, 4};
  s.warmup_cycles = 2;
  return s;
}

Scenario monopile_paper() {
  Scenario s;
  s.name = "monopile-paper";
  s.kind = "winkler-beam";
  s.units = {{"length", "m"},
             {"force", "kN"},
             {"beam_EI", "kN m^2"},
             {"spring", "kN/m^2, distributed; spring stiffness = E x tributary length"}};
  s.beam.length = 15.0;
  s.beam.n_elems = 45;
  s.beam.EI = 2.1e8 * annulus_inertia(0.92, 1.0);
  auto soil = [](double E, double sigma_p, double H_kin) {
    MaterialParams m;
    m.E = E;
    m.sigma_p = sigma_p;
    m.H_iso = 0.0;
    m.H_kin = H_kin;
    m.beta = 0.01;
    return m;
  };
  s.beam.layers = {{0.0, 5.0, soil(266.67, 2.0, 1466.7)},
                   {5.0, 10.0, soil(1000.0, 2.67, 2666.7)},
                   {10.0, 15.0, soil(1333.3, 3.33, 4666.7)}};
  s.load.period = 1.0;
  s.load.knot_t = {0.0, 0.5, 1.0};
  s.load.knot_p = {30.0, 130.0, 30.0};
  s.n_tau = 101;
  s.scales = {200, 100};
  s.warmup_cycles = 2;
  return s;
}

// Tripwire against accidental edits of the benchmark definitions.
void self_check(const Scenario& s) {
  if (s.name == "plate-paper") {
    check_value(s.name, "E", s.material.E, 205.0);
    check_value(s.name, "nu", s.material.nu, 0.3);
    check_value(s.name, "sigma_p", s.material.sigma_p, 100.0);
    check_value(s.name, "H_iso", s.material.H_iso, 1140.0);
    check_value(s.name, "H_kin", s.material.H_kin, 21640.0);
    check_value(s.name, "beta", s.material.beta, 0.4);
    check_value(s.name, "side", s.plate.side, 30.0);
    check_value(s.name, "hole_radius", s.plate.hole_radius, 6.0);
    check_value(s.name, "load_min", s.load.min_amplitude(), -50.0);
    check_value(s.name, "load_max", s.load.max_amplitude(), 250.0);
    check_value(s.name, "n_tau", s.n_tau, 101);
    check_value(s.name, "cycles", static_cast<double>(s.total_cycles()), 22.0);
  } else if (s.name == "monopile-paper") {
    check_value(s.name, "length", s.beam.length, 15.0);
    check_value(s.name, "springs", s.beam.n_springs(), 45.0);
    check_value(s.name, "n_dof", s.beam.n_dof(), 92.0);
    check_value(s.name, "EI", s.beam.EI, 2.1e8 * annulus_inertia(0.92, 1.0));
    const double expected[3][3] = {{266.67, 2.0, 1466.7}, {1000.0, 2.67, 2666.7},
                                   {1333.3, 3.33, 4666.7}};
    for (int l = 0; l < 3; ++l) {
      check_value(s.name, "layer E", s.beam.layers[static_cast<std::size_t>(l)].material.E,
                  expected[l][0]);
      check_value(s.name, "layer sigma_p",
                  s.beam.layers[static_cast<std::size_t>(l)].material.sigma_p, expected[l][1]);
      check_value(s.name, "layer H_kin",
                  s.beam.layers[static_cast<std::size_t>(l)].material.H_kin, expected[l][2]);
      check_value(s.name, "layer beta", s.beam.layers[static_cast<std::size_t>(l)].material.beta,
                  0.01);
    }
    check_value(s.name, "load_min", s.load.min_amplitude(), 30.0);
    check_value(s.name, "load_max", s.load.max_amplitude(), 130.0);
    check_value(s.name, "n_tau", s.n_tau, 101);
    check_value(s.name, "cycles", static_cast<double>(s.total_cycles()), 20002.0);
  }
}

}  // namespace

std::vector<std::string> builtin_scenario_names() { return {"plate-paper", "monopile-paper"}; }

Scenario builtin_scenario(const std::string& name) {
  Scenario s;
  if (name == "plate-paper")
    s = plate_paper();
  else if (name == "monopile-paper")
    s = monopile_paper();
  else
    throw std::invalid_argument("unknown builtin scenario '" + name +
                                "' (available: plate-paper, monopile-paper)");
  self_check(s);
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// JSON round trip

namespace {

json material_to_json(const MaterialParams& m) {
  return {{"E", m.E},         {"nu", m.nu},       {"sigma_p", m.sigma_p},
          {"H_iso", m.H_iso}, {"H_kin", m.H_kin}, {"beta", m.beta}};
}

MaterialParams material_from_json(const json& j) {
  MaterialParams m;
  m.E = j.at("E").get<double>();
  m.nu = j.value("nu", 0.0);
  m.sigma_p = j.at("sigma_p").get<double>();
  m.H_iso = j.value("H_iso", 0.0);
  m.H_kin = j.value("H_kin", 0.0);
  m.beta = j.value("beta", 0.0);
  return m;
}

}  // namespace

std::string scenario_to_json_text(const Scenario& s) {
  json j;
  j["format"] = "cyclofem-scenario";
  j["version"] = 1;
  j["name"] = s.name;
  j["kind"] = s.kind;
  j["units"] = s.units;
  if (s.kind == "plane-strain") {
    j["geometry"] = {{"side", s.plate.side},
                     {"hole_radius", s.plate.hole_radius},
                     {"n_theta", s.plate.n_theta},
                     {"n_rings", s.plate.n_rings},
                     {"thickness", s.plate.thickness}};
    j["material"] = material_to_json(s.material);
  } else {
    json layers = json::array();
    for (const auto& l : s.beam.layers)
      layers.push_back(
          {{"top", l.top}, {"bottom", l.bottom}, {"material", material_to_json(l.material)}});
    j["beam"] = {{"length", s.beam.length},
                 {"n_elems", s.beam.n_elems},
                 {"EI", s.beam.EI},
                 {"layers", layers}};
  }
  json knots = json::array();
  for (std::size_t i = 0; i < s.load.knot_t.size(); ++i)
    knots.push_back({s.load.knot_t[i], s.load.knot_p[i]});
  j["load"] = {{"period", s.load.period}, {"knots", knots}};
  j["time"] = {{"n_tau", s.n_tau}, {"scales", s.scales}, {"warmup_cycles", s.warmup_cycles}};
  j["solver"] = {{"method", s.solver},
                 {"modes", s.modes},
                 {"newton_tol", s.settings.newton_tol},
                 {"max_newton_iters", s.settings.max_newton_iters},
                 {"max_bisection_depth", s.settings.max_bisection_depth},
                 {"consistent_tangent", s.settings.consistent_tangent}};
  return j.dump(2) + "\n";
}

Scenario scenario_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("scenario: JSON parse error: ") + e.what());
  }
  if (j.value("format", "") != "cyclofem-scenario")
    throw std::invalid_argument("scenario: not a cyclofem-scenario document");
  if (j.value("version", 0) != 1)
    throw std::invalid_argument("scenario: unsupported schema version");

  Scenario s;
  try {
    s.name = j.value("name", "");
    s.kind = j.at("kind").get<std::string>();
    if (j.contains("units"))
      s.units = j.at("units").get<std::map<std::string, std::string>>();
    if (s.kind == "plane-strain") {
      const json& g = j.at("geometry");
      s.plate.side = g.at("side").get<double>();
      s.plate.hole_radius = g.at("hole_radius").get<double>();
      s.plate.n_theta = g.value("n_theta", 60);
      s.plate.n_rings = g.value("n_rings", 13);
      s.plate.thickness = g.at("thickness").get<double>();
      s.material = material_from_json(j.at("material"));
    } else if (s.kind == "winkler-beam") {
      const json& b = j.at("beam");
      s.beam.length = b.at("length").get<double>();
      s.beam.n_elems = b.at("n_elems").get<int>();
      s.beam.EI = b.at("EI").get<double>();
      for (const auto& l : b.at("layers"))
        s.beam.layers.push_back(
            {l.at("top").get<double>(), l.at("bottom").get<double>(),
             material_from_json(l.at("material"))});
    }
    const json& ld = j.at("load");
    s.load.period = ld.value("period", 1.0);
    for (const auto& k : ld.at("knots")) {
      s.load.knot_t.push_back(k.at(0).get<double>());
      s.load.knot_p.push_back(k.at(1).get<double>());
    }
    const json& t = j.at("time");
    s.n_tau = t.at("n_tau").get<int>();
    s.scales = t.at("scales").get<std::vector<int>>();
    s.warmup_cycles = t.value("warmup_cycles", 2);
    if (j.contains("solver")) {
      const json& so = j.at("solver");
      s.solver = so.value("method", "incremental");
      s.modes = so.value("modes", 3);
      s.settings.newton_tol = so.value("newton_tol", s.settings.newton_tol);
      s.settings.max_newton_iters = so.value("max_newton_iters", s.settings.max_newton_iters);
      s.settings.max_bisection_depth =
          so.value("max_bisection_depth", s.settings.max_bisection_depth);
      s.settings.consistent_tangent =
          so.value("consistent_tangent", s.settings.consistent_tangent);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scenario: ") + e.what());
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return scenario_from_json_text(ss.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open scenario file for writing: " + path);
  os << scenario_to_json_text(s);
  if (!os) throw std::runtime_error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Assembly helpers

std::unique_ptr<System> make_system(const Scenario& s) {
  s.validate();
  if (s.kind == "plane-strain") {
    Mesh2D mesh = plate_mesh(s.plate.side, s.plate.hole_radius, s.plate.n_theta, s.plate.n_rings);
    return std::make_unique<PlateSystem>(std::move(mesh), s.material, s.plate.thickness, "bottom",
                                         "top", 1.0);
  }
  return std::make_unique<MonopileSystem>(s.beam);
}

TimeGrid scenario_grid(const Scenario& s) {
  return TimeGrid::uniform(s.n_tau, s.load.period, s.scales);
}

void load_schedule(const Scenario& s, long long cycles, std::vector<double>& times,
                   std::vector<double>& loads) {
  if (cycles < 1) throw std::invalid_argument("load schedule: cycles must be >= 1");
  const double dt = s.load.period / (s.n_tau - 1);
  const long long n = (s.n_tau - 1) * cycles;
  times.clear();
  loads.clear();
  times.reserve(static_cast<std::size_t>(n + 1));
  loads.reserve(static_cast<std::size_t>(n + 1));
  for (long long i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) * dt;
    times.push_back(t);
    loads.push_back(s.load.amplitude(t));
  }
}

std::vector<TraceColumn> default_traces(const Scenario& s, const System& system) {
  if (s.kind == "winkler-beam") return {{"head_deflection", 0}};
  const auto* plate = dynamic_cast<const PlateSystem*>(&system);
  if (!plate) throw std::invalid_argument("default traces: system does not match scenario kind");
  const Mesh2D& mesh = plate->mesh();
  int best = -1;
  double best_d = 0.0;
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    const double dx = mesh.nodes[i][0] - 0.0, dy = mesh.nodes[i][1] - s.plate.side;
    const double d = dx * dx + dy * dy;
    if (best < 0 || d < best_d) {
      best = static_cast<int>(i);
      best_d = d;
    }
  }
  const DofMap2D& dofs = plate->dof_map();
  const int ux = dofs.free_index[static_cast<std::size_t>(2 * best)];
  const int uy = dofs.free_index[static_cast<std::size_t>(2 * best + 1)];
  if (ux < 0 || uy < 0)
    throw std::invalid_argument("default traces: corner node is constrained");
  return {{"corner_ux", ux}, {"corner_uy", uy}};
}

}  // namespace cyclofem
