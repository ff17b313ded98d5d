#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "cyclofem/scenario.hpp"

using namespace cyclofem;

TEST_CASE("piecewise-linear load program interpolates and wraps") {
  LoadProgram p;
  p.period = 1.0;
  p.knot_t = {0.0, 0.25, 0.75, 1.0};
  p.knot_p = {0.0, 250.0, -50.0, 0.0};
  p.validate();

  CHECK(p.amplitude(0.0) == 0.0);
  CHECK(p.amplitude(0.25) == 250.0);
  CHECK(p.amplitude(0.125) == doctest::Approx(125.0));
  CHECK(p.amplitude(0.5) == doctest::Approx(100.0));
  CHECK(p.amplitude(0.75) == -50.0);
  CHECK(p.amplitude(1.0) == doctest::Approx(0.0));
  CHECK(p.amplitude(2.125) == doctest::Approx(p.amplitude(0.125)));
  CHECK(p.amplitude(-0.875) == doctest::Approx(p.amplitude(0.125)));
  CHECK(p.min_amplitude() == -50.0);
  CHECK(p.max_amplitude() == 250.0);

  LoadProgram open = p;
  open.knot_p.back() = 1.0;
  CHECK_THROWS_AS(open.validate(), std::invalid_argument);
  LoadProgram unsorted = p;
  std::swap(unsorted.knot_t[1], unsorted.knot_t[2]);
  CHECK_THROWS_AS(unsorted.validate(), std::invalid_argument);
}

TEST_CASE("builtin benchmarks carry the recorded parameters") {
  const Scenario plate = builtin_scenario("plate-paper");
  CHECK(plate.kind == "plane-strain");
  CHECK(plate.material.E == 205.0);
  CHECK(plate.material.H_kin == 21640.0);
  CHECK(plate.material.beta == 0.4);
  CHECK(plate.load.max_amplitude() == 250.0);
  CHECK(plate.load.min_amplitude() == -50.0);
  CHECK(plate.n_tau == 101);
  CHECK(plate.cycles() == 20);
  CHECK(plate.total_cycles() == 22);

  const Scenario pile = builtin_scenario("monopile-paper");
  CHECK(pile.kind == "winkler-beam");
  CHECK(pile.beam.n_dof() == 92);
  CHECK(pile.beam.layers.size() == 3);
  CHECK(pile.beam.layers[1].material.E == 1000.0);
  CHECK(pile.beam.layers[2].material.H_kin == 4666.7);
  CHECK(pile.load.min_amplitude() == 30.0);
  CHECK(pile.load.max_amplitude() == 130.0);
  CHECK(pile.cycles() == 20000);
  CHECK(pile.total_cycles() == 20002);

  CHECK_THROWS_AS(builtin_scenario("nope"), std::invalid_argument);
  CHECK(builtin_scenario_names().size() == 2);
}

TEST_CASE("scenario JSON round trip is idempotent") {
  for (const std::string& name : builtin_scenario_names()) {
    const Scenario a = builtin_scenario(name);
    const std::string text1 = scenario_to_json_text(a);
    const Scenario b = scenario_from_json_text(text1);
    const std::string text2 = scenario_to_json_text(b);
    CHECK(text1 == text2);
    CHECK(b.name == a.name);
    CHECK(b.kind == a.kind);
    CHECK(b.n_tau == a.n_tau);
    CHECK(b.scales == a.scales);
    CHECK(b.load.knot_p == a.load.knot_p);
    CHECK(b.units == a.units);
  }
}

TEST_CASE("scenario files round trip and malformed input is diagnosed") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "cyclofem_scenario.json").string();
  const Scenario a = builtin_scenario("plate-paper");
  save_scenario(a, path);
  const Scenario b = load_scenario(path);
  CHECK(scenario_to_json_text(b) == scenario_to_json_text(a));
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), std::runtime_error);
  CHECK_THROWS_AS(scenario_from_json_text("{not json"), std::invalid_argument);
  CHECK_THROWS_AS(scenario_from_json_text("{\"format\":\"other\"}"), std::invalid_argument);

  Scenario bad = a;
  bad.scales = {};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = a;
  bad.solver = "magic";
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("scenario systems and schedules have the advertised shapes") {
  Scenario plate = builtin_scenario("plate-paper");
  plate.plate.n_theta = 16;  // desk-scale mesh
  plate.plate.n_rings = 4;
  auto sys = make_system(plate);
  CHECK(sys->n_free() > 0);
  CHECK(dynamic_cast<PlateSystem*>(sys.get()) != nullptr);

  const TimeGrid g = scenario_grid(plate);
  CHECK(g.n_tau == 101);
  CHECK(g.cycles() == 20);
  CHECK(g.steps() == 100 * 20 + 1);

  std::vector<double> times, loads;
  load_schedule(plate, 22, times, loads);
  REQUIRE(times.size() == 100 * 22 + 1);
  CHECK(times.front() == 0.0);
  CHECK(times.back() == doctest::Approx(22.0));
  CHECK(loads.front() == 0.0);
  CHECK(loads.back() == doctest::Approx(0.0));
  // peak of every cycle hits the programmed maximum
  for (int c = 0; c < 22; ++c)
    CHECK(loads[static_cast<std::size_t>(100 * c + 25)] == doctest::Approx(250.0));

  const auto traces = default_traces(plate, *sys);
  REQUIRE(traces.size() == 2);
  CHECK(traces[0].name == "corner_ux");
  for (const auto& t : traces) {
    CHECK(t.dof >= 0);
    CHECK(t.dof < sys->n_free());
  }

  const Scenario pile = builtin_scenario("monopile-paper");
  auto psys = make_system(pile);
  CHECK(psys->n_free() == 92);
  const auto ptr = default_traces(pile, *psys);
  REQUIRE(ptr.size() == 1);
  CHECK(ptr[0].dof == 0);
}
