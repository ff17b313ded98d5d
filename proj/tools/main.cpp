// Command line front end: run | compare | export | validate.
// Exit codes: 0 success, 1 configuration or usage error, 2 solver failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cyclofem/history_io.hpp"
#include "cyclofem/pgd.hpp"
#include "cyclofem/runner.hpp"
#include "cyclofem/scenario.hpp"
#include "cyclofem/version.hpp"

using namespace cyclofem;

namespace {

struct ScenarioArgs {
  std::string scenario;
  std::string config;
};

void add_scenario_flags(CLI::App* cmd, ScenarioArgs& args) {
  auto* s = cmd->add_option("--scenario", args.scenario,
                            "builtin scenario name (plate-paper, monopile-paper)");
  auto* c = cmd->add_option("--config", args.config, "scenario config file (JSON)");
  s->excludes(c);
}

Scenario resolve_scenario(const ScenarioArgs& args) {
  if (!args.scenario.empty()) return builtin_scenario(args.scenario);
  if (!args.config.empty()) return load_scenario(args.config);
  throw std::invalid_argument("one of --scenario or --config is required");
}

std::string format_scales(const std::vector<int>& scales) {
  std::string out;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (i) out += " x ";
    out += std::to_string(scales[i]);
  }
  return out;
}

void print_scenario_summary(const Scenario& s) {
  std::cout << "name          " << s.name << "\n"
            << "kind          " << s.kind << "\n"
            << "solver        " << s.solver;
  if (s.solver == "pgd") std::cout << " (" << s.modes << " modes)";
  std::cout << "\n"
            << "load range    [" << s.load.min_amplitude() << ", " << s.load.max_amplitude()
            << "]\n"
            << "n_tau         " << s.n_tau << "\n"
            << "scales        " << format_scales(s.scales) << " (" << s.cycles() << " cycles + "
            << s.warmup_cycles << " warmup)\n"
            << "window steps  " << scenario_grid(s).steps() << "\n";
}

// first eight bytes decide the container kind
std::string sniff_magic(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open file: " + path);
  char magic[8] = {};
  is.read(magic, 8);
  if (is.gcount() != 8) throw std::runtime_error("file too short to identify: " + path);
  return std::string(magic, 8);
}

int cmd_run(const ScenarioArgs& sargs, const RunOverrides& over, const RunOptions& opt) {
  Scenario s = resolve_scenario(sargs);
  over.apply(s);
  const RunReport rep = run_scenario(s, opt);

  std::cout << "scenario      " << rep.scenario << "\n"
            << "solver        " << rep.solver << "\n"
            << "space dofs    " << rep.space_dofs << "\n"
            << "unknowns      " << rep.unknowns.incremental << " incremental / "
            << rep.unknowns.separated << " separated\n"
            << "steps         " << rep.steps << "\n";
  if (rep.solver == "pgd") {
    std::cout << "modes built   " << rep.modes_built;
    if (!rep.stop_reason.empty()) std::cout << " (stopped: " << rep.stop_reason << ")";
    std::cout << "\nzeta         ";
    for (double z : rep.zetas) std::printf(" %.6g", z);
    std::cout << "\n";
    if (rep.has_comparison)
      std::printf("oracle error  %.3e relative L2\n", rep.comparison.rel_l2);
  }
  std::printf("dissipation   %.6g over the window\n", rep.window_dissipation);
  std::printf("wall time     %.2f s\n", rep.total_seconds);
  std::cout << "bundle        " << opt.out_dir << " (report.json"
            << (rep.complete ? " complete" : " incomplete") << ")\n";
  return 0;
}

int cmd_compare(const std::string& ref_path, const std::string& other_path,
                const ScenarioArgs& sargs, int n_tau, const std::vector<int>& dofs,
                const std::string& out_path) {
  const HistoryRecord ref = load_history(ref_path);
  const HistoryRecord other = load_history(other_path);

  CompareSelection sel;
  sel.n_tau = n_tau;
  sel.dofs = dofs;
  Scenario s;
  bool have_scenario = false;
  if (!sargs.scenario.empty() || !sargs.config.empty()) {
    s = resolve_scenario(sargs);
    have_scenario = true;
    if (sel.n_tau == 0) sel.n_tau = s.n_tau;
    if (s.kind == "winkler-beam") sel.beam = &s.beam;
  }
  (void)have_scenario;

  const ComparisonReport rep = compare_histories(ref, other, sel);
  const std::string text = comparison_to_json_text(rep);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream os(out_path);
    if (!os) throw std::runtime_error("cannot open for writing: " + out_path);
    os << text;
    std::printf("rel L2 %.6e, max pointwise %.6e -> %s\n", rep.rel_l2, rep.max_pointwise,
                out_path.c_str());
  }
  return 0;
}

int cmd_export(const std::string& in_path, const ScenarioArgs& sargs,
               const std::vector<int>& dofs, std::string out_path) {
  const std::string magic = sniff_magic(in_path);
  if (magic == "CYFDCMP1") {
    if (out_path.empty()) out_path = in_path + ".theta.csv";
    export_theta_csv(load_decomposition(in_path), out_path);
    std::cout << "amplitude table -> " << out_path << "\n";
    return 0;
  }
  if (magic != "CYFHIST1")
    throw std::runtime_error("unrecognized file (bad magic): " + in_path);

  const HistoryRecord rec = load_history(in_path);
  std::vector<TraceColumn> columns;
  if (!dofs.empty()) {
    for (int d : dofs) columns.push_back({"dof" + std::to_string(d), d});
  } else if (!sargs.scenario.empty() || !sargs.config.empty()) {
    const Scenario s = resolve_scenario(sargs);
    columns = default_traces(s, *make_system(s));
  } else {
    for (int d = 0; d < rec.u.rows(); ++d) columns.push_back({"dof" + std::to_string(d), d});
  }
  if (out_path.empty()) out_path = in_path + ".csv";
  export_trace_csv(rec, columns, out_path);
  std::cout << rec.steps() << " steps, " << columns.size() << " columns -> " << out_path << "\n";
  return 0;
}

int cmd_validate(const ScenarioArgs& sargs, const std::string& out_path) {
  const Scenario s = resolve_scenario(sargs);  // parses, self-checks, validates
  print_scenario_summary(s);
  std::cout << "fingerprint   " << config_fingerprint(s) << "\n";
  if (!out_path.empty()) {
    save_scenario(s, out_path);
    std::cout << "canonical     " << out_path << "\n";
  }
  std::cout << "valid\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cyclofem: cyclic elastoplasticity with stepped and separated space-time solvers"};
  app.set_version_flag("--version", CYCLOFEM_VERSION);
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run a scenario pipeline and write an output bundle");
  ScenarioArgs run_scn;
  add_scenario_flags(run, run_scn);
  RunOverrides over;
  run->add_option("--solver", over.solver, "override the solver")
      ->check(CLI::IsMember({"incremental", "pgd"}));
  run->add_option("--modes", over.modes, "override the separated mode budget");
  run->add_option("--cycles", over.cycles, "override the cycle count");
  run->add_option("--scales", over.scales, "override the scale list, e.g. 20,10")->delimiter(',');
  RunOptions opt;
  run->add_option("--out", opt.out_dir, "bundle directory")->capture_default_str();
  run->add_option("--seed", opt.seed, "recorded rng seed")->capture_default_str();
  run->add_option("--threads", opt.threads, "worker threads (0 = library default)")
      ->capture_default_str();
  run->add_flag("!--no-oracle", opt.with_oracle,
                "skip the stepped reference solve on pgd runs");
  run->add_option("--snapshot-every", opt.snapshot_every,
                  "state snapshot spacing on incremental runs");

  // compare
  auto* compare = app.add_subcommand("compare", "error report between two history files");
  std::string cmp_ref, cmp_other, cmp_out;
  int cmp_ntau = 0;
  std::vector<int> cmp_dofs;
  ScenarioArgs cmp_scn;
  compare->add_option("reference", cmp_ref, "reference history file")->required();
  compare->add_option("other", cmp_other, "history file to measure")->required();
  add_scenario_flags(compare, cmp_scn);
  compare->add_option("--n-tau", cmp_ntau, "intra-cycle nodes for the per-cycle breakdown");
  compare->add_option("--dofs", cmp_dofs, "restrict to these dof rows")->delimiter(',');
  compare->add_option("--out", cmp_out, "write the JSON report here instead of stdout");

  // export
  auto* exp = app.add_subcommand("export", "CSV export of a history or decomposition file");
  std::string exp_in, exp_out;
  std::vector<int> exp_dofs;
  ScenarioArgs exp_scn;
  exp->add_option("input", exp_in, "history (.cyfhist) or decomposition (.cyfdec) file")
      ->required();
  add_scenario_flags(exp, exp_scn);
  exp->add_option("--dofs", exp_dofs, "history export: these dof rows")->delimiter(',');
  exp->add_option("--out", exp_out, "output CSV path");

  // validate
  auto* val = app.add_subcommand("validate", "parse and validate a scenario, print a summary");
  ScenarioArgs val_scn;
  std::string val_out;
  add_scenario_flags(val, val_scn);
  val->add_option("--out", val_out, "write the canonical config JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (app.got_subcommand(run)) return cmd_run(run_scn, over, opt);
    if (app.got_subcommand(compare))
      return cmd_compare(cmp_ref, cmp_other, cmp_scn, cmp_ntau, cmp_dofs, cmp_out);
    if (app.got_subcommand(exp)) return cmd_export(exp_in, exp_scn, exp_dofs, exp_out);
    if (app.got_subcommand(val)) return cmd_validate(val_scn, val_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::logic_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
