#include "cyclofem/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <json.hpp>

#include "cyclofem/version.hpp"

namespace cyclofem {

using nlohmann::json;

namespace {

// 0/0 counts as a perfect match, anything/0 as a unit-scale mismatch guard
double ratio(double num, double den) { return num == 0.0 ? 0.0 : num / std::max(den, 1e-300); }

std::vector<double> even_depths(const BeamModel& beam, int count) {
  std::vector<double> d(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    d[static_cast<std::size_t>(i)] = beam.length * i / (count - 1);
  return d;
}

void profile_errors(const BeamModel& beam, const Eigen::VectorXd& u_ref,
                    const Eigen::VectorXd& u_other, const std::vector<double>& depths,
                    std::vector<QuantityError>& out) {
  const BeamProfile ref = beam_profile(beam, u_ref, depths);
  const BeamProfile oth = beam_profile(beam, u_other, depths);
  auto push = [&](const std::string& name, const std::vector<double>& a,
                  const std::vector<double>& b) {
    double diff2 = 0.0, ref2 = 0.0, diff_max = 0.0, ref_max = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = b[i] - a[i];
      diff2 += d * d;
      ref2 += a[i] * a[i];
      diff_max = std::max(diff_max, std::abs(d));
      ref_max = std::max(ref_max, std::abs(a[i]));
    }
    out.push_back({name, ratio(std::sqrt(diff2), std::sqrt(ref2)), ratio(diff_max, ref_max)});
  };
  push("deflection", ref.w, oth.w);
  push("shear", ref.shear, oth.shear);
  push("moment", ref.moment, oth.moment);
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path);
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json comparison_to_json(const ComparisonReport& r) {
  json j;
  j["rows"] = r.rows;
  j["steps"] = r.steps;
  j["rel_l2"] = r.rel_l2;
  j["max_pointwise"] = r.max_pointwise;
  j["cycle_rel_l2"] = r.cycle_rel_l2;
  j["boundary_errors"] = r.boundary_errors;
  auto& q = j["quantities"] = json::array();
  for (const QuantityError& e : r.quantities)
    q.push_back({{"name", e.name}, {"rel_l2", e.rel_l2}, {"max_rel", e.max_rel}});
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// Overrides

void RunOverrides::apply(Scenario& s) const {
  if (!solver.empty()) s.solver = solver;
  if (modes > 0) s.modes = modes;
  if (!scales.empty()) s.scales = scales;
  if (cycles > 0) {
    if (!scales.empty()) {
      long long prod = 1;
      for (int v : scales) prod *= v;
      if (prod != cycles)
        throw std::invalid_argument("overrides: cycle count " + std::to_string(cycles) +
                                    " disagrees with the scale list product " +
                                    std::to_string(prod));
    } else if (s.cycles() != cycles) {
      if (cycles > std::numeric_limits<int>::max())
        throw std::invalid_argument("overrides: cycle count too large for a single scale");
      s.scales = {static_cast<int>(cycles)};
    }
  }
  s.validate();
}

// ---------------------------------------------------------------------------
// Comparison

ComparisonReport compare_histories(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& other,
                                   const CompareSelection& sel) {
  if (reference.rows() != other.rows() || reference.cols() != other.cols())
    throw std::invalid_argument(
        "compare: histories have mismatched dimensions (" + std::to_string(reference.rows()) +
        "x" + std::to_string(reference.cols()) + " vs " + std::to_string(other.rows()) + "x" +
        std::to_string(other.cols()) + ")");
  if (reference.cols() == 0) throw std::invalid_argument("compare: histories are empty");

  Eigen::MatrixXd sel_ref, sel_oth;
  const Eigen::MatrixXd* R = &reference;
  const Eigen::MatrixXd* O = &other;
  if (!sel.dofs.empty()) {
    sel_ref.resize(static_cast<Eigen::Index>(sel.dofs.size()), reference.cols());
    sel_oth.resize(static_cast<Eigen::Index>(sel.dofs.size()), reference.cols());
    for (std::size_t i = 0; i < sel.dofs.size(); ++i) {
      const int d = sel.dofs[i];
      if (d < 0 || d >= reference.rows())
        throw std::invalid_argument("compare: dof " + std::to_string(d) + " out of range");
      sel_ref.row(static_cast<Eigen::Index>(i)) = reference.row(d);
      sel_oth.row(static_cast<Eigen::Index>(i)) = other.row(d);
    }
    R = &sel_ref;
    O = &sel_oth;
  }

  ComparisonReport rep;
  rep.rows = R->rows();
  rep.steps = R->cols();
  rep.rel_l2 = ratio((*O - *R).norm(), R->norm());
  rep.max_pointwise = ratio((*O - *R).cwiseAbs().maxCoeff(), R->cwiseAbs().maxCoeff());

  if (sel.n_tau > 0) {
    if (sel.n_tau < 2) throw std::invalid_argument("compare: n_tau must be >= 2");
    const long long span = sel.n_tau - 1;
    if ((rep.steps - 1) % span != 0)
      throw std::invalid_argument(
          "compare: history length does not tile into cycles of n_tau nodes");
    const long long cycles = (rep.steps - 1) / span;
    for (long long c = 0; c < cycles; ++c) {
      const auto rb = R->middleCols(c * span, span + 1);
      const auto ob = O->middleCols(c * span, span + 1);
      rep.cycle_rel_l2.push_back(ratio((ob - rb).norm(), rb.norm()));
    }
    for (long long c = 1; c < cycles; ++c)
      rep.boundary_errors.push_back((O->col(c * span) - R->col(c * span)).norm());
  }

  if (sel.beam != nullptr) {
    if (reference.rows() != sel.beam->n_dof())
      throw std::invalid_argument("compare: beam profiles need the full dof layout");
    const std::vector<double> depths = sel.depths.empty() ? even_depths(*sel.beam, 10) : sel.depths;
    profile_errors(*sel.beam, reference.col(reference.cols() - 1), other.col(other.cols() - 1),
                   depths, rep.quantities);
  }
  return rep;
}

ComparisonReport compare_histories(const HistoryRecord& reference, const HistoryRecord& other,
                                   const CompareSelection& sel) {
  if (reference.times.size() != other.times.size())
    throw std::invalid_argument("compare: histories have different step counts");
  for (std::size_t i = 0; i < reference.times.size(); ++i) {
    const double a = reference.times[i], b = other.times[i];
    if (std::abs(a - b) > 1e-9 * (1.0 + std::max(std::abs(a), std::abs(b))))
      throw std::invalid_argument("compare: histories use different time grids");
  }
  return compare_histories(reference.u, other.u, sel);
}

std::string comparison_to_json_text(const ComparisonReport& r) {
  json j = comparison_to_json(r);
  j["format"] = "cyclofem-comparison";
  j["version"] = 1;
  return j.dump(2) + "\n";
}

HistoryRecord history_window(const HistoryRecord& rec, long long skip) {
  if (skip < 0 || skip >= rec.steps())
    throw std::invalid_argument("history window: skip out of range");
  const auto s = static_cast<std::size_t>(skip);
  const long long n = rec.steps() - skip;
  HistoryRecord w;
  w.times.assign(rec.times.begin() + static_cast<std::ptrdiff_t>(s), rec.times.end());
  w.loads.assign(rec.loads.begin() + static_cast<std::ptrdiff_t>(s), rec.loads.end());
  for (double& t : w.times) t -= rec.times[s];
  auto rebase = [s](const std::vector<double>& src, std::vector<double>& dst) {
    dst.assign(src.begin() + static_cast<std::ptrdiff_t>(s), src.end());
    for (double& v : dst) v -= src[s];
  };
  rebase(rec.work, w.work);
  rebase(rec.dissipation, w.dissipation);
  rebase(rec.stored, w.stored);
  w.newton_iters.assign(rec.newton_iters.begin() + static_cast<std::ptrdiff_t>(s),
                        rec.newton_iters.end());
  w.u = rec.u.rightCols(n);
  return w;
}

// ---------------------------------------------------------------------------
// Pipelines

std::string config_fingerprint(const Scenario& s) { return hex64(fnv1a(scenario_to_json_text(s))); }

std::string report_to_json_text(const RunReport& r) {
  json j;
  j["format"] = "cyclofem-report";
  j["version"] = 1;
  j["tool_version"] = r.version;
  j["scenario"] = r.scenario;
  j["kind"] = r.kind;
  j["solver"] = r.solver;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["threads"] = r.threads;
  j["space_dofs"] = r.space_dofs;
  j["steps"] = r.steps;
  j["dof_counts"] = {{"incremental", r.unknowns.incremental}, {"separated", r.unknowns.separated}};
  j["modes_built"] = r.modes_built;
  j["zetas"] = r.zetas;
  j["stop_reason"] = r.stop_reason;
  j["window_dissipation"] = r.window_dissipation;
  if (r.has_comparison) {
    j["oracle_window_dissipation"] = r.oracle_window_dissipation;
    j["comparison"] = comparison_to_json(r.comparison);
  }
  j["timings"] = {{"solve_seconds", r.solve_seconds},
                  {"oracle_seconds", r.oracle_seconds},
                  {"total_seconds", r.total_seconds}};
  j["artifacts"] = r.artifacts;
  j["complete"] = r.complete;
  return j.dump(2) + "\n";
}

RunReport run_scenario(const Scenario& s, const RunOptions& opt) {
  s.validate();
  std::filesystem::create_directories(opt.out_dir);
#ifdef _OPENMP
  if (opt.threads > 0) omp_set_num_threads(opt.threads);
#endif
  const auto t0 = std::chrono::steady_clock::now();

  RunReport rep;
  rep.scenario = s.name;
  rep.kind = s.kind;
  rep.solver = s.solver;
  rep.version = CYCLOFEM_VERSION;
  rep.config_hash = config_fingerprint(s);
  rep.seed = opt.seed;
  rep.threads = opt.threads;

  auto path = [&](const std::string& name) { return opt.out_dir + "/" + name; };
  auto add = [&](const std::string& name) { rep.artifacts.push_back(name); };

  write_text(path("config.json"), scenario_to_json_text(s));
  add("config.json");
  add("report.json");
  // flagged incomplete until every artifact landed
  write_text(path("report.json"), report_to_json_text(rep));

  std::unique_ptr<System> system = make_system(s);
  rep.space_dofs = system->n_free();
  rep.unknowns = dof_counts(system->n_free(), s.n_tau, s.scales, s.modes);
  const long long warm_steps = static_cast<long long>(s.n_tau - 1) * s.warmup_cycles;

  if (s.solver == "incremental") {
    std::vector<double> times, loads;
    load_schedule(s, s.total_cycles(), times, loads);
    HistoryRecord rec = run_history(*system, times, loads, s.settings, opt.snapshot_every);
    rep.solve_seconds = seconds_since(t0);
    rep.steps = rec.steps();
    rep.window_dissipation =
        rec.dissipation.back() - rec.dissipation[static_cast<std::size_t>(warm_steps)];
    save_history(rec, path("history.cyfhist"));
    add("history.cyfhist");
    add("history.cyfhist.json");
    export_trace_csv(rec, default_traces(s, *system), path("trace.csv"));
    add("trace.csv");
  } else {
    const TimeGrid grid = scenario_grid(s);
    std::vector<double> wtimes, wloads;
    load_schedule(s, s.cycles(), wtimes, wloads);
    PgdSettings ps;
    ps.max_modes = s.modes;
    PgdRunResult run = pgd_solve(*system, grid, wloads, ps, s.settings, s.warmup_cycles);
    rep.solve_seconds = seconds_since(t0);
    rep.steps = grid.steps();
    rep.modes_built = run.modes_built;
    rep.stop_reason = run.stop_reason;
    for (const Mode& m : run.decomposition.modes) rep.zetas.push_back(m.zeta);
    rep.window_dissipation =
        system->total_dissipation() -
        (run.warmup.dissipation.empty() ? 0.0 : run.warmup.dissipation.back());

    save_decomposition(run.decomposition, path("decomposition.cyfdec"));
    add("decomposition.cyfdec");
    add("decomposition.cyfdec.json");
    export_theta_csv(run.decomposition, path("theta.csv"));
    add("theta.csv");

    HistoryRecord recon;
    recon.times = wtimes;
    recon.loads = wloads;
    recon.u = reconstruct_all(run.decomposition);
    const auto n = static_cast<std::size_t>(recon.u.cols());
    // external work from the reconstruction; the state channels are not part
    // of a separated solution and stay zero
    recon.work.assign(n, 0.0);
    Eigen::VectorXd p = recon.u.transpose() * system->unit_load();
    for (std::size_t k = 1; k < n; ++k)
      recon.work[k] = recon.work[k - 1] + 0.5 * (recon.loads[k] + recon.loads[k - 1]) *
                                              (p[static_cast<Eigen::Index>(k)] -
                                               p[static_cast<Eigen::Index>(k - 1)]);
    recon.dissipation.assign(n, 0.0);
    recon.stored.assign(n, 0.0);
    recon.newton_iters.assign(n, 0);
    save_history(recon, path("reconstruction.cyfhist"));
    add("reconstruction.cyfhist");
    add("reconstruction.cyfhist.json");
    export_trace_csv(recon, default_traces(s, *system), path("trace.csv"));
    add("trace.csv");

    if (opt.with_oracle) {
      const auto t1 = std::chrono::steady_clock::now();
      std::unique_ptr<System> oracle_system = make_system(s);
      std::vector<double> otimes, oloads;
      load_schedule(s, s.total_cycles(), otimes, oloads);
      const HistoryRecord full = run_history(*oracle_system, otimes, oloads, s.settings);
      const HistoryRecord window = history_window(full, warm_steps);
      rep.oracle_seconds = seconds_since(t1);
      rep.oracle_window_dissipation = window.dissipation.back();
      save_history(window, path("oracle.cyfhist"));
      add("oracle.cyfhist");
      add("oracle.cyfhist.json");

      CompareSelection sel;
      sel.n_tau = s.n_tau;
      if (s.kind == "winkler-beam") sel.beam = &s.beam;
      rep.comparison = compare_histories(window, recon, sel);
      rep.has_comparison = true;
      write_text(path("compare.json"), comparison_to_json_text(rep.comparison));
      add("compare.json");
    }
  }

  rep.total_seconds = seconds_since(t0);
  rep.complete = true;
  write_text(path("report.json"), report_to_json_text(rep));
  return rep;
}

}  // namespace cyclofem
