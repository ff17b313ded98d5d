#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cyclofem/pgd.hpp"
#include "cyclofem/scenario.hpp"
#include "cyclofem/timegrid.hpp"

namespace cyclofem {

// Command-line overrides applied on top of a scenario before running.
// Empty / nonpositive fields keep the scenario's own values.
struct RunOverrides {
  std::string solver;
  int modes = 0;
  long long cycles = 0;     // replaces the scale list unless `scales` is given
  std::vector<int> scales;  // must multiply to `cycles` when both are set

  void apply(Scenario& s) const;
};

struct QuantityError {
  std::string name;  // deflection | shear | moment
  double rel_l2 = 0.0;
  double max_rel = 0.0;  // max pointwise deviation / max |reference|
};

// Which slices of two histories to compare.
struct CompareSelection {
  int n_tau = 0;                    // > 0 adds the per-cycle breakdown
  std::vector<int> dofs;            // restrict to these rows; empty = all
  const BeamModel* beam = nullptr;  // adds final-step profile quantity errors
  std::vector<double> depths;       // profile sampling depths; empty = 10 even
};

// Deviation of `other` from `reference` over a shared time grid.
struct ComparisonReport {
  long long rows = 0;
  long long steps = 0;
  double rel_l2 = 0.0;         // Frobenius norm ratio
  double max_pointwise = 0.0;  // max entry deviation / max |reference| entry
  std::vector<double> cycle_rel_l2;     // one per cycle
  std::vector<double> boundary_errors;  // column error norm at interior cycle seams
  std::vector<QuantityError> quantities;
};

ComparisonReport compare_histories(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& other,
                                   const CompareSelection& sel = {});
// Also requires matching times (within 1e-9 absolute-plus-relative).
ComparisonReport compare_histories(const HistoryRecord& reference, const HistoryRecord& other,
                                   const CompareSelection& sel = {});
std::string comparison_to_json_text(const ComparisonReport& r);

// Tail of a stepped history: drops the first `skip` steps and rebases times
// and the cumulative channels to the new origin. Snapshots are not kept.
HistoryRecord history_window(const HistoryRecord& rec, long long skip);

struct RunOptions {
  std::string out_dir = "out";
  unsigned long long seed = 0;  // recorded; mesh generation is deterministic
  int threads = 0;              // > 0 pins the OpenMP team size
  bool with_oracle = true;      // pgd runs also compute the stepped reference
  int snapshot_every = 0;       // incremental runs: state snapshot spacing
};

// Summary of one pipeline invocation, persisted as report.json in the bundle.
// `complete` stays false until the run finished writing every artifact.
struct RunReport {
  std::string scenario;
  std::string kind;
  std::string solver;
  std::string version;
  std::string config_hash;  // fnv1a-64 of the canonical config text, hex
  unsigned long long seed = 0;
  int threads = 0;
  long long space_dofs = 0;
  long long steps = 0;
  DofCounts unknowns;
  int modes_built = 0;
  std::vector<double> zetas;
  std::string stop_reason;
  double window_dissipation = 0.0;
  double oracle_window_dissipation = 0.0;
  bool has_comparison = false;
  ComparisonReport comparison;
  double solve_seconds = 0.0;
  double oracle_seconds = 0.0;
  double total_seconds = 0.0;
  std::vector<std::string> artifacts;  // bundle-relative file names
  bool complete = false;
};

std::string report_to_json_text(const RunReport& r);

// Runs the scenario's pipeline and writes the output bundle into opt.out_dir:
// config.json and report.json always; incremental runs add history.cyfhist
// and trace.csv; pgd runs add decomposition.cyfdec, theta.csv,
// reconstruction.cyfhist, trace.csv, and (with the oracle) oracle.cyfhist
// plus compare.json.
RunReport run_scenario(const Scenario& s, const RunOptions& opt);

std::string config_fingerprint(const Scenario& s);

}  // namespace cyclofem
