#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "cyclofem/incremental.hpp"
#include "cyclofem/timegrid.hpp"

namespace cyclofem {

// One separated mode: u contribution = zeta * phi(:,h) * prod_j theta[j][n_j].
struct Mode {
  Eigen::MatrixXd phi;                     // n_free x n_tau
  std::vector<Eigen::VectorXd> theta;      // one vector per cycle scale
  double zeta = 1.0;
};

struct ModeLog {
  int fp_sweeps = 0;
  int outer_iterations = 0;
  bool fp_converged = true;
  std::vector<double> corrections;  // per fixed-point sweep, relative block change
  std::vector<double> objective;    // frozen-history energy after each sweep
  std::vector<double> zeta_after;   // amplitudes after the coefficient update
  double outer_change = 0.0;        // last relative change of the reconstruction
};

struct Decomposition {
  TimeGrid grid;
  std::vector<Mode> modes;
  std::vector<ModeLog> log;  // one entry per built mode

  int mode_count() const { return static_cast<int>(modes.size()); }
};

struct PgdSettings {
  int max_modes = 3;
  double fp_tol = 1e-6;          // fixed-point relative block change
  int max_fp_sweeps = 50;
  int stagnation_window = 10;    // sweeps without decrease -> mode rejected
  double outer_tol = 1e-4;       // reconstruction change across history resweeps
  int max_outer_iters = 50;
  double mode_threshold = 1e-3;  // zeta_m / zeta_1 below this stops enrichment
  bool resweep_within_mode = true;
  double history_relaxation = 1.0;  // blend factor for swept histories, (0, 1]

  void validate() const;
};

// A candidate mode degenerated (vanishing temporal amplitude, vanished mode
// energy, redundant mode, or fixed-point stagnation). Enrichment stops but
// the modes built so far remain valid.
struct EnrichmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shared workspace for one separated solve: the elastic operator and its
// factorization, the per-step load amplitudes, and the internal-force history
// g(:, n) = K u_n - f_int(u_n) that the updates treat as frozen data.
class PgdContext {
 public:
  PgdContext(System& system, const TimeGrid& grid, std::vector<double> step_loads);

  System& system() { return *system_; }
  const TimeGrid& grid() const { return grid_; }
  const Eigen::VectorXd& step_loads() const { return loads_; }
  const SparseMatrix& stiffness() const { return K_; }
  const Eigen::VectorXd& unit_load() const { return f_unit_; }

  Eigen::MatrixXd solve_static(const Eigen::MatrixXd& rhs) const;

  Eigen::MatrixXd g;  // n_free x steps, column per global step

  // The anchor is the committed state at the start of the solution window;
  // every history sweep restores it before re-walking the window.
  void set_anchor();
  bool has_anchor() const { return anchor_ != nullptr; }
  void restore_anchor();

 private:
  System* system_;
  TimeGrid grid_;
  Eigen::VectorXd loads_;
  SparseMatrix K_;
  Eigen::VectorXd f_unit_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
  std::unique_ptr<SystemSnapshot> anchor_;
};

// Evaluation of the separated representation on the canonical step mapping:
// cycle-boundary steps belong to the following cycle's first node.
Eigen::VectorXd reconstruct_step(const Decomposition& dec, long long step);
Eigen::MatrixXd reconstruct(const Decomposition& dec, const std::vector<long long>& steps);
Eigen::MatrixXd reconstruct_all(const Decomposition& dec);

// Euclidean mismatch at each interior cycle boundary between the owning
// cycle's first node and the preceding cycle's last node.
std::vector<double> cycle_boundary_jumps(const Decomposition& dec);

// One exact minimization of the frozen-history energy over the mode's
// intra-cycle block (all nodes at once, prior modes fixed).
void small_time_update(const PgdContext& ctx, const Decomposition& prior, Mode& mode);

// Same over one cycle-scale vector of the mode.
void large_time_update(const PgdContext& ctx, const Decomposition& prior, Mode& mode, int scale);

// Frozen-history energy of prior modes plus an optional trial mode (zeta 1).
double frozen_objective(const PgdContext& ctx, const Decomposition& prior, const Mode* mode);

// Rescales phi to unit quadrature-weighted norm and each theta to unit
// Euclidean norm, folding the factors into zeta.
void normalize_mode(const TimeGrid& grid, Mode& mode);

// Galerkin re-solve of all mode amplitudes against the frozen histories.
// Amplitudes are made nonnegative by flipping the first cycle-scale vector.
void update_coefficients(const PgdContext& ctx, Decomposition& dec);

// Relative residual of the amplitude system at the stored zetas.
double coefficient_residual(const PgdContext& ctx, const Decomposition& dec);

// Recomputes internal-variable histories by committing the reconstructed
// displacements step by step from the anchor, then blends the resulting
// g columns into ctx.g. Returns the relative change of g.
double sweep_internal_histories(PgdContext& ctx, const Decomposition& dec,
                                double relaxation = 1.0);

struct WarmupSeed {
  HistoryRecord record;  // incremental warmup trajectory
  Mode mode;             // first-mode seed: last warmup cycle, flat in the scales
};

// Runs `cycles` incremental warmup cycles of the load program, anchors the
// context at the warmup end, and seeds ctx.g across the window by linear
// extrapolation of the last two warmup cycles.
WarmupSeed initial_guess(PgdContext& ctx, int cycles, const SolverSettings& newton);

// Builds one more mode: fixed-point alternation at frozen histories, then
// normalization, amplitude re-solve, and (optionally) history resweeps until
// the reconstruction settles. Throws EnrichmentError if the candidate
// degenerates; the decomposition then keeps its prior modes.
void enrich_mode(PgdContext& ctx, Decomposition& dec, const PgdSettings& settings,
                 const Mode* seed = nullptr);

struct PgdRunResult {
  Decomposition decomposition;
  HistoryRecord warmup;
  int modes_built = 0;
  bool threshold_stop = false;   // last candidate fell below mode_threshold
  std::string stop_reason;       // nonempty if a candidate degenerated
};

// Full pipeline: warmup, then greedy enrichment until max_modes or the
// amplitude threshold. The system is left at the end of the last history sweep.
PgdRunResult pgd_solve(System& system, const TimeGrid& grid,
                       const std::vector<double>& step_loads, const PgdSettings& settings,
                       const SolverSettings& newton, int warmup_cycles = 2);

void save_decomposition(const Decomposition& dec, const std::string& path);
Decomposition load_decomposition(const std::string& path);

// Cycle-scale vectors as CSV: mode,zeta,scale,index,value.
void export_theta_csv(const Decomposition& dec, const std::string& path);

}  // namespace cyclofem
