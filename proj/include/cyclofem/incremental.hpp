#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "cyclofem/beam.hpp"
#include "cyclofem/constitutive.hpp"
#include "cyclofem/fem2d.hpp"
#include "cyclofem/mesh.hpp"

namespace cyclofem {

struct SolverSettings {
  double newton_tol = 1e-8;  // relative to the external force scale
  int max_newton_iters = 25;
  int max_bisection_depth = 6;
  bool consistent_tangent = true;  // false: iterate with the constant elastic K

  void validate() const;
};

// Opaque snapshot of a system's committed state.
struct SystemSnapshot {
  virtual ~SystemSnapshot() = default;
};

struct CommitInfo {
  double dissipation_increment = 0.0;  // midpoint rule, pairs with trapezoidal work
  double stored_energy = 0.0;
};

// A mechanical system under a single scalar load factor: f_ext = load * f_unit.
// Internal force and tangent are evaluated at a trial displacement from the
// committed internal state; commit advances that state.
class System {
 public:
  virtual ~System() = default;

  virtual int n_free() const = 0;
  virtual const Eigen::VectorXd& unit_load() const = 0;
  virtual const SparseMatrix& elastic_stiffness() const = 0;

  // One constitutive sweep; fills the tangent when K != nullptr.
  virtual Eigen::VectorXd internal_force_and_tangent(const Eigen::VectorXd& u, SparseMatrix* K,
                                                     bool consistent) = 0;
  Eigen::VectorXd internal_force(const Eigen::VectorXd& u) {
    return internal_force_and_tangent(u, nullptr, true);
  }

  virtual CommitInfo commit(const Eigen::VectorXd& u) = 0;
  virtual const Eigen::VectorXd& committed_u() const = 0;
  virtual double committed_load() const = 0;
  virtual void set_committed_load(double load) = 0;
  virtual double stored_energy() const = 0;
  virtual double total_dissipation() const = 0;

  virtual std::unique_ptr<SystemSnapshot> save() const = 0;
  virtual void restore(const SystemSnapshot& snap) = 0;

  // Committed internal state flattened to doubles, stride values per point.
  virtual int state_stride() const = 0;
  virtual std::vector<double> state_blob() const = 0;
};

// Plane-strain continuum system: Dirichlet set fully fixed, cyclic line load
// on a Neumann edge set with prescribed unit resultant.
class PlateSystem final : public System {
 public:
  PlateSystem(Mesh2D mesh, MaterialParams material, double thickness,
              const std::string& fixed_set, const std::string& load_set,
              double unit_resultant);

  int n_free() const override { return dofs_.n_free; }
  const Eigen::VectorXd& unit_load() const override { return f_unit_; }
  const SparseMatrix& elastic_stiffness() const override { return K_el_; }
  Eigen::VectorXd internal_force_and_tangent(const Eigen::VectorXd& u, SparseMatrix* K,
                                             bool consistent) override;
  CommitInfo commit(const Eigen::VectorXd& u) override;
  const Eigen::VectorXd& committed_u() const override { return u_committed_; }
  double committed_load() const override { return load_committed_; }
  void set_committed_load(double load) override { load_committed_ = load; }
  double stored_energy() const override { return stored_; }
  double total_dissipation() const override { return dissipation_; }
  std::unique_ptr<SystemSnapshot> save() const override;
  void restore(const SystemSnapshot& snap) override;
  int state_stride() const override { return 15; }
  std::vector<double> state_blob() const override;

  const Mesh2D& mesh() const { return mesh_; }
  const DofMap2D& dof_map() const { return dofs_; }
  const MaterialParams& material() const { return material_; }
  const std::vector<InternalState>& gauss_states() const { return states_; }
  // von Mises stress per Gauss point of the committed state
  std::vector<double> committed_von_mises() const;

 private:
  Mesh2D mesh_;
  MaterialParams material_;
  DofMap2D dofs_;
  std::vector<ElementQuad> quad_;
  Eigen::VectorXd f_unit_;
  SparseMatrix K_el_;
  Eigen::Matrix3d D_el_;

  std::vector<InternalState> states_;
  std::vector<SymTensor> sigma_committed_;
  Eigen::VectorXd u_committed_;
  double load_committed_ = 0.0;
  double stored_ = 0.0;
  double dissipation_ = 0.0;
};

// Euler-Bernoulli beam on elastoplastic springs, lateral load at the head.
class MonopileSystem final : public System {
 public:
  explicit MonopileSystem(BeamModel model);

  int n_free() const override { return model_.n_dof(); }
  const Eigen::VectorXd& unit_load() const override { return f_unit_; }
  const SparseMatrix& elastic_stiffness() const override { return K_el_; }
  Eigen::VectorXd internal_force_and_tangent(const Eigen::VectorXd& u, SparseMatrix* K,
                                             bool consistent) override;
  CommitInfo commit(const Eigen::VectorXd& u) override;
  const Eigen::VectorXd& committed_u() const override { return u_committed_; }
  double committed_load() const override { return load_committed_; }
  void set_committed_load(double load) override { load_committed_ = load; }
  double stored_energy() const override { return stored_; }
  double total_dissipation() const override { return dissipation_; }
  std::unique_ptr<SystemSnapshot> save() const override;
  void restore(const SystemSnapshot& snap) override;
  int state_stride() const override { return 5; }
  std::vector<double> state_blob() const override;

  const BeamModel& model() const { return model_; }
  const std::vector<SpringState>& spring_states() const { return springs_; }

 private:
  BeamModel model_;
  SparseMatrix K_beam_;
  SparseMatrix K_el_;
  Eigen::VectorXd f_unit_;

  std::vector<SpringState> springs_;
  std::vector<double> sigma_committed_;
  Eigen::VectorXd u_committed_;
  double load_committed_ = 0.0;
  double stored_ = 0.0;
  double dissipation_ = 0.0;
};

struct StepResult {
  Eigen::VectorXd u;
  int iterations = 0;     // of the last Newton solve
  int bisections = 0;     // extra substeps taken
  std::vector<double> residuals;  // of the last Newton solve
  double work_increment = 0.0;    // trapezoidal external work
  double dissipation_increment = 0.0;
};

// Advances the system from its committed load to `load`. Commits. Newton
// divergence triggers recursive load bisection up to settings.max_bisection_depth.
StepResult solve_step(System& system, double load, const SolverSettings& settings);

struct HistoryRecord {
  std::vector<double> times;
  std::vector<double> loads;
  Eigen::MatrixXd u;  // n_free x n_steps
  std::vector<double> work, dissipation, stored;  // cumulative per step
  std::vector<int> newton_iters;

  // Thinned internal-state snapshots: flattened Gauss/spring states at the
  // recorded steps (every snapshot_every-th step plus the final one).
  int snapshot_stride = 0;
  std::vector<long long> snapshot_steps;
  std::vector<std::vector<double>> snapshots;

  long long steps() const { return static_cast<long long>(times.size()); }
};

// Runs the full load program. Step 0 brings the system from rest to loads[0].
// snapshot_every > 0 records internal-state snapshots at that step spacing.
HistoryRecord run_history(System& system, const std::vector<double>& times,
                          const std::vector<double>& loads, const SolverSettings& settings,
                          int snapshot_every = 0);

}  // namespace cyclofem
