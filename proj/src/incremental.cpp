#include "cyclofem/incremental.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/SparseLU>

namespace cyclofem {

void SolverSettings::validate() const {
  if (!(newton_tol > 0)) throw std::invalid_argument("solver settings: newton_tol must be > 0");
  if (max_newton_iters < 1 || max_bisection_depth < 0)
    throw std::invalid_argument("solver settings: iteration limits out of range");
}

// ---------------------------------------------------------------------------
// PlateSystem

namespace {

struct PlateSnapshot final : SystemSnapshot {
  std::vector<InternalState> states;
  std::vector<SymTensor> sigma;
  Eigen::VectorXd u;
  double load, stored, dissipation;
};

struct MonopileSnapshot final : SystemSnapshot {
  std::vector<SpringState> springs;
  std::vector<double> sigma;
  Eigen::VectorXd u;
  double load, stored, dissipation;
};

}  // namespace

PlateSystem::PlateSystem(Mesh2D mesh, MaterialParams material, double thickness,
                         const std::string& fixed_set, const std::string& load_set,
                         double unit_resultant)
    : mesh_(std::move(mesh)), material_(material) {
  material_.validate();
  const auto fixed_it = mesh_.node_sets.find(fixed_set);
  if (fixed_it == mesh_.node_sets.end())
    throw std::invalid_argument("plate system: unknown node set '" + fixed_set + "'");
  std::vector<Constraint> cons;
  for (int n : fixed_it->second) {
    cons.push_back({n, 0, 0.0});
    cons.push_back({n, 1, 0.0});
  }
  dofs_ = DofMap2D::build(mesh_, cons);
  quad_ = precompute_quadrature(mesh_, thickness);

  const auto edge_it = mesh_.edge_sets.find(load_set);
  if (edge_it == mesh_.edge_sets.end())
    throw std::invalid_argument("plate system: unknown edge set '" + load_set + "'");
  double edge_len = 0.0;
  for (const auto& e : edge_it->second) {
    const auto& a = mesh_.nodes[static_cast<std::size_t>(e[0])];
    const auto& b = mesh_.nodes[static_cast<std::size_t>(e[1])];
    edge_len += std::hypot(b[0] - a[0], b[1] - a[1]);
  }
  // uniform line load with resultant `unit_resultant`, pulling along +y
  f_unit_ = assemble_external_force(mesh_, dofs_,
                                    {{load_set, {0.0, unit_resultant / edge_len}}});

  D_el_ = plane_strain_moduli(elastic_moduli(material_));
  const std::vector<Eigen::Matrix3d> moduli(static_cast<std::size_t>(4 * mesh_.element_count()),
                                            D_el_);
  K_el_ = assemble_stiffness(mesh_, dofs_, quad_, moduli);

  states_.resize(static_cast<std::size_t>(4 * mesh_.element_count()));
  sigma_committed_.resize(states_.size());
  u_committed_ = Eigen::VectorXd::Zero(dofs_.n_free);
}

Eigen::VectorXd PlateSystem::internal_force_and_tangent(const Eigen::VectorXd& u, SparseMatrix* K,
                                                        bool consistent) {
  if (u.size() != dofs_.n_free) throw std::invalid_argument("plate system: wrong vector size");
  if (K && !consistent) {
    *K = K_el_;
    K = nullptr;
  }
  const Eigen::VectorXd u_full = dofs_.expand(u);
  const int ne = mesh_.element_count();
  std::vector<SymTensor> stress(static_cast<std::size_t>(4 * ne));
  std::vector<Eigen::Matrix3d> moduli;
  if (K) moduli.resize(static_cast<std::size_t>(4 * ne));

  bool failed = false;
  std::string failure;
#pragma omp parallel for schedule(static)
  for (int e = 0; e < ne; ++e) {
    for (int g = 0; g < 4; ++g) {
      const std::size_t idx = static_cast<std::size_t>(4 * e + g);
      try {
        const SymTensor eps = strain_at(mesh_, quad_, e, g, u_full);
        const StressResult r = return_map(eps, states_[idx], material_);
        stress[idx] = r.sigma;
        if (K) moduli[idx] = plane_strain_moduli(consistent_tangent(r, material_));
      } catch (const std::exception& ex) {
#pragma omp critical
        {
          failed = true;
          failure = ex.what();
        }
      }
    }
  }
  if (failed) throw std::runtime_error("plate system: constitutive failure: " + failure);

  if (K) *K = assemble_stiffness(mesh_, dofs_, quad_, moduli);
  return assemble_internal_force(mesh_, dofs_, quad_, stress);
}

CommitInfo PlateSystem::commit(const Eigen::VectorXd& u) {
  const Eigen::VectorXd u_full = dofs_.expand(u);
  const int ne = mesh_.element_count();
  double diss = 0.0, stored = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : diss, stored)
  for (int e = 0; e < ne; ++e) {
    for (int g = 0; g < 4; ++g) {
      const std::size_t idx = static_cast<std::size_t>(4 * e + g);
      const double w = quad_[static_cast<std::size_t>(e)].wdetJ[static_cast<std::size_t>(g)];
      const SymTensor eps = strain_at(mesh_, quad_, e, g, u_full);
      const StressResult r = return_map(eps, states_[idx], material_);
      diss += w * dissipation_increment_midpoint(states_[idx], r.state, sigma_committed_[idx],
                                                 r.sigma, material_);
      stored += w * free_energy(eps, r.state, material_);
      states_[idx] = r.state;
      sigma_committed_[idx] = r.sigma;
    }
  }
  u_committed_ = u;
  stored_ = stored;
  dissipation_ += diss;
  return {diss, stored};
}

std::vector<double> PlateSystem::committed_von_mises() const {
  std::vector<double> vm(sigma_committed_.size());
  for (std::size_t i = 0; i < sigma_committed_.size(); ++i)
    vm[i] = std::sqrt(1.5) * sigma_committed_[i].deviator().norm();
  return vm;
}

std::vector<double> PlateSystem::state_blob() const {
  std::vector<double> blob;
  blob.reserve(states_.size() * 15);
  for (const auto& s : states_) {
    blob.insert(blob.end(), s.eps_p.c.begin(), s.eps_p.c.end());
    blob.push_back(s.kappa);
    blob.insert(blob.end(), s.eps_r.c.begin(), s.eps_r.c.end());
    blob.push_back(s.lambda_cum);
    blob.push_back(s.dissipation_cum);
  }
  return blob;
}

std::unique_ptr<SystemSnapshot> PlateSystem::save() const {
  auto s = std::make_unique<PlateSnapshot>();
  s->states = states_;
  s->sigma = sigma_committed_;
  s->u = u_committed_;
  s->load = load_committed_;
  s->stored = stored_;
  s->dissipation = dissipation_;
  return s;
}

void PlateSystem::restore(const SystemSnapshot& snap) {
  const auto* s = dynamic_cast<const PlateSnapshot*>(&snap);
  if (!s) throw std::invalid_argument("plate system: foreign snapshot");
  states_ = s->states;
  sigma_committed_ = s->sigma;
  u_committed_ = s->u;
  load_committed_ = s->load;
  stored_ = s->stored;
  dissipation_ = s->dissipation;
}

// ---------------------------------------------------------------------------
// MonopileSystem

MonopileSystem::MonopileSystem(BeamModel model) : model_(std::move(model)) {
  model_.validate();
  K_beam_ = beam_stiffness(model_);
  K_el_ = K_beam_ + elastic_spring_stiffness(model_);
  f_unit_ = Eigen::VectorXd::Zero(model_.n_dof());
  f_unit_[0] = 1.0;  // lateral load at the head
  springs_.resize(static_cast<std::size_t>(model_.n_springs()));
  sigma_committed_.assign(springs_.size(), 0.0);
  u_committed_ = Eigen::VectorXd::Zero(model_.n_dof());
}

Eigen::VectorXd MonopileSystem::internal_force_and_tangent(const Eigen::VectorXd& u,
                                                           SparseMatrix* K, bool consistent) {
  const SpringUpdate su = update_springs(model_, u, springs_);
  if (K) {
    if (!consistent) {
      *K = K_el_;
    } else {
      std::vector<Eigen::Triplet<double>> trip;
      for (int i = 0; i < model_.n_dof(); ++i)
        if (su.tangent_diagonal[i] != 0.0) trip.emplace_back(i, i, su.tangent_diagonal[i]);
      SparseMatrix Ks(model_.n_dof(), model_.n_dof());
      Ks.setFromTriplets(trip.begin(), trip.end());
      *K = K_beam_ + Ks;
    }
  }
  return K_beam_ * u + su.force;
}

CommitInfo MonopileSystem::commit(const Eigen::VectorXd& u) {
  const SpringUpdate su = update_springs(model_, u, springs_);
  const double trib = model_.tributary();
  double diss = 0.0, stored = 0.5 * u.dot(K_beam_ * u);
  for (int i = 1; i < model_.n_nodes(); ++i) {
    const std::size_t k = static_cast<std::size_t>(i - 1);
    const MaterialParams& mat = model_.layer_at(model_.node_x(i));
    diss += trib * spring_dissipation_increment_midpoint(springs_[k], su.results[k].state,
                                                         sigma_committed_[k],
                                                         su.results[k].sigma, mat);
    stored += trib * spring_free_energy(u[2 * i], su.results[k].state, mat);
    springs_[k] = su.results[k].state;
    sigma_committed_[k] = su.results[k].sigma;
  }
  u_committed_ = u;
  stored_ = stored;
  dissipation_ += diss;
  return {diss, stored};
}

std::unique_ptr<SystemSnapshot> MonopileSystem::save() const {
  auto s = std::make_unique<MonopileSnapshot>();
  s->springs = springs_;
  s->sigma = sigma_committed_;
  s->u = u_committed_;
  s->load = load_committed_;
  s->stored = stored_;
  s->dissipation = dissipation_;
  return s;
}

void MonopileSystem::restore(const SystemSnapshot& snap) {
  const auto* s = dynamic_cast<const MonopileSnapshot*>(&snap);
  if (!s) throw std::invalid_argument("monopile system: foreign snapshot");
  springs_ = s->springs;
  sigma_committed_ = s->sigma;
  u_committed_ = s->u;
  load_committed_ = s->load;
  stored_ = s->stored;
  dissipation_ = s->dissipation;
}

std::vector<double> MonopileSystem::state_blob() const {
  std::vector<double> blob;
  blob.reserve(springs_.size() * 5);
  for (const auto& s : springs_) {
    blob.push_back(s.eps_p);
    blob.push_back(s.kappa);
    blob.push_back(s.eps_r);
    blob.push_back(s.lambda_cum);
    blob.push_back(s.dissipation_cum);
  }
  return blob;
}

// ---------------------------------------------------------------------------
// Newton stepping

namespace {

struct NewtonOutcome {
  bool converged = false;
  Eigen::VectorXd u;
  int iterations = 0;
  std::vector<double> residuals;
};

NewtonOutcome newton_solve(System& system, double load, const SolverSettings& st) {
  NewtonOutcome out;
  Eigen::VectorXd u = system.committed_u();
  const Eigen::VectorXd f_ext = load * system.unit_load();
  // force scale of the step: target load, departing load, or a floor for
  // all-zero programs (residuals live on the roundoff of these magnitudes)
  const double scale =
      std::max({f_ext.norm(), std::abs(system.committed_load()) * system.unit_load().norm(),
                1e-8 * system.unit_load().norm()});

  Eigen::SparseLU<SparseMatrix> lu;
  SparseMatrix K;
  // internal forces cancel elastic terms orders of magnitude above the load
  // scale, so the residual bottoms out on their roundoff; when it stops
  // contracting yet already sits within 100x the target, the best iterate is
  // accepted (bisection cannot lower a floor set by the stiffness magnitudes)
  double best_res = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_u;
  int best_it = 0;
  // max_newton_iters bounds the number of updates; the residual after the
  // last update is still checked before giving up
  for (int it = 0;; ++it) {
    Eigen::VectorXd r;
    try {
      r = system.internal_force_and_tangent(u, &K, st.consistent_tangent) - f_ext;
    } catch (const std::exception&) {
      return out;  // treat constitutive failure as divergence -> bisect
    }
    const double res = r.norm();
    out.residuals.push_back(res);
    out.iterations = it;
    if (!std::isfinite(res)) return out;
    if (res <= st.newton_tol * scale) {
      out.converged = true;
      out.u = u;
      return out;
    }
    if (res < 0.9 * best_res) {
      best_res = res;
      best_u = u;
      best_it = it;
    }
    if (it - best_it >= 5 && best_res <= 100.0 * st.newton_tol * scale) {
      out.converged = true;
      out.u = best_u;
      return out;
    }
    if (it >= st.max_newton_iters) return out;
    lu.compute(K);
    if (lu.info() != Eigen::Success) return out;
    u -= lu.solve(r);
  }
}

// Recursive bisection around newton_solve; commits every accepted substep.
void advance(System& system, double load, const SolverSettings& st, int depth, StepResult& acc) {
  const double load_from = system.committed_load();
  const Eigen::VectorXd u_from = system.committed_u();
  const NewtonOutcome n = newton_solve(system, load, st);
  if (n.converged) {
    const CommitInfo info = system.commit(n.u);
    system.set_committed_load(load);
    acc.work_increment +=
        0.5 * (load_from + load) * system.unit_load().dot(n.u - u_from);
    acc.dissipation_increment += info.dissipation_increment;
    acc.iterations = n.iterations;
    acc.residuals = n.residuals;
    return;
  }
  if (depth >= st.max_bisection_depth) {
    std::ostringstream msg;
    msg << "newton: no convergence from load " << load_from << " to " << load << " after "
        << st.max_newton_iters << " iterations (bisection depth " << depth << ", residuals:";
    for (double r : n.residuals) msg << " " << r;
    msg << ")";
    throw std::runtime_error(msg.str());
  }
  const double mid = 0.5 * (load_from + load);
  advance(system, mid, st, depth + 1, acc);
  acc.bisections += 1;
  advance(system, load, st, depth + 1, acc);
}

}  // namespace

StepResult solve_step(System& system, double load, const SolverSettings& settings) {
  settings.validate();
  StepResult res;
  advance(system, load, settings, 0, res);
  res.u = system.committed_u();
  return res;
}

HistoryRecord run_history(System& system, const std::vector<double>& times,
                          const std::vector<double>& loads, const SolverSettings& settings,
                          int snapshot_every) {
  if (times.size() != loads.size() || times.empty())
    throw std::invalid_argument("history: times and loads must match and be nonempty");
  if (snapshot_every < 0) throw std::invalid_argument("history: snapshot_every must be >= 0");
  HistoryRecord h;
  h.times = times;
  h.loads = loads;
  const long long n = static_cast<long long>(times.size());
  h.u.resize(system.n_free(), n);
  h.work.resize(static_cast<std::size_t>(n));
  h.dissipation.resize(static_cast<std::size_t>(n));
  h.stored.resize(static_cast<std::size_t>(n));
  h.newton_iters.resize(static_cast<std::size_t>(n));
  if (snapshot_every > 0) h.snapshot_stride = system.state_stride();

  double work = 0.0, diss = 0.0;
  for (long long s = 0; s < n; ++s) {
    const StepResult r = solve_step(system, loads[static_cast<std::size_t>(s)], settings);
    work += r.work_increment;
    diss += r.dissipation_increment;
    h.u.col(s) = r.u;
    h.work[static_cast<std::size_t>(s)] = work;
    h.dissipation[static_cast<std::size_t>(s)] = diss;
    h.stored[static_cast<std::size_t>(s)] = system.stored_energy();
    h.newton_iters[static_cast<std::size_t>(s)] = r.iterations;
    if (snapshot_every > 0 && (s % snapshot_every == 0 || s == n - 1)) {
      h.snapshot_steps.push_back(s);
      h.snapshots.push_back(system.state_blob());
    }
  }
  return h;
}

}  // namespace cyclofem
