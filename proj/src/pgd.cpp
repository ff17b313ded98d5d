#include "cyclofem/pgd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "chunkfile.hpp"

namespace cyclofem {

namespace {

constexpr double kTiny = 1e-300;

// Kronecker product of the scale vectors; entry L is prod_j theta[j][n_j(L)]
// with scale 0 varying fastest, matching the flat cycle numbering.
Eigen::VectorXd cycle_products(const std::vector<Eigen::VectorXd>& theta) {
  Eigen::VectorXd tp = Eigen::VectorXd::Ones(1);
  for (const auto& t : theta) {
    Eigen::VectorXd next(tp.size() * t.size());
    for (Eigen::Index a = 0; a < t.size(); ++a) next.segment(a * tp.size(), tp.size()) = t[a] * tp;
    tp.swap(next);
  }
  return tp;
}

void decode_cycle(long long L, const std::vector<int>& scales, std::vector<int>& idx) {
  for (std::size_t j = 0; j < scales.size(); ++j) {
    idx[j] = static_cast<int>(L % scales[j]);
    L /= scales[j];
  }
}

void check_mode_shape(const TimeGrid& grid, Eigen::Index n_free, const Mode& mode,
                      const char* where) {
  if (n_free >= 0 && mode.phi.rows() != n_free)
    throw std::invalid_argument(std::string("pgd: ") + where + ": spatial block has wrong height");
  if (mode.phi.cols() != grid.n_tau)
    throw std::invalid_argument(std::string("pgd: ") + where +
                                ": spatial block must have one column per intra-cycle node");
  if (static_cast<int>(mode.theta.size()) != grid.scale_count())
    throw std::invalid_argument(std::string("pgd: ") + where +
                                ": mode needs one vector per cycle scale");
  for (int j = 0; j < grid.scale_count(); ++j)
    if (mode.theta[j].size() != grid.scales[static_cast<std::size_t>(j)])
      throw std::invalid_argument(std::string("pgd: ") + where +
                                  ": cycle-scale vector has wrong length");
}

double weighted_norm(const Eigen::MatrixXd& a, const std::vector<double>& w) {
  double s = 0.0;
  for (Eigen::Index h = 0; h < a.cols(); ++h)
    s += w[static_cast<std::size_t>(h)] * a.col(h).squaredNorm();
  return std::sqrt(s);
}

// sum_h w_h a_h' K b_h
double stiffness_gram(const PgdContext& ctx, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd kb = ctx.stiffness() * b;
  const std::vector<double>& w = ctx.grid().w;
  double s = 0.0;
  for (Eigen::Index h = 0; h < a.cols(); ++h)
    s += w[static_cast<std::size_t>(h)] * a.col(h).dot(kb.col(h));
  return s;
}

// q[L] = sum_h w_h phi_h' (g(:, n(h,L)) + amp_n f_unit), the per-cycle
// projection of the frozen right-hand side onto a spatial trace.
Eigen::VectorXd cycle_projection(const PgdContext& ctx, const Eigen::MatrixXd& phi) {
  const TimeGrid& grid = ctx.grid();
  const int n_tau = grid.n_tau;
  const long long n_cyc = grid.cycles();
  const Eigen::VectorXd fphi = phi.transpose() * ctx.unit_load();
  Eigen::VectorXd q(n_cyc);
  for (long long L = 0; L < n_cyc; ++L) {
    const long long base = static_cast<long long>(n_tau - 1) * L;
    double acc = 0.0;
    for (int h = 0; h < n_tau; ++h) {
      const long long col = base + h;
      acc += grid.w[static_cast<std::size_t>(h)] *
             (phi.col(h).dot(ctx.g.col(col)) + ctx.step_loads()[col] * fphi[h]);
    }
    q[L] = acc;
  }
  return q;
}

struct GramEntry {
  const Mode* mode;
  double zeta;
  Eigen::VectorXd tp;
};

// A = (temporal Gram) .* (spatial stiffness Gram), r = load/history projection.
void assemble_amplitude_system(const PgdContext& ctx, const std::vector<GramEntry>& entries,
                               Eigen::MatrixXd& A, Eigen::VectorXd& r) {
  const int m = static_cast<int>(entries.size());
  A.resize(m, m);
  r.resize(m);
  for (int i = 0; i < m; ++i) {
    r[i] = entries[static_cast<std::size_t>(i)].tp.dot(
        cycle_projection(ctx, entries[static_cast<std::size_t>(i)].mode->phi));
    for (int k = i; k < m; ++k) {
      const double t = entries[static_cast<std::size_t>(i)].tp.dot(
          entries[static_cast<std::size_t>(k)].tp);
      const double s = stiffness_gram(ctx, entries[static_cast<std::size_t>(i)].mode->phi,
                                      entries[static_cast<std::size_t>(k)].mode->phi);
      A(i, k) = A(k, i) = t * s;
    }
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void PgdSettings::validate() const {
  if (max_modes < 1) throw std::invalid_argument("pgd settings: max_modes must be >= 1");
  if (!(fp_tol > 0)) throw std::invalid_argument("pgd settings: fp_tol must be positive");
  if (max_fp_sweeps < 1) throw std::invalid_argument("pgd settings: max_fp_sweeps must be >= 1");
  if (stagnation_window < 2)
    throw std::invalid_argument("pgd settings: stagnation_window must be >= 2");
  if (!(outer_tol > 0)) throw std::invalid_argument("pgd settings: outer_tol must be positive");
  if (max_outer_iters < 1)
    throw std::invalid_argument("pgd settings: max_outer_iters must be >= 1");
  if (!(mode_threshold >= 0))
    throw std::invalid_argument("pgd settings: mode_threshold must be >= 0");
  if (!(history_relaxation > 0) || history_relaxation > 1)
    throw std::invalid_argument("pgd settings: history_relaxation must be in (0, 1]");
}

PgdContext::PgdContext(System& system, const TimeGrid& grid, std::vector<double> step_loads)
    : system_(&system), grid_(grid) {
  grid_.validate();
  if (static_cast<long long>(step_loads.size()) != grid_.steps())
    throw std::invalid_argument("pgd: need one load amplitude per global step (" +
                                std::to_string(grid_.steps()) + "), got " +
                                std::to_string(step_loads.size()));
  loads_ = Eigen::Map<const Eigen::VectorXd>(step_loads.data(),
                                             static_cast<Eigen::Index>(step_loads.size()));
  K_ = system.elastic_stiffness();
  f_unit_ = system.unit_load();
  ldlt_.compute(K_);
  if (ldlt_.info() != Eigen::Success)
    throw std::invalid_argument("pgd: elastic stiffness factorization failed");
  g.setZero(system.n_free(), grid_.steps());
}

Eigen::MatrixXd PgdContext::solve_static(const Eigen::MatrixXd& rhs) const {
  Eigen::MatrixXd out = ldlt_.solve(rhs);
  if (ldlt_.info() != Eigen::Success) throw std::runtime_error("pgd: static solve failed");
  return out;
}

void PgdContext::set_anchor() { anchor_ = system_->save(); }

void PgdContext::restore_anchor() {
  if (!anchor_) throw std::logic_error("pgd: no anchor set");
  system_->restore(*anchor_);
}

Eigen::VectorXd reconstruct_step(const Decomposition& dec, long long step) {
  if (step < 1 || step > dec.grid.steps())
    throw std::out_of_range("pgd: step " + std::to_string(step) + " outside 1.." +
                            std::to_string(dec.grid.steps()));
  const auto [h, n] = time_index_inverse(dec.grid, step);
  Eigen::VectorXd u;
  for (const Mode& m : dec.modes) {
    check_mode_shape(dec.grid, u.size() == 0 ? -1 : u.size(), m, "reconstruct");
    double t = m.zeta;
    for (std::size_t j = 0; j < m.theta.size(); ++j) t *= m.theta[j][n[j] - 1];
    if (u.size() == 0)
      u = t * m.phi.col(h - 1);
    else
      u += t * m.phi.col(h - 1);
  }
  if (u.size() == 0 && !dec.modes.empty()) u.setZero(dec.modes.front().phi.rows());
  return u;
}

Eigen::MatrixXd reconstruct(const Decomposition& dec, const std::vector<long long>& steps) {
  if (dec.modes.empty()) throw std::invalid_argument("pgd: cannot reconstruct without modes");
  Eigen::MatrixXd out(dec.modes.front().phi.rows(), static_cast<Eigen::Index>(steps.size()));
  for (std::size_t i = 0; i < steps.size(); ++i)
    out.col(static_cast<Eigen::Index>(i)) = reconstruct_step(dec, steps[i]);
  return out;
}

Eigen::MatrixXd reconstruct_all(const Decomposition& dec) {
  if (dec.modes.empty()) throw std::invalid_argument("pgd: cannot reconstruct without modes");
  const TimeGrid& grid = dec.grid;
  const int n_tau = grid.n_tau;
  const long long n_cyc = grid.cycles();
  const Eigen::Index n_free = dec.modes.front().phi.rows();
  for (const Mode& m : dec.modes) check_mode_shape(grid, n_free, m, "reconstruct");

  std::vector<Eigen::VectorXd> tp;
  tp.reserve(dec.modes.size());
  for (const Mode& m : dec.modes) tp.push_back(cycle_products(m.theta));

  Eigen::MatrixXd out(n_free, grid.steps());
  Eigen::MatrixXd acc(n_free, n_tau);
  for (long long L = 0; L < n_cyc; ++L) {
    acc.setZero();
    for (std::size_t i = 0; i < dec.modes.size(); ++i)
      acc += (dec.modes[i].zeta * tp[i][L]) * dec.modes[i].phi;
    const long long base = static_cast<long long>(n_tau - 1) * L;
    // boundary steps belong to the following cycle's first node
    out.middleCols(base, n_tau - 1) = acc.leftCols(n_tau - 1);
    if (L == n_cyc - 1) out.col(base + n_tau - 1) = acc.col(n_tau - 1);
  }
  return out;
}

std::vector<double> cycle_boundary_jumps(const Decomposition& dec) {
  if (dec.modes.empty()) throw std::invalid_argument("pgd: cannot reconstruct without modes");
  const TimeGrid& grid = dec.grid;
  const long long n_cyc = grid.cycles();
  const Eigen::Index n_free = dec.modes.front().phi.rows();
  std::vector<Eigen::VectorXd> tp;
  for (const Mode& m : dec.modes) {
    check_mode_shape(grid, n_free, m, "boundary jumps");
    tp.push_back(cycle_products(m.theta));
  }
  std::vector<double> jumps;
  jumps.reserve(static_cast<std::size_t>(std::max<long long>(0, n_cyc - 1)));
  Eigen::VectorXd d(n_free);
  for (long long b = 1; b < n_cyc; ++b) {
    d.setZero();
    for (std::size_t i = 0; i < dec.modes.size(); ++i)
      d += dec.modes[i].zeta * (tp[i][b - 1] * dec.modes[i].phi.col(grid.n_tau - 1) -
                                tp[i][b] * dec.modes[i].phi.col(0));
    jumps.push_back(d.norm());
  }
  return jumps;
}

void small_time_update(const PgdContext& ctx, const Decomposition& prior, Mode& mode) {
  const TimeGrid& grid = ctx.grid();
  const int n_tau = grid.n_tau;
  const long long n_cyc = grid.cycles();
  check_mode_shape(grid, ctx.g.rows(), mode, "intra-cycle update");

  const Eigen::VectorXd tp = cycle_products(mode.theta);
  const double s2 = tp.squaredNorm();
  if (!(s2 > 0))
    throw EnrichmentError(
        "pgd: vanishing temporal amplitude (zero cycle-weight norm) in the intra-cycle update");

  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(ctx.g.rows(), n_tau);
  Eigen::VectorXd amp_acc = Eigen::VectorXd::Zero(n_tau);
  for (long long L = 0; L < n_cyc; ++L) {
    if (tp[L] == 0.0) continue;
    const long long base = static_cast<long long>(n_tau - 1) * L;
    for (int h = 0; h < n_tau; ++h) {
      b.col(h) += tp[L] * ctx.g.col(base + h);
      amp_acc[h] += tp[L] * ctx.step_loads()[base + h];
    }
  }
  b += ctx.unit_load() * amp_acc.transpose();

  mode.phi = ctx.solve_static(b) / s2;
  for (const Mode& p : prior.modes) {
    check_mode_shape(grid, ctx.g.rows(), p, "intra-cycle update");
    const double c = tp.dot(cycle_products(p.theta));
    if (c != 0.0) mode.phi -= (p.zeta * c / s2) * p.phi;
  }
}

void large_time_update(const PgdContext& ctx, const Decomposition& prior, Mode& mode, int scale) {
  const TimeGrid& grid = ctx.grid();
  const int s_count = grid.scale_count();
  if (scale < 0 || scale >= s_count)
    throw std::invalid_argument("pgd: cycle scale index out of range");
  check_mode_shape(grid, ctx.g.rows(), mode, "cycle-scale update");

  const double e_k = stiffness_gram(ctx, mode.phi, mode.phi);
  if (!(e_k > 0))
    throw EnrichmentError("pgd: mode energy vanished (stiffness energy " + fmt(e_k) +
                          ") while updating cycle scale " + std::to_string(scale));

  Eigen::VectorXd resid = cycle_projection(ctx, mode.phi);
  for (const Mode& p : prior.modes) {
    const double k_i = stiffness_gram(ctx, mode.phi, p.phi);
    if (k_i == 0.0) continue;
    resid -= (p.zeta * k_i) * cycle_products(p.theta);
  }

  const int len = grid.scales[static_cast<std::size_t>(scale)];
  Eigen::VectorXd num = Eigen::VectorXd::Zero(len);
  Eigen::VectorXd den = Eigen::VectorXd::Zero(len);
  std::vector<int> idx(static_cast<std::size_t>(s_count));
  const long long n_cyc = grid.cycles();
  for (long long L = 0; L < n_cyc; ++L) {
    decode_cycle(L, grid.scales, idx);
    double oth = 1.0;
    for (int j = 0; j < s_count; ++j)
      if (j != scale) oth *= mode.theta[static_cast<std::size_t>(j)][idx[static_cast<std::size_t>(j)]];
    const int k = idx[static_cast<std::size_t>(scale)];
    num[k] += oth * resid[L];
    den[k] += oth * oth;
  }
  for (int k = 0; k < len; ++k) {
    if (!(den[k] > 0))
      throw EnrichmentError("pgd: mode energy vanished (cycle scale " + std::to_string(scale) +
                            " entry " + std::to_string(k) + " has zero weight)");
    mode.theta[static_cast<std::size_t>(scale)][k] = num[k] / (e_k * den[k]);
  }
}

double frozen_objective(const PgdContext& ctx, const Decomposition& prior, const Mode* mode) {
  std::vector<GramEntry> entries;
  for (const Mode& p : prior.modes) entries.push_back({&p, p.zeta, cycle_products(p.theta)});
  if (mode) entries.push_back({mode, 1.0, cycle_products(mode->theta)});
  if (entries.empty()) return 0.0;
  Eigen::MatrixXd a;
  Eigen::VectorXd r;
  assemble_amplitude_system(ctx, entries, a, r);
  Eigen::VectorXd z(static_cast<Eigen::Index>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) z[static_cast<Eigen::Index>(i)] = entries[i].zeta;
  return 0.5 * z.dot(a * z) - z.dot(r);
}

void normalize_mode(const TimeGrid& grid, Mode& mode) {
  check_mode_shape(grid, -1, mode, "normalization");
  const double n_phi = weighted_norm(mode.phi, grid.w);
  if (!(n_phi > 0))
    throw EnrichmentError("pgd: mode energy vanished (zero spatial block) in normalization");
  mode.phi /= n_phi;
  double factor = n_phi;
  for (std::size_t j = 0; j < mode.theta.size(); ++j) {
    const double n_t = mode.theta[j].norm();
    if (!(n_t > 0))
      throw EnrichmentError("pgd: vanishing temporal amplitude (cycle scale " + std::to_string(j) +
                            ") in normalization");
    mode.theta[j] /= n_t;
    factor *= n_t;
  }
  mode.zeta *= factor;
}

void update_coefficients(const PgdContext& ctx, Decomposition& dec) {
  if (dec.modes.empty()) throw std::invalid_argument("pgd: no modes to update");
  std::vector<GramEntry> entries;
  for (const Mode& m : dec.modes) {
    check_mode_shape(ctx.grid(), ctx.g.rows(), m, "amplitude update");
    entries.push_back({&m, m.zeta, cycle_products(m.theta)});
  }
  Eigen::MatrixXd a;
  Eigen::VectorXd r;
  assemble_amplitude_system(ctx, entries, a, r);

  const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  const Eigen::VectorXd d = ldlt.vectorD();
  const double d_max = d.maxCoeff();
  if (ldlt.info() != Eigen::Success || !(d_max > 0) || !(d.minCoeff() > 1e-12 * d_max))
    throw EnrichmentError("pgd: redundant mode (amplitude system singular, pivot ratio " +
                          fmt(d_max > 0 ? d.minCoeff() / d_max : 0.0) + ")");
  const Eigen::VectorXd z = ldlt.solve(r);
  for (std::size_t i = 0; i < dec.modes.size(); ++i) {
    double zi = z[static_cast<Eigen::Index>(i)];
    if (zi < 0) {
      // flip the first cycle-scale vector so amplitudes stay nonnegative
      dec.modes[i].theta[0] = -dec.modes[i].theta[0];
      zi = -zi;
    }
    dec.modes[i].zeta = zi;
  }
}

double coefficient_residual(const PgdContext& ctx, const Decomposition& dec) {
  if (dec.modes.empty()) throw std::invalid_argument("pgd: no modes to check");
  std::vector<GramEntry> entries;
  for (const Mode& m : dec.modes) entries.push_back({&m, m.zeta, cycle_products(m.theta)});
  Eigen::MatrixXd a;
  Eigen::VectorXd r;
  assemble_amplitude_system(ctx, entries, a, r);
  Eigen::VectorXd z(static_cast<Eigen::Index>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) z[static_cast<Eigen::Index>(i)] = entries[i].zeta;
  return (a * z - r).norm() / std::max(r.norm(), kTiny);
}

double sweep_internal_histories(PgdContext& ctx, const Decomposition& dec, double relaxation) {
  if (!(relaxation > 0) || relaxation > 1)
    throw std::invalid_argument("pgd: relaxation must be in (0, 1]");
  if (dec.modes.empty()) throw std::invalid_argument("pgd: cannot sweep without modes");
  if (!ctx.has_anchor()) throw std::logic_error("pgd: sweep requires an anchor");

  const Eigen::MatrixXd u_all = reconstruct_all(dec);
  ctx.restore_anchor();
  System& sys = ctx.system();
  Eigen::MatrixXd g_new = ctx.g;  // column 1 stays pinned to the warmup seam
  const long long n_steps = ctx.grid().steps();
  for (long long n = 2; n <= n_steps; ++n) {
    const Eigen::Index col = static_cast<Eigen::Index>(n - 1);
    try {
      g_new.col(col) = ctx.stiffness() * u_all.col(col) - sys.internal_force(u_all.col(col));
    } catch (const std::exception& e) {
      throw std::runtime_error("pgd history sweep failed at step " + std::to_string(n) + ": " +
                               e.what());
    }
    sys.commit(u_all.col(col));
  }
  sys.set_committed_load(ctx.step_loads()[static_cast<Eigen::Index>(n_steps - 1)]);

  const double scale = std::max({g_new.norm(), ctx.g.norm(), kTiny});
  const double change = (g_new - ctx.g).norm() / scale;
  if (relaxation == 1.0)
    ctx.g = std::move(g_new);
  else
    ctx.g = (1.0 - relaxation) * ctx.g + relaxation * g_new;
  return change;
}

WarmupSeed initial_guess(PgdContext& ctx, int cycles, const SolverSettings& newton) {
  if (cycles < 1) throw std::invalid_argument("pgd: warmup needs at least one cycle");
  const TimeGrid& grid = ctx.grid();
  const int n_tau = grid.n_tau;
  const long long warm_steps = static_cast<long long>(n_tau - 1) * cycles + 1;

  // warmup applies the window's first cycle periodically, ending at t = 0
  std::vector<double> times(static_cast<std::size_t>(warm_steps));
  std::vector<double> loads(static_cast<std::size_t>(warm_steps));
  for (long long s = 0; s < warm_steps; ++s) {
    const long long c = s / (n_tau - 1);
    const long long k = s % (n_tau - 1);
    times[static_cast<std::size_t>(s)] = (static_cast<double>(c) - cycles) * grid.period +
                                         grid.tau[static_cast<std::size_t>(k)];
    loads[static_cast<std::size_t>(s)] = ctx.step_loads()[static_cast<Eigen::Index>(k)];
  }
  times.back() = 0.0;

  WarmupSeed seed;
  seed.record = run_history(ctx.system(), times, loads, newton);
  ctx.set_anchor();

  Eigen::MatrixXd g_warm = ctx.stiffness() * seed.record.u;
  for (long long s = 0; s < warm_steps; ++s)
    g_warm.col(s) -= loads[static_cast<std::size_t>(s)] * ctx.unit_load();

  const long long last_base = static_cast<long long>(n_tau - 1) * (cycles - 1);
  const long long prev_base = static_cast<long long>(n_tau - 1) * (cycles - 2);
  const long long n_cyc = grid.cycles();
  for (long long L = 0; L < n_cyc; ++L) {
    const long long base = static_cast<long long>(n_tau - 1) * L;
    for (int h = 0; h < n_tau; ++h) {
      ctx.g.col(base + h) = g_warm.col(last_base + h);
      if (cycles >= 2)
        ctx.g.col(base + h) +=
            static_cast<double>(L + 1) * (g_warm.col(last_base + h) - g_warm.col(prev_base + h));
    }
  }
  ctx.g.col(0) = g_warm.col(warm_steps - 1);  // exact seam value

  seed.mode.phi = seed.record.u.middleCols(last_base, n_tau);
  seed.mode.theta.clear();
  for (int n : grid.scales) seed.mode.theta.push_back(Eigen::VectorXd::Ones(n));
  seed.mode.zeta = 1.0;
  return seed;
}

namespace {

// One alternation over all blocks; returns the largest relative block change.
double fixed_point_sweep(const PgdContext& ctx, const Decomposition& prior, Mode& mode) {
  const TimeGrid& grid = ctx.grid();
  const Eigen::MatrixXd phi_old = mode.phi;
  small_time_update(ctx, prior, mode);
  double corr =
      weighted_norm(mode.phi - phi_old, grid.w) / std::max(weighted_norm(mode.phi, grid.w), kTiny);
  for (int j = 0; j < grid.scale_count(); ++j) {
    const Eigen::VectorXd theta_old = mode.theta[static_cast<std::size_t>(j)];
    large_time_update(ctx, prior, mode, j);
    const Eigen::VectorXd& t = mode.theta[static_cast<std::size_t>(j)];
    corr = std::max(corr, (t - theta_old).norm() / std::max(t.norm(), kTiny));
  }
  return corr;
}

}  // namespace

void enrich_mode(PgdContext& ctx, Decomposition& dec, const PgdSettings& settings,
                 const Mode* seed) {
  settings.validate();
  if (!ctx.has_anchor())
    throw std::logic_error("pgd: enrichment requires a warmup anchor (call initial_guess)");
  const TimeGrid& grid = ctx.grid();

  Mode mode;
  if (seed) {
    mode = *seed;
    check_mode_shape(grid, ctx.g.rows(), mode, "enrichment seed");
  } else {
    mode.phi.setZero(ctx.g.rows(), grid.n_tau);
    mode.theta.clear();
    for (int n : grid.scales) mode.theta.push_back(Eigen::VectorXd::Ones(n));
    mode.zeta = 1.0;
    small_time_update(ctx, dec, mode);  // flat-in-the-scales starting guess
  }

  ModeLog log;
  Eigen::MatrixXd u_prev;
  if (!dec.modes.empty()) u_prev = reconstruct_all(dec);

  for (int outer = 1; outer <= settings.max_outer_iters; ++outer) {
    log.outer_iterations = outer;
    Mode accepted;
    if (outer > 1) {
      // resume enriching the same mode against the refreshed histories
      accepted = dec.modes.back();
      dec.modes.pop_back();
      mode = accepted;
      mode.phi *= mode.zeta;
      mode.zeta = 1.0;
    }

    try {
      const int sweep_base = static_cast<int>(log.corrections.size());
      bool fp_done = false;
      for (int it = 0; it < settings.max_fp_sweeps; ++it) {
        const double corr = fixed_point_sweep(ctx, dec, mode);
        ++log.fp_sweeps;
        log.corrections.push_back(corr);
        log.objective.push_back(frozen_objective(ctx, dec, &mode));
        if (corr <= settings.fp_tol) {
          fp_done = true;
          break;
        }
        const int k = static_cast<int>(log.corrections.size()) - sweep_base;
        if (k > settings.stagnation_window &&
            !(log.corrections.back() <
              log.corrections[static_cast<std::size_t>(sweep_base + k - 1 -
                                                       settings.stagnation_window)]))
          throw EnrichmentError("pgd: fixed-point stagnation (correction " + fmt(corr) +
                                " not below the value " +
                                std::to_string(settings.stagnation_window) + " sweeps earlier)");
      }
      if (!fp_done) log.fp_converged = false;

      normalize_mode(grid, mode);
      dec.modes.push_back(mode);
      try {
        update_coefficients(ctx, dec);
      } catch (...) {
        dec.modes.pop_back();
        throw;
      }
    } catch (const EnrichmentError&) {
      if (outer == 1) throw;  // no accepted version of this mode exists yet
      dec.modes.push_back(accepted);
      log.fp_converged = false;
      break;
    }
    log.zeta_after.clear();
    for (const Mode& m : dec.modes) log.zeta_after.push_back(m.zeta);

    const Eigen::MatrixXd u_now = reconstruct_all(dec);
    log.outer_change = (u_prev.size() == 0 ? u_now.norm() : (u_now - u_prev).norm()) /
                       std::max(u_now.norm(), kTiny);
    if (!settings.resweep_within_mode) break;
    sweep_internal_histories(ctx, dec, settings.history_relaxation);
    if (log.outer_change <= settings.outer_tol) break;
    u_prev = u_now;
  }
  if (settings.resweep_within_mode) {
    // re-sync the amplitudes to the final swept histories
    try {
      update_coefficients(ctx, dec);
      log.zeta_after.clear();
      for (const Mode& m : dec.modes) log.zeta_after.push_back(m.zeta);
    } catch (const EnrichmentError&) {
    }
  }
  dec.log.push_back(std::move(log));
}

PgdRunResult pgd_solve(System& system, const TimeGrid& grid, const std::vector<double>& step_loads,
                       const PgdSettings& settings, const SolverSettings& newton,
                       int warmup_cycles) {
  settings.validate();
  newton.validate();
  PgdContext ctx(system, grid, step_loads);
  WarmupSeed seed = initial_guess(ctx, warmup_cycles, newton);

  PgdRunResult out;
  Decomposition& dec = out.decomposition;
  dec.grid = ctx.grid();
  for (int m = 1; m <= settings.max_modes; ++m) {
    try {
      enrich_mode(ctx, dec, settings, m == 1 ? &seed.mode : nullptr);
    } catch (const EnrichmentError& e) {
      out.stop_reason = e.what();
      break;
    }
    if (!settings.resweep_within_mode) sweep_internal_histories(ctx, dec, settings.history_relaxation);
    if (m >= 2) {
      const double ratio = dec.modes.back().zeta / std::max(dec.modes.front().zeta, kTiny);
      if (ratio < settings.mode_threshold) {
        dec.modes.pop_back();
        dec.log.pop_back();
        update_coefficients(ctx, dec);
        out.threshold_stop = true;
        break;
      }
    }
  }
  out.modes_built = dec.mode_count();
  out.warmup = std::move(seed.record);
  return out;
}

namespace {

constexpr char kDecompMagic[8] = {'C', 'Y', 'F', 'D', 'C', 'M', 'P', '1'};
constexpr std::uint32_t kDecompVersion = 1;

}  // namespace

void save_decomposition(const Decomposition& dec, const std::string& path) {
  dec.grid.validate();
  using chunkfile::Chunk;
  using chunkfile::Dtype;
  std::vector<Chunk> chunks;
  chunks.push_back(chunkfile::vec_chunk("grid/tau", dec.grid.tau));
  chunks.push_back(chunkfile::vec_chunk("grid/w", dec.grid.w));
  chunks.push_back(chunkfile::vec_chunk("grid/period", {dec.grid.period}));

  Chunk sc;
  sc.name = "grid/scales";
  sc.dtype = Dtype::i64;
  sc.rows = 1;
  sc.cols = dec.grid.scales.size();
  for (int n : dec.grid.scales) sc.i.push_back(n);
  chunks.push_back(std::move(sc));

  std::vector<double> zeta;
  for (const Mode& m : dec.modes) zeta.push_back(m.zeta);
  chunks.push_back(chunkfile::vec_chunk("zeta", zeta));

  for (std::size_t i = 0; i < dec.modes.size(); ++i) {
    const Mode& m = dec.modes[i];
    check_mode_shape(dec.grid, -1, m, "save");
    Chunk phi;
    phi.name = "mode" + std::to_string(i) + "/phi";
    phi.rows = static_cast<std::uint64_t>(m.phi.rows());
    phi.cols = static_cast<std::uint64_t>(m.phi.cols());
    phi.f.assign(m.phi.data(), m.phi.data() + m.phi.size());  // column-major
    chunks.push_back(std::move(phi));
    for (std::size_t j = 0; j < m.theta.size(); ++j) {
      Chunk th;
      th.name = "mode" + std::to_string(i) + "/theta" + std::to_string(j);
      th.rows = 1;
      th.cols = static_cast<std::uint64_t>(m.theta[j].size());
      th.f.assign(m.theta[j].data(), m.theta[j].data() + m.theta[j].size());
      chunks.push_back(std::move(th));
    }
  }
  chunkfile::write_file(path, kDecompMagic, kDecompVersion, chunks);

  nlohmann::json meta;
  meta["format"] = "cyclofem-decomposition";
  meta["version"] = kDecompVersion;
  meta["modes"] = dec.modes.size();
  meta["n_free"] = dec.modes.empty() ? 0 : dec.modes.front().phi.rows();
  meta["n_tau"] = dec.grid.n_tau;
  meta["period"] = dec.grid.period;
  meta["scales"] = dec.grid.scales;
  meta["zeta"] = zeta;
  auto& log = meta["log"] = nlohmann::json::array();
  for (const ModeLog& l : dec.log)
    log.push_back({{"fp_sweeps", l.fp_sweeps},
                   {"outer_iterations", l.outer_iterations},
                   {"fp_converged", l.fp_converged},
                   {"corrections", l.corrections},
                   {"objective", l.objective},
                   {"zeta_after", l.zeta_after},
                   {"outer_change", l.outer_change}});
  auto& list = meta["chunks"] = nlohmann::json::array();
  for (const auto& c : chunks)
    list.push_back({{"name", c.name},
                    {"dtype", c.dtype == Dtype::f64 ? "f64" : "i64"},
                    {"rows", c.rows},
                    {"cols", c.cols}});
  std::ofstream js(path + ".json");
  if (!js)
    throw std::runtime_error("cannot open decomposition sidecar for writing: " + path + ".json");
  js << meta.dump(2) << "\n";
}

Decomposition load_decomposition(const std::string& path) {
  using chunkfile::Chunk;
  using chunkfile::Dtype;
  const std::vector<Chunk> chunks = chunkfile::read_file(path, kDecompMagic, kDecompVersion);

  Decomposition dec;
  const Chunk& tau = chunkfile::find_chunk(chunks, "grid/tau", Dtype::f64, path);
  if (tau.rows != 1 || tau.cols < 2)
    throw std::runtime_error("decomposition chunk 'grid/tau' has wrong shape: " + path);
  dec.grid.n_tau = static_cast<int>(tau.cols);
  dec.grid.tau = tau.f;
  const Chunk& w = chunkfile::find_chunk(chunks, "grid/w", Dtype::f64, path);
  if (w.rows != 1 || w.cols != tau.cols)
    throw std::runtime_error("decomposition chunk 'grid/w' has wrong shape: " + path);
  dec.grid.w = w.f;
  const Chunk& period = chunkfile::find_chunk(chunks, "grid/period", Dtype::f64, path);
  if (period.f.size() != 1)
    throw std::runtime_error("decomposition chunk 'grid/period' has wrong shape: " + path);
  dec.grid.period = period.f.front();
  const Chunk& sc = chunkfile::find_chunk(chunks, "grid/scales", Dtype::i64, path);
  for (auto n : sc.i) dec.grid.scales.push_back(static_cast<int>(n));
  dec.grid.validate();

  const Chunk& zeta = chunkfile::find_chunk(chunks, "zeta", Dtype::f64, path);
  for (std::size_t i = 0; i < zeta.f.size(); ++i) {
    Mode m;
    m.zeta = zeta.f[i];
    const Chunk& phi =
        chunkfile::find_chunk(chunks, "mode" + std::to_string(i) + "/phi", Dtype::f64, path);
    if (phi.cols != static_cast<std::uint64_t>(dec.grid.n_tau) || phi.rows == 0)
      throw std::runtime_error("decomposition spatial block has wrong shape: " + path);
    m.phi = Eigen::Map<const Eigen::MatrixXd>(phi.f.data(), static_cast<Eigen::Index>(phi.rows),
                                              static_cast<Eigen::Index>(phi.cols));
    for (std::size_t j = 0; j < dec.grid.scales.size(); ++j) {
      const Chunk& th = chunkfile::find_chunk(
          chunks, "mode" + std::to_string(i) + "/theta" + std::to_string(j), Dtype::f64, path);
      if (th.rows != 1 || th.cols != static_cast<std::uint64_t>(dec.grid.scales[j]))
        throw std::runtime_error("decomposition cycle-scale vector has wrong shape: " + path);
      m.theta.push_back(Eigen::Map<const Eigen::VectorXd>(
          th.f.data(), static_cast<Eigen::Index>(th.f.size())));
    }
    dec.modes.push_back(std::move(m));
  }
  return dec;
}

void export_theta_csv(const Decomposition& dec, const std::string& path) {
  std::ofstream os(path, std::ios::binary);  // binary: keep CRLF exact on all platforms
  if (!os) throw std::runtime_error("cannot open CSV file for writing: " + path);
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  os << "mode,zeta,scale,index,value\r\n";
  for (std::size_t i = 0; i < dec.modes.size(); ++i)
    for (std::size_t j = 0; j < dec.modes[i].theta.size(); ++j)
      for (Eigen::Index k = 0; k < dec.modes[i].theta[j].size(); ++k)
        os << i + 1 << "," << num(dec.modes[i].zeta) << "," << j + 1 << "," << k + 1 << ","
           << num(dec.modes[i].theta[j][k]) << "\r\n";
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace cyclofem
