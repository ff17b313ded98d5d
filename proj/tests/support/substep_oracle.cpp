#include "support/substep_oracle.hpp"

#include <cmath>

namespace cyclofem::testing {

namespace {
constexpr double kSqrt23 = 0.81649658092772603273;
}

OracleResult integrate_rate_equations(const SymTensor& eps0, const SymTensor& eps1,
                                      const InternalState& s0, const MaterialParams& p,
                                      int n_sub) {
  const double mu = p.mu();
  const double la = p.lame_lambda();
  auto stress = [&](const SymTensor& e_el) {
    const double tr = e_el.trace();
    SymTensor s = e_el * (2.0 * mu);
    for (int i = 0; i < 3; ++i) s[i] += la * tr;
    return s;
  };

  OracleResult r;
  r.state = s0;
  const SymTensor deps_full = eps1 - eps0;
  for (int k = 0; k < n_sub; ++k) {
    const SymTensor eps_a = eps0 + deps_full * (static_cast<double>(k) / n_sub);
    const SymTensor deps = deps_full * (1.0 / n_sub);

    const SymTensor sig = stress(eps_a - r.state.eps_p - r.state.eps_r);
    const SymTensor sp_dev = (sig - p.H_kin * r.state.eps_p).deviator();
    const double nsp = sp_dev.norm();
    const double f = nsp - kSqrt23 * (p.sigma_p + p.H_iso * r.state.kappa);
    if (f <= 0.0 || nsp == 0.0) continue;

    const SymTensor n_hat = sp_dev * (1.0 / nsp);
    const SymTensor sig_dev = sig.deviator();
    const double nsd = sig_dev.norm();
    const bool ratchet = p.beta > 0.0 && nsd > 1e-14 * nsp;
    const SymTensor r_hat = ratchet ? sig_dev * (1.0 / nsd) : SymTensor{};

    const double denom = 2.0 * mu + p.H_kin + (2.0 / 3.0) * p.H_iso +
                         (ratchet ? 2.0 * mu * p.beta * n_hat.ddot(r_hat) : 0.0);
    // Consistency along the current direction plus a correction that removes
    // the accumulated yield-surface drift of the explicit scheme.
    const double dlam = (2.0 * mu * n_hat.ddot(deps.deviator()) + f) / denom;
    if (dlam <= 0.0) continue;

    r.state.eps_p += n_hat * dlam;
    r.state.kappa += kSqrt23 * dlam;
    if (ratchet) r.state.eps_r += r_hat * (p.beta * dlam);
    r.state.lambda_cum += dlam;
    r.dissipation += (kSqrt23 * p.sigma_p + (ratchet ? p.beta * nsd : 0.0)) * dlam;
  }
  r.sigma = stress(eps1 - r.state.eps_p - r.state.eps_r);
  r.state.dissipation_cum = s0.dissipation_cum + r.dissipation;
  return r;
}

OracleResult classical_radial_return(const SymTensor& eps, const InternalState& s0,
                                     const MaterialParams& p) {
  const double mu = p.mu();
  const double la = p.lame_lambda();
  auto stress = [&](const SymTensor& e_el) {
    const double tr = e_el.trace();
    SymTensor s = e_el * (2.0 * mu);
    for (int i = 0; i < 3; ++i) s[i] += la * tr;
    return s;
  };

  OracleResult r;
  r.state = s0;
  const SymTensor sig_tr = stress(eps - s0.eps_p - s0.eps_r);
  const SymTensor xi = (sig_tr - p.H_kin * s0.eps_p).deviator();
  const double nxi = xi.norm();
  const double f_tr = nxi - kSqrt23 * (p.sigma_p + p.H_iso * s0.kappa);
  if (f_tr <= 0.0) {
    r.sigma = sig_tr;
    return r;
  }
  const double dlam = f_tr / (2.0 * mu + p.H_kin + (2.0 / 3.0) * p.H_iso);
  const SymTensor n_hat = xi * (1.0 / nxi);
  r.state.eps_p = s0.eps_p + n_hat * dlam;
  r.state.kappa = s0.kappa + kSqrt23 * dlam;
  r.state.lambda_cum = s0.lambda_cum + dlam;
  r.sigma = sig_tr - n_hat * (2.0 * mu * dlam);
  r.dissipation = kSqrt23 * p.sigma_p * dlam;
  r.state.dissipation_cum = s0.dissipation_cum + r.dissipation;
  return r;
}

Matrix6d fd_tangent(const SymTensor& eps, const InternalState& s0,
                    const MaterialParams& p, double step) {
  Matrix6d T = Matrix6d::Zero();
  for (int j = 0; j < 6; ++j) {
    // Columns 3..5 differentiate with respect to engineering shear, which is
    // twice the stored tensor component.
    const double comp_step = (j < 3) ? step : 0.5 * step;
    SymTensor ep = eps, em = eps;
    ep[j] += comp_step;
    em[j] -= comp_step;
    const StressResult rp = return_map(ep, s0, p);
    const StressResult rm = return_map(em, s0, p);
    for (int i = 0; i < 6; ++i) T(i, j) = (rp.sigma[i] - rm.sigma[i]) / (2.0 * step);
  }
  return T;
}

SpringOracleResult integrate_spring_rate_equations(double eps0, double eps1,
                                                   const SpringState& s0,
                                                   const MaterialParams& p, int n_sub) {
  SpringOracleResult r;
  r.state = s0;
  const double deps_full = eps1 - eps0;
  for (int k = 0; k < n_sub; ++k) {
    const double eps_a = eps0 + deps_full * (static_cast<double>(k) / n_sub);
    const double deps = deps_full / n_sub;
    const double sig = p.E * (eps_a - r.state.eps_p - r.state.eps_r);
    const double sp = sig - p.H_kin * r.state.eps_p;
    const double f = std::abs(sp) - (p.sigma_p + p.H_iso * r.state.kappa);
    if (f <= 0.0) continue;
    const double n = sp >= 0.0 ? 1.0 : -1.0;
    const double rdir = sig > 0.0 ? 1.0 : (sig < 0.0 ? -1.0 : 0.0);
    const double denom = p.E + p.H_kin + p.H_iso + p.beta * p.E * n * rdir;
    const double dlam = (p.E * n * deps + f) / denom;
    if (dlam <= 0.0) continue;
    r.state.eps_p += n * dlam;
    r.state.kappa += dlam;
    r.state.eps_r += p.beta * rdir * dlam;
    r.state.lambda_cum += dlam;
    r.dissipation += (p.sigma_p + p.beta * std::abs(sig)) * dlam;
  }
  r.sigma = p.E * (eps1 - r.state.eps_p - r.state.eps_r);
  r.state.dissipation_cum = s0.dissipation_cum + r.dissipation;
  return r;
}

}  // namespace cyclofem::testing
