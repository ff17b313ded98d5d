#include "cyclofem/constitutive.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cyclofem {

namespace {

constexpr double kSqrt23 = 0.81649658092772603273;  // sqrt(2/3)

Vector6d unit_trace_vector() {
  Vector6d e;
  e << 1, 1, 1, 0, 0, 0;
  return e;
}

// Deviatoric projector in the Mandel basis.
Matrix6d deviatoric_projector() {
  const Vector6d e = unit_trace_vector();
  return Matrix6d::Identity() - (e * e.transpose()) / 3.0;
}

// Isotropic stiffness in the Mandel basis: lambda e e^T + 2 mu I.
Matrix6d mandel_moduli(const MaterialParams& p) {
  const Vector6d e = unit_trace_vector();
  return p.lame_lambda() * (e * e.transpose()) +
         2.0 * p.mu() * Matrix6d::Identity();
}

struct TwoByTwo {
  double j11, j12, j21, j22;
};

}  // namespace

void MaterialParams::validate() const {
  std::ostringstream bad;
  if (!(E > 0.0)) bad << "E must be > 0; ";
  if (!(nu > -1.0 && nu < 0.5)) bad << "nu must lie in (-1, 0.5); ";
  if (!(sigma_p > 0.0)) bad << "sigma_p must be > 0; ";
  if (!(H_iso >= 0.0)) bad << "H_iso must be >= 0; ";
  if (!(H_kin >= 0.0)) bad << "H_kin must be >= 0; ";
  if (!(beta >= 0.0 && beta <= 1.0)) bad << "beta must lie in [0, 1]; ";
  if (!bad.str().empty())
    throw std::invalid_argument("material parameters invalid: " + bad.str());
}

void InternalState::validate() const {
  if (!eps_p.is_finite() || !eps_r.is_finite() || !std::isfinite(kappa) ||
      !std::isfinite(lambda_cum) || !std::isfinite(dissipation_cum))
    throw std::invalid_argument("internal state contains non-finite values");
  if (kappa < 0.0 || lambda_cum < 0.0 || dissipation_cum < 0.0)
    throw std::invalid_argument("internal state scalars must be nonnegative");
}

Matrix6d elastic_moduli(const MaterialParams& p) {
  p.validate();
  const double la = p.lame_lambda();
  const double mu = p.mu();
  Matrix6d D = Matrix6d::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) D(i, j) = la;
    D(i, i) = la + 2.0 * mu;
    D(i + 3, i + 3) = mu;  // engineering shear strains
  }
  return D;
}

StressResult return_map(const SymTensor& eps, const InternalState& s0,
                        const MaterialParams& p, const ReturnMapOptions& opt) {
  p.validate();
  s0.validate();
  if (!eps.is_finite())
    throw std::invalid_argument("return map: non-finite strain input");

  const double mu = p.mu();
  const Matrix6d Dm = mandel_moduli(p);
  const Matrix6d Pdev = deviatoric_projector();

  const Vector6d eps_m = eps.to_mandel();
  const Vector6d ep_m = s0.eps_p.to_mandel();
  const Vector6d er_m = s0.eps_r.to_mandel();

  const Vector6d sig_tr = Dm * (eps_m - ep_m - er_m);
  const Vector6d P = Pdev * (sig_tr - p.H_kin * ep_m);  // trial dev generalized stress
  const Vector6d Q = Pdev * sig_tr;                     // trial dev stress
  const double R0 = kSqrt23 * (p.sigma_p + p.H_iso * s0.kappa);
  const double f_tr = P.norm() - R0;

  StressResult res;
  res.state = s0;
  if (f_tr <= 0.0) {
    res.sigma = SymTensor::from_mandel(sig_tr);
    res.plastic = false;
    return res;
  }

  const double normP = P.norm();
  const double normQ = Q.norm();
  const double scale = std::max({normP, normQ, R0});
  const double f_tol = opt.tol_rel * p.sigma_p;

  Vector6d n_hat, r_hat;
  double dl = 0.0;
  bool ratchet = p.beta > 0.0 && normQ > 1e-14 * scale;
  int iters = 0;

  if (!opt.implicit_ratchet_direction && ratchet) {
    // Debug variant: flow directions frozen at the trial state.
    n_hat = P / normP;
    r_hat = Q / normQ;
    const double denom =
        2.0 * mu * (1.0 + p.beta * n_hat.dot(r_hat)) + p.H_kin + (2.0 / 3.0) * p.H_iso;
    if (denom <= 1e-12 * mu)
      throw std::runtime_error("return map: ill-posed frozen-direction step");
    dl = f_tr / denom;
  } else if (!ratchet) {
    // Classical radial return (beta = 0, or vanished deviatoric stress; the
    // ratcheting increment is zero by convention in the latter case).
    n_hat = P / normP;
    r_hat.setZero();
    dl = f_tr / (2.0 * mu + p.H_kin + (2.0 / 3.0) * p.H_iso);
  } else {
    // Fully implicit: both the plastic direction n = dev(s^p)/|dev(s^p)| and
    // the ratcheting direction r = dev(sigma)/|dev(sigma)| are taken at the
    // end of the step. n and r then lie in span{P, Q} and solve
    //   a n + b r = P,   c n + d r = Q
    // with a = R(dl) + (2 mu + H_kin) dl, b = 2 mu beta dl, c = 2 mu dl,
    // d = rho + 2 mu beta dl, rho = |dev(sigma)|. The unit-norm constraints
    // on n and r close a 2x2 Newton system in (dl, rho).
    const double p2 = normP * normP, q2 = normQ * normQ, pq = P.dot(Q);
    const double ap = 2.0 * mu + p.H_kin + (2.0 / 3.0) * p.H_iso;  // da/ddl
    const double bp = 2.0 * mu * p.beta;                           // db/ddl
    const double cp = 2.0 * mu;                                    // dc/ddl

    const double nr0 = std::clamp(pq / (normP * normQ), -1.0, 1.0);
    double denom0 = 2.0 * mu * (1.0 + p.beta * nr0) + p.H_kin + (2.0 / 3.0) * p.H_iso;
    if (denom0 < 2.0 * mu * (1.0 - p.beta) + p.H_kin)
      denom0 = 2.0 * mu + p.H_kin + (2.0 / 3.0) * p.H_iso;
    dl = f_tr / denom0;
    double rho = std::max(normQ - 2.0 * mu * dl * (nr0 + p.beta), 0.05 * normQ);

    auto coeffs = [&](double dl_, double rho_, double& a, double& b, double& c,
                      double& d, double& D) {
      a = R0 + (2.0 / 3.0) * p.H_iso * dl_ + (2.0 * mu + p.H_kin) * dl_;
      b = 2.0 * mu * p.beta * dl_;
      c = 2.0 * mu * dl_;
      d = rho_ + 2.0 * mu * p.beta * dl_;
      D = a * d - b * c;
    };
    auto residual = [&](double dl_, double rho_, double& G1, double& G2,
                        double& D) {
      double a, b, c, d;
      coeffs(dl_, rho_, a, b, c, d, D);
      const double N2 = d * d * p2 - 2.0 * b * d * pq + b * b * q2;
      const double M2 = a * a * q2 - 2.0 * a * c * pq + c * c * p2;
      G1 = N2 / (D * D) - 1.0;
      G2 = M2 / (D * D) - 1.0;
    };

    double G1, G2, D;
    residual(dl, rho, G1, G2, D);
    bool converged = false;
    for (iters = 0; iters < opt.max_iter; ++iters) {
      if (std::sqrt(G1 * G1 + G2 * G2) < 1e-13) {
        converged = true;
        break;
      }
      double a, b, c, d;
      coeffs(dl, rho, a, b, c, d, D);
      const double N2 = d * d * p2 - 2.0 * b * d * pq + b * b * q2;
      const double M2 = a * a * q2 - 2.0 * a * c * pq + c * c * p2;
      const double dd_dl = 2.0 * mu * p.beta;
      const double N2_dl = 2.0 * d * dd_dl * p2 - 2.0 * (bp * d + b * dd_dl) * pq + 2.0 * b * bp * q2;
      const double N2_rho = 2.0 * d * p2 - 2.0 * b * pq;
      const double M2_dl = 2.0 * a * ap * q2 - 2.0 * (ap * c + a * cp) * pq + 2.0 * c * cp * p2;
      const double D_dl = ap * d + a * dd_dl - bp * c - b * cp;
      const double D_rho = a;
      TwoByTwo J{
          N2_dl / (D * D) - 2.0 * N2 * D_dl / (D * D * D),
          N2_rho / (D * D) - 2.0 * N2 * D_rho / (D * D * D),
          M2_dl / (D * D) - 2.0 * M2 * D_dl / (D * D * D),
          -2.0 * M2 * D_rho / (D * D * D),
      };
      const double det = J.j11 * J.j22 - J.j12 * J.j21;
      if (std::abs(det) < 1e-300)
        throw std::runtime_error("return map: singular local Jacobian");
      double ddl = -(J.j22 * G1 - J.j12 * G2) / det;
      double drho = -(-J.j21 * G1 + J.j11 * G2) / det;

      double alpha = 1.0;
      const double g_old = std::sqrt(G1 * G1 + G2 * G2);
      for (int ls = 0; ls < 60; ++ls) {
        const double dl_n = dl + alpha * ddl;
        const double rho_n = rho + alpha * drho;
        if (dl_n > 0.0 && rho_n > 0.0) {
          double G1n, G2n, Dn;
          residual(dl_n, rho_n, G1n, G2n, Dn);
          if (Dn > 0.0 &&
              (std::sqrt(G1n * G1n + G2n * G2n) < g_old || alpha < 1e-6)) {
            dl = dl_n;
            rho = rho_n;
            G1 = G1n;
            G2 = G2n;
            D = Dn;
            break;
          }
        }
        alpha *= 0.5;
        if (ls == 59)
          throw std::runtime_error("return map: line search failed");
      }
    }
    if (!converged) {
      std::ostringstream msg;
      msg << "return map: no convergence after " << opt.max_iter
          << " iterations (|G| = " << std::sqrt(G1 * G1 + G2 * G2) << ")";
      throw std::runtime_error(msg.str());
    }
    double a, b, c, d;
    coeffs(dl, rho, a, b, c, d, D);
    n_hat = (d * P - b * Q) / D;
    r_hat = (a * Q - c * P) / D;
    n_hat.normalize();
    r_hat.normalize();
  }

  // State update along the converged directions.
  const Vector6d ep_new = ep_m + dl * n_hat;
  const Vector6d er_new = er_m + p.beta * dl * (ratchet ? r_hat : Vector6d::Zero().eval());
  const double kappa_new = s0.kappa + kSqrt23 * dl;
  const Vector6d sig_new = Dm * (eps_m - ep_new - er_new);

  const double f_new = (Pdev * (sig_new - p.H_kin * ep_new)).norm() -
                       kSqrt23 * (p.sigma_p + p.H_iso * kappa_new);
  if (std::abs(f_new) > std::max(f_tol, 1e-9 * scale) &&
      opt.implicit_ratchet_direction)
    throw std::runtime_error("return map: converged state violates consistency");

  res.sigma = SymTensor::from_mandel(sig_new);
  res.state.eps_p = SymTensor::from_mandel(ep_new);
  res.state.eps_r = SymTensor::from_mandel(er_new);
  res.state.kappa = kappa_new;
  res.state.lambda_cum = s0.lambda_cum + dl;
  res.dlambda = dl;
  res.plastic = true;
  res.ratchet_active = ratchet;
  res.iterations = iters;
  res.state.dissipation_cum =
      s0.dissipation_cum + dissipation_increment(s0, res.state, res.sigma, p);
  return res;
}

Matrix6d consistent_tangent(const StressResult& res, const MaterialParams& p,
                            const ReturnMapOptions& opt) {
  const Matrix6d De = elastic_moduli(p);
  if (!res.plastic) return De;

  const Matrix6d Dm = mandel_moduli(p);
  const Matrix6d Pdev = deviatoric_projector();
  const Matrix6d I = Matrix6d::Identity();
  const double dl = res.dlambda;
  const double beta = res.ratchet_active ? p.beta : 0.0;

  const Vector6d sig = res.sigma.to_mandel();
  const Vector6d ep = res.state.eps_p.to_mandel();
  const Vector6d sd = Pdev * (sig - p.H_kin * ep);
  const Vector6d qd = Pdev * sig;
  const double nsd = sd.norm();
  const double nqd = qd.norm();
  const Vector6d n_hat = sd / nsd;
  const Vector6d r_hat = (beta > 0.0 && nqd > 0.0) ? Vector6d(qd / nqd)
                                                   : Vector6d(Vector6d::Zero());

  // Linearization of the discrete system
  //   R1 = ep - ep_n - dl n(s) = 0
  //   R2 = kappa - kappa_n - sqrt(2/3) dl = 0
  //   R3 = er - er_n - beta dl r(sigma) = 0
  //   R4 = |dev s| - sqrt(2/3) (sigma_p + H_iso kappa) = 0
  // in z = (ep, kappa, er, dl); the chain goes through sigma = Dm (eps-ep-er)
  // and s = sigma - H_kin ep. Directions are state-independent in the
  // frozen-direction debug variant.
  Matrix6d Wn = Matrix6d::Zero(), Wr = Matrix6d::Zero();
  if (opt.implicit_ratchet_direction) {
    Wn = (Pdev - n_hat * n_hat.transpose()) / nsd;
    if (beta > 0.0) Wr = (Pdev - r_hat * r_hat.transpose()) / nqd;
  }

  Eigen::Matrix<double, 14, 14> J = Eigen::Matrix<double, 14, 14>::Zero();
  Eigen::Matrix<double, 14, 6> E = Eigen::Matrix<double, 14, 6>::Zero();

  const Matrix6d dnde = Wn * (Dm + p.H_kin * I);  // -d n / d ep
  const Matrix6d dndr = Wn * Dm;                  // -d n / d er
  J.block<6, 6>(0, 0) = I + dl * dnde;
  J.block<6, 6>(0, 7) = dl * dndr;
  J.block<6, 1>(0, 13) = -n_hat;
  J(6, 6) = 1.0;
  J(6, 13) = -kSqrt23;
  J.block<6, 6>(7, 0) = beta * dl * Wr * Dm;
  J.block<6, 6>(7, 7) = I + beta * dl * Wr * Dm;
  J.block<6, 1>(7, 13) = -beta * r_hat;
  J.block<1, 6>(13, 0) = -(n_hat.transpose() * (Dm + p.H_kin * I));
  J(13, 6) = -kSqrt23 * p.H_iso;
  J.block<1, 6>(13, 7) = -(n_hat.transpose() * Dm);

  E.block<6, 6>(0, 0) = -dl * Wn * Dm;
  E.block<6, 6>(7, 0) = -beta * dl * Wr * Dm;
  E.block<1, 6>(13, 0) = n_hat.transpose() * Dm;

  const Eigen::Matrix<double, 14, 6> X = J.partialPivLu().solve(-E);
  const Matrix6d dep = X.block<6, 6>(0, 0);
  const Matrix6d der = X.block<6, 6>(7, 0);
  const Matrix6d Dtan_m = Dm * (I - dep - der);

  // Mandel -> Voigt engineering: scale shear rows and columns by 1/sqrt(2).
  Vector6d s;
  s << 1, 1, 1, 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  return s.asDiagonal() * Dtan_m * s.asDiagonal();
}

double dissipation_increment(const InternalState& s_old, const InternalState& s_new,
                             const SymTensor& sigma, const MaterialParams& p) {
  const SymTensor dep = s_new.eps_p - s_old.eps_p;
  const SymTensor der = s_new.eps_r - s_old.eps_r;
  const double dk = s_new.kappa - s_old.kappa;
  const SymTensor s_p = sigma - p.H_kin * s_new.eps_p;
  return s_p.ddot(dep) - p.H_iso * s_new.kappa * dk + sigma.ddot(der);
}

double dissipation_increment_midpoint(const InternalState& s_old, const InternalState& s_new,
                                      const SymTensor& sigma_old, const SymTensor& sigma_new,
                                      const MaterialParams& p) {
  const SymTensor dep = s_new.eps_p - s_old.eps_p;
  const SymTensor der = s_new.eps_r - s_old.eps_r;
  const double dk = s_new.kappa - s_old.kappa;
  const SymTensor sp_mid =
      0.5 * ((sigma_old - p.H_kin * s_old.eps_p) + (sigma_new - p.H_kin * s_new.eps_p));
  const SymTensor sig_mid = 0.5 * (sigma_old + sigma_new);
  const double kap_mid = 0.5 * (s_old.kappa + s_new.kappa);
  return sp_mid.ddot(dep) - p.H_iso * kap_mid * dk + sig_mid.ddot(der);
}

double free_energy(const SymTensor& eps, const InternalState& s, const MaterialParams& p) {
  const SymTensor eps_e = eps - s.eps_p - s.eps_r;
  const Vector6d sig = mandel_moduli(p) * eps_e.to_mandel();
  return 0.5 * sig.dot(eps_e.to_mandel()) + 0.5 * p.H_kin * s.eps_p.ddot(s.eps_p) +
         0.5 * p.H_iso * s.kappa * s.kappa;
}

SpringResult spring_return_map(double eps, const SpringState& s0, const MaterialParams& p) {
  p.validate();
  if (!std::isfinite(eps))
    throw std::invalid_argument("spring return map: non-finite strain input");

  const double E = p.E;
  const double sig_tr = E * (eps - s0.eps_p - s0.eps_r);
  const double sp_tr = sig_tr - p.H_kin * s0.eps_p;
  const double f_tr = std::abs(sp_tr) - (p.sigma_p + p.H_iso * s0.kappa);

  SpringResult res;
  res.state = s0;
  if (f_tr <= 0.0) {
    res.sigma = sig_tr;
    res.tangent = E;
    return res;
  }

  const double scale = std::max(std::abs(sig_tr), p.sigma_p);
  const double n0 = sp_tr >= 0.0 ? 1.0 : -1.0;
  const double r0 = sig_tr >= 0.0 ? 1.0 : -1.0;

  // The flow directions sign(s^p) and sign(sigma) are constant within the
  // step for a consistent candidate pair, so the update is piecewise linear;
  // enumerate candidates and keep the first self-consistent one.
  for (const double n : {n0, -n0}) {
    for (const double r : {r0, -r0, 0.0}) {
      const double denom = E + p.H_kin + p.H_iso + n * r * p.beta * E;
      if (denom <= 1e-12 * E) continue;
      const double dl = f_tr / denom;
      if (dl <= 0.0) continue;
      const double sig = sig_tr - E * dl * (n + p.beta * r);
      const double sp = sig - p.H_kin * (s0.eps_p + dl * n);
      const bool n_ok = sp * n > 0.0;
      const bool r_ok = (r == 0.0) ? std::abs(sig) <= 1e-12 * scale
                                   : (p.beta == 0.0 || sig * r > 0.0);
      if (!n_ok || !r_ok) continue;

      res.state.eps_p = s0.eps_p + dl * n;
      res.state.kappa = s0.kappa + dl;
      res.state.eps_r = s0.eps_r + p.beta * dl * r;
      res.state.lambda_cum = s0.lambda_cum + dl;
      res.sigma = sig;
      res.dlambda = dl;
      res.plastic = true;
      res.tangent = E * (p.H_kin + p.H_iso) / denom;
      res.state.dissipation_cum =
          s0.dissipation_cum + spring_dissipation_increment(s0, res.state, sig, p);
      return res;
    }
  }

  // Large steps can drive the stress through zero while plastic flow
  // continues; sign(sigma) is then multivalued and the consistent solution
  // slides at sigma = 0 with an intermediate direction r in [-1, 1]. The
  // multiplier follows from consistency alone and r from the zero stress.
  if (p.beta > 0.0 && p.H_kin + p.H_iso > 0.0) {
    for (const double n : {n0, -n0}) {
      const double dl =
          (-p.H_kin * n * s0.eps_p - p.sigma_p - p.H_iso * s0.kappa) / (p.H_kin + p.H_iso);
      if (dl <= 0.0) continue;
      const double r = (sig_tr / (E * dl) - n) / p.beta;
      if (std::abs(r) > 1.0 + 1e-12) continue;
      res.state.eps_p = s0.eps_p + dl * n;
      res.state.kappa = s0.kappa + dl;
      res.state.eps_r = s0.eps_r + p.beta * dl * r;
      res.state.lambda_cum = s0.lambda_cum + dl;
      res.sigma = 0.0;
      res.dlambda = dl;
      res.plastic = true;
      res.tangent = 0.0;
      res.state.dissipation_cum =
          s0.dissipation_cum + spring_dissipation_increment(s0, res.state, 0.0, p);
      return res;
    }
  }
  throw std::runtime_error("spring return map: no consistent flow direction");
}

double spring_dissipation_increment(const SpringState& s_old, const SpringState& s_new,
                                    double sigma, const MaterialParams& p) {
  const double dep = s_new.eps_p - s_old.eps_p;
  const double der = s_new.eps_r - s_old.eps_r;
  const double dk = s_new.kappa - s_old.kappa;
  return (sigma - p.H_kin * s_new.eps_p) * dep - p.H_iso * s_new.kappa * dk + sigma * der;
}

double spring_dissipation_increment_midpoint(const SpringState& s_old, const SpringState& s_new,
                                             double sigma_old, double sigma_new,
                                             const MaterialParams& p) {
  const double dep = s_new.eps_p - s_old.eps_p;
  const double der = s_new.eps_r - s_old.eps_r;
  const double dk = s_new.kappa - s_old.kappa;
  const double sp_mid =
      0.5 * ((sigma_old - p.H_kin * s_old.eps_p) + (sigma_new - p.H_kin * s_new.eps_p));
  return sp_mid * dep - 0.5 * p.H_iso * (s_old.kappa + s_new.kappa) * dk +
         0.5 * (sigma_old + sigma_new) * der;
}

double spring_free_energy(double eps, const SpringState& s, const MaterialParams& p) {
  const double eps_e = eps - s.eps_p - s.eps_r;
  return 0.5 * p.E * eps_e * eps_e + 0.5 * p.H_kin * s.eps_p * s.eps_p +
         0.5 * p.H_iso * s.kappa * s.kappa;
}

}  // namespace cyclofem
