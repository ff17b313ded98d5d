#pragma once

#include <stdexcept>

#include "cyclofem/tensor.hpp"

namespace cyclofem {

// Small-strain elastoplasticity with combined isotropic/kinematic hardening
// and an additional ratcheting strain driven by the stress deviator direction.
// The ratcheting intensity is controlled by beta in [0, 1]; beta = 0 recovers
// the classical J2 model.
struct MaterialParams {
  double E = 0.0;        // Young's modulus
  double nu = 0.0;       // Poisson ratio, -1 < nu < 0.5
  double sigma_p = 0.0;  // initial yield strength, > 0
  double H_iso = 0.0;    // isotropic hardening modulus, >= 0
  double H_kin = 0.0;    // kinematic hardening modulus, >= 0
  double beta = 0.0;     // ratcheting intensity, 0 <= beta <= 1

  double mu() const { return E / (2.0 * (1.0 + nu)); }
  double lame_lambda() const { return E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)); }

  void validate() const;
};

// Elastic stiffness, Voigt engineering convention: maps
// (e11, e22, e33, g12, g13, g23) with g = 2 e to (s11, s22, s33, s12, s13, s23).
Matrix6d elastic_moduli(const MaterialParams& p);

// Internal variables of one material point. eps_p and eps_r are trace-free.
struct InternalState {
  SymTensor eps_p;              // plastic strain
  double kappa = 0.0;           // accumulated plastic strain measure
  SymTensor eps_r;              // ratcheting strain
  double lambda_cum = 0.0;      // cumulative plastic multiplier
  double dissipation_cum = 0.0; // cumulative dissipation, nondecreasing

  void validate() const;
};

struct ReturnMapOptions {
  // Ratcheting flow direction taken at the end-of-step stress (fully
  // implicit). The frozen-trial-direction variant is kept for debugging.
  bool implicit_ratchet_direction = true;
  int max_iter = 50;
  double tol_rel = 1e-10;  // on |f| relative to sigma_p
};

struct StressResult {
  SymTensor sigma;
  InternalState state;
  double dlambda = 0.0;
  bool plastic = false;
  bool ratchet_active = false;  // false when the deviatoric stress vanished
  int iterations = 0;
};

// Fully implicit backward-Euler step: given the total strain at the end of
// the step and the previous internal state, returns stress and updated state.
StressResult return_map(const SymTensor& eps, const InternalState& s0,
                        const MaterialParams& p, const ReturnMapOptions& opt = {});

// Algorithmic tangent d sigma / d eps (Voigt engineering convention),
// obtained by exact linearization of the discrete return-map equations.
Matrix6d consistent_tangent(const StressResult& res, const MaterialParams& p,
                            const ReturnMapOptions& opt = {});

// Dissipation of one converged step from the generalized stresses at the end
// of the step. Non-negative; equals (sqrt(2/3) sigma_p + beta |dev sigma|) *
// dlambda at plastic steps.
double dissipation_increment(const InternalState& s_old, const InternalState& s_new,
                             const SymTensor& sigma, const MaterialParams& p);

// Trapezoidal (midpoint generalized stress) variant. Complements the
// trapezoidal external-work tally exactly, so the per-cycle energy balance
// closes to solver tolerance; used by the solvers' energy ledger.
double dissipation_increment_midpoint(const InternalState& s_old, const InternalState& s_new,
                                      const SymTensor& sigma_old, const SymTensor& sigma_new,
                                      const MaterialParams& p);

// Scalar specialization used for nonlinear foundation springs: strain is the
// spring elongation, stress the spring reaction per unit tributary length.
// Yield f = |sigma - H_kin eps_p| - (sigma_p + H_iso kappa); the ratcheting
// rate is beta * lambda_dot * sign(sigma).
struct SpringState {
  double eps_p = 0.0;
  double kappa = 0.0;
  double eps_r = 0.0;
  double lambda_cum = 0.0;
  double dissipation_cum = 0.0;
};

struct SpringResult {
  double sigma = 0.0;
  SpringState state;
  double dlambda = 0.0;
  double tangent = 0.0;  // d sigma / d eps
  bool plastic = false;
};

SpringResult spring_return_map(double eps, const SpringState& s0, const MaterialParams& p);

double spring_dissipation_increment(const SpringState& s_old, const SpringState& s_new,
                                    double sigma, const MaterialParams& p);

double spring_dissipation_increment_midpoint(const SpringState& s_old, const SpringState& s_new,
                                             double sigma_old, double sigma_new,
                                             const MaterialParams& p);

// Helmholtz free energy densities of the committed state.
double free_energy(const SymTensor& eps, const InternalState& s, const MaterialParams& p);
double spring_free_energy(double eps, const SpringState& s, const MaterialParams& p);

}  // namespace cyclofem
