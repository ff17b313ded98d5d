#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "cyclofem/constitutive.hpp"

namespace cyclofem {

// pi (r_o^4 - r_i^4) / 4
double annulus_inertia(double r_inner, double r_outer);

// One soil layer: [top, bottom) depth interval with 1D spring material whose
// E acts as distributed subgrade stiffness (force / deflection / depth).
struct SoilLayer {
  double top = 0.0;
  double bottom = 0.0;
  MaterialParams material;
};

// Euler-Bernoulli beam along depth x in [0, length], 2 dofs per node
// (deflection w, rotation w'), uniform elements, one elastoplastic lateral
// spring at every node except the head (node 0). Spring stiffness = layer E
// times the tributary length (one element length per spring).
struct BeamModel {
  double length = 0.0;
  int n_elems = 0;
  double EI = 0.0;
  std::vector<SoilLayer> layers;

  int n_nodes() const { return n_elems + 1; }
  int n_dof() const { return 2 * n_nodes(); }
  int n_springs() const { return n_elems; }
  double elem_length() const { return length / n_elems; }
  double node_x(int i) const { return length * i / n_elems; }
  double tributary() const { return elem_length(); }

  const MaterialParams& layer_at(double x) const;
  void validate() const;
};

Eigen::SparseMatrix<double> beam_stiffness(const BeamModel& model);

// Diagonal elastic spring stiffness (deflection dofs only), for the linear
// foundation limit and for PGD's constant operator.
Eigen::SparseMatrix<double> elastic_spring_stiffness(const BeamModel& model);

struct SpringUpdate {
  Eigen::VectorXd force;              // internal force contribution, n_dof
  Eigen::VectorXd tangent_diagonal;   // d force / d w per dof, n_dof
  std::vector<SpringResult> results;  // per spring, springs indexed by node-1
};

// Evaluates all springs at the deflections in `u` (full dof layout) from the
// committed states `s0` (size n_springs). Pure; does not commit.
SpringUpdate update_springs(const BeamModel& model, const Eigen::VectorXd& u,
                            const std::vector<SpringState>& s0);

// Deflection, rotation, bending moment (EI w'') and shear (EI w''') at the
// given depths, interpolated with the element Hermite basis.
struct BeamProfile {
  std::vector<double> x, w, theta, moment, shear;
};
BeamProfile beam_profile(const BeamModel& model, const Eigen::VectorXd& u,
                         const std::vector<double>& depths);

}  // namespace cyclofem
