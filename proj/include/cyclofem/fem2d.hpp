#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "cyclofem/mesh.hpp"
#include "cyclofem/tensor.hpp"

namespace cyclofem {

using SparseMatrix = Eigen::SparseMatrix<double>;

// One Dirichlet constraint: dof = 2*node + component, fixed to `value`.
struct Constraint {
  int node = 0;
  int component = 0;  // 0 = x, 1 = y
  double value = 0.0;
};

// Partition of the 2 * n_nodes displacement dofs into free and constrained.
// free_index[dof] >= 0 gives the compact free index, -1 marks constrained.
struct DofMap2D {
  int n_nodes = 0;
  std::vector<int> free_index;
  std::vector<Constraint> constraints;
  int n_free = 0;

  static DofMap2D build(const Mesh2D& mesh, const std::vector<Constraint>& constraints);

  // Scatter a free-dof vector into the full 2 * n_nodes vector, filling
  // constrained slots with their prescribed values scaled by `load_factor`.
  Eigen::VectorXd expand(const Eigen::VectorXd& u_free, double load_factor = 1.0) const;
};

// Precomputed 2x2 Gauss data of one element; weights include the section
// thickness, so assembled quantities are true forces.
struct ElementQuad {
  std::array<double, 4> wdetJ{};
  std::array<Eigen::Matrix<double, 3, 8>, 4> B{};  // rows: e11, e22, g12
  double area = 0.0;                               // without thickness
};

// Throws when any Gauss point has a nonpositive Jacobian.
std::vector<ElementQuad> precompute_quadrature(const Mesh2D& mesh, double thickness);

// Plane-strain condensation of a 6x6 Voigt tangent: rows/cols (11, 22, 12).
Eigen::Matrix3d plane_strain_moduli(const Matrix6d& D);

// In-plane strain of one element at one Gauss point from full nodal u.
SymTensor strain_at(const Mesh2D& mesh, const std::vector<ElementQuad>& quad,
                    int elem, int gp, const Eigen::VectorXd& u_full);

// K = sum_e sum_g B^T D_g B wdetJ, reduced to free dofs. Symmetric when all
// D_g are; SPD with elastic moduli and rigid modes constrained.
SparseMatrix assemble_stiffness(const Mesh2D& mesh, const DofMap2D& dofs,
                                const std::vector<ElementQuad>& quad,
                                const std::vector<Eigen::Matrix3d>& moduli_per_gp);

// f_int = sum_e sum_g B^T (s11, s22, s12)_g wdetJ on free dofs.
Eigen::VectorXd assemble_internal_force(const Mesh2D& mesh, const DofMap2D& dofs,
                                        const std::vector<ElementQuad>& quad,
                                        const std::vector<SymTensor>& stress_per_gp);

// Consistent nodal loads of per-unit-length line loads on named edge sets
// (thickness already folded into the line load by the caller).
Eigen::VectorXd assemble_external_force(
    const Mesh2D& mesh, const DofMap2D& dofs,
    const std::map<std::string, Eigen::Vector2d>& line_loads);

// Column contribution K_fc * u_c of prescribed values at unit load factor;
// subtract load_factor * this from the rhs when constraints are nonzero.
Eigen::VectorXd constraint_force(const Mesh2D& mesh, const DofMap2D& dofs,
                                 const std::vector<ElementQuad>& quad,
                                 const std::vector<Eigen::Matrix3d>& moduli_per_gp);

}  // namespace cyclofem
