#include "cyclofem/fem2d.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cyclofem {

namespace {

struct GaussPoint {
  double xi, eta;
};

std::array<GaussPoint, 4> gauss_points() {
  const double g = 1.0 / std::sqrt(3.0);
  return {GaussPoint{-g, -g}, {g, -g}, {g, g}, {-g, g}};
}

}  // namespace

DofMap2D DofMap2D::build(const Mesh2D& mesh, const std::vector<Constraint>& constraints) {
  DofMap2D d;
  d.n_nodes = mesh.node_count();
  d.constraints = constraints;
  d.free_index.assign(static_cast<std::size_t>(2 * d.n_nodes), 0);
  std::set<int> fixed;
  for (const auto& c : constraints) {
    if (c.node < 0 || c.node >= d.n_nodes)
      throw std::invalid_argument("dof map: constraint references node " + std::to_string(c.node));
    if (c.component != 0 && c.component != 1)
      throw std::invalid_argument("dof map: component must be 0 or 1");
    if (!fixed.insert(2 * c.node + c.component).second)
      throw std::invalid_argument("dof map: duplicate constraint on node " +
                                  std::to_string(c.node));
  }
  int next = 0;
  for (int dof = 0; dof < 2 * d.n_nodes; ++dof)
    d.free_index[static_cast<std::size_t>(dof)] = fixed.count(dof) ? -1 : next++;
  d.n_free = next;
  return d;
}

Eigen::VectorXd DofMap2D::expand(const Eigen::VectorXd& u_free, double load_factor) const {
  if (u_free.size() != n_free) throw std::invalid_argument("dof map: free vector size mismatch");
  Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * n_nodes);
  for (int dof = 0; dof < 2 * n_nodes; ++dof) {
    const int k = free_index[static_cast<std::size_t>(dof)];
    if (k >= 0) u[dof] = u_free[k];
  }
  for (const auto& c : constraints) u[2 * c.node + c.component] = load_factor * c.value;
  return u;
}

std::vector<ElementQuad> precompute_quadrature(const Mesh2D& mesh, double thickness) {
  if (!(thickness > 0)) throw std::invalid_argument("quadrature: thickness must be > 0");
  mesh.validate();
  std::vector<ElementQuad> out(mesh.elements.size());
  const auto gps = gauss_points();
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& conn = mesh.elements[e];
    for (int g = 0; g < 4; ++g) {
      const double xi = gps[static_cast<std::size_t>(g)].xi;
      const double eta = gps[static_cast<std::size_t>(g)].eta;
      const double dN_dxi[4] = {-(1 - eta) / 4, (1 - eta) / 4, (1 + eta) / 4, -(1 + eta) / 4};
      const double dN_deta[4] = {-(1 - xi) / 4, -(1 + xi) / 4, (1 + xi) / 4, (1 - xi) / 4};
      Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
      for (int a = 0; a < 4; ++a) {
        const auto& x = mesh.nodes[static_cast<std::size_t>(conn[static_cast<std::size_t>(a)])];
        J(0, 0) += dN_dxi[a] * x[0];
        J(0, 1) += dN_dxi[a] * x[1];
        J(1, 0) += dN_deta[a] * x[0];
        J(1, 1) += dN_deta[a] * x[1];
      }
      const double det = J.determinant();
      if (det <= 0) {
        std::ostringstream msg;
        msg << "quadrature: element " << e << " Gauss point " << g << " has detJ = " << det;
        throw std::invalid_argument(msg.str());
      }
      const Eigen::Matrix2d Jinv = J.inverse();
      Eigen::Matrix<double, 3, 8> B = Eigen::Matrix<double, 3, 8>::Zero();
      for (int a = 0; a < 4; ++a) {
        const double dN_dx = Jinv(0, 0) * dN_dxi[a] + Jinv(0, 1) * dN_deta[a];
        const double dN_dy = Jinv(1, 0) * dN_dxi[a] + Jinv(1, 1) * dN_deta[a];
        B(0, 2 * a) = dN_dx;
        B(1, 2 * a + 1) = dN_dy;
        B(2, 2 * a) = dN_dy;
        B(2, 2 * a + 1) = dN_dx;
      }
      out[e].B[static_cast<std::size_t>(g)] = B;
      out[e].wdetJ[static_cast<std::size_t>(g)] = det * thickness;  // unit Gauss weights
      out[e].area += det;
    }
  }
  return out;
}

Eigen::Matrix3d plane_strain_moduli(const Matrix6d& D) {
  Eigen::Matrix3d d;
  const int idx[3] = {0, 1, 3};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) d(i, j) = D(idx[i], idx[j]);
  return d;
}

SymTensor strain_at(const Mesh2D& mesh, const std::vector<ElementQuad>& quad,
                    int elem, int gp, const Eigen::VectorXd& u_full) {
  const auto& conn = mesh.elements[static_cast<std::size_t>(elem)];
  Eigen::Matrix<double, 8, 1> ue;
  for (int a = 0; a < 4; ++a) {
    ue[2 * a] = u_full[2 * conn[static_cast<std::size_t>(a)]];
    ue[2 * a + 1] = u_full[2 * conn[static_cast<std::size_t>(a)] + 1];
  }
  const Eigen::Vector3d e = quad[static_cast<std::size_t>(elem)].B[static_cast<std::size_t>(gp)] * ue;
  return {e[0], e[1], 0.0, 0.5 * e[2], 0.0, 0.0};  // tensor shear from engineering g12
}

namespace {

// Shared K assembly; `rhs` collects -K_fc u_c when constraints are nonzero.
SparseMatrix assemble_k(const Mesh2D& mesh, const DofMap2D& dofs,
                        const std::vector<ElementQuad>& quad,
                        const std::vector<Eigen::Matrix3d>& moduli, Eigen::VectorXd* kfc_uc) {
  if (moduli.size() != 4 * mesh.elements.size())
    throw std::invalid_argument("assembly: need one moduli matrix per Gauss point");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(64 * mesh.elements.size());
  if (kfc_uc) *kfc_uc = Eigen::VectorXd::Zero(dofs.n_free);
  Eigen::VectorXd uc;
  if (kfc_uc) {
    uc = Eigen::VectorXd::Zero(2 * dofs.n_nodes);
    for (const auto& c : dofs.constraints) uc[2 * c.node + c.component] = c.value;
  }
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& conn = mesh.elements[e];
    Eigen::Matrix<double, 8, 8> ke = Eigen::Matrix<double, 8, 8>::Zero();
    for (int g = 0; g < 4; ++g) {
      const auto& B = quad[e].B[static_cast<std::size_t>(g)];
      ke += quad[e].wdetJ[static_cast<std::size_t>(g)] * B.transpose() *
            moduli[4 * e + static_cast<std::size_t>(g)] * B;
    }
    int gdof[8];
    for (int a = 0; a < 4; ++a) {
      gdof[2 * a] = 2 * conn[static_cast<std::size_t>(a)];
      gdof[2 * a + 1] = 2 * conn[static_cast<std::size_t>(a)] + 1;
    }
    for (int i = 0; i < 8; ++i) {
      const int fi = dofs.free_index[static_cast<std::size_t>(gdof[i])];
      if (fi < 0) continue;
      for (int j = 0; j < 8; ++j) {
        const int fj = dofs.free_index[static_cast<std::size_t>(gdof[j])];
        if (fj >= 0)
          trip.emplace_back(fi, fj, ke(i, j));
        else if (kfc_uc)
          (*kfc_uc)[fi] += ke(i, j) * uc[gdof[j]];
      }
    }
  }
  SparseMatrix K(dofs.n_free, dofs.n_free);
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

}  // namespace

SparseMatrix assemble_stiffness(const Mesh2D& mesh, const DofMap2D& dofs,
                                const std::vector<ElementQuad>& quad,
                                const std::vector<Eigen::Matrix3d>& moduli_per_gp) {
  return assemble_k(mesh, dofs, quad, moduli_per_gp, nullptr);
}

Eigen::VectorXd constraint_force(const Mesh2D& mesh, const DofMap2D& dofs,
                                 const std::vector<ElementQuad>& quad,
                                 const std::vector<Eigen::Matrix3d>& moduli_per_gp) {
  Eigen::VectorXd kfc_uc;
  assemble_k(mesh, dofs, quad, moduli_per_gp, &kfc_uc);
  return kfc_uc;
}

Eigen::VectorXd assemble_internal_force(const Mesh2D& mesh, const DofMap2D& dofs,
                                        const std::vector<ElementQuad>& quad,
                                        const std::vector<SymTensor>& stress_per_gp) {
  if (stress_per_gp.size() != 4 * mesh.elements.size())
    throw std::invalid_argument("assembly: need one stress per Gauss point");
  Eigen::VectorXd f = Eigen::VectorXd::Zero(dofs.n_free);
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& conn = mesh.elements[e];
    Eigen::Matrix<double, 8, 1> fe = Eigen::Matrix<double, 8, 1>::Zero();
    for (int g = 0; g < 4; ++g) {
      const SymTensor& s = stress_per_gp[4 * e + static_cast<std::size_t>(g)];
      const Eigen::Vector3d sv(s[0], s[1], s[3]);
      fe += quad[e].wdetJ[static_cast<std::size_t>(g)] *
            quad[e].B[static_cast<std::size_t>(g)].transpose() * sv;
    }
    for (int a = 0; a < 4; ++a)
      for (int comp = 0; comp < 2; ++comp) {
        const int fi = dofs.free_index[static_cast<std::size_t>(
            2 * conn[static_cast<std::size_t>(a)] + comp)];
        if (fi >= 0) f[fi] += fe[2 * a + comp];
      }
  }
  return f;
}

Eigen::VectorXd assemble_external_force(
    const Mesh2D& mesh, const DofMap2D& dofs,
    const std::map<std::string, Eigen::Vector2d>& line_loads) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(dofs.n_free);
  for (const auto& [set_name, q] : line_loads) {
    const auto it = mesh.edge_sets.find(set_name);
    if (it == mesh.edge_sets.end())
      throw std::invalid_argument("external force: unknown edge set '" + set_name + "'");
    for (const auto& edge : it->second) {
      const auto& xa = mesh.nodes[static_cast<std::size_t>(edge[0])];
      const auto& xb = mesh.nodes[static_cast<std::size_t>(edge[1])];
      const double len = std::hypot(xb[0] - xa[0], xb[1] - xa[1]);
      for (int end = 0; end < 2; ++end)
        for (int comp = 0; comp < 2; ++comp) {
          const int fi = dofs.free_index[static_cast<std::size_t>(
              2 * edge[static_cast<std::size_t>(end)] + comp)];
          if (fi >= 0) f[fi] += 0.5 * len * q[comp];
        }
    }
  }
  return f;
}

}  // namespace cyclofem
