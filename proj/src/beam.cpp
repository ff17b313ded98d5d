#include "cyclofem/beam.hpp"

#include <cmath>
#include <stdexcept>

namespace cyclofem {

double annulus_inertia(double r_inner, double r_outer) {
  if (!(r_outer > r_inner) || !(r_inner >= 0))
    throw std::invalid_argument("annulus inertia: need 0 <= r_inner < r_outer");
  return M_PI * (std::pow(r_outer, 4) - std::pow(r_inner, 4)) / 4.0;
}

const MaterialParams& BeamModel::layer_at(double x) const {
  for (const auto& l : layers)
    if (x >= l.top && (x < l.bottom || (&l == &layers.back() && x <= l.bottom))) return l.material;
  throw std::invalid_argument("beam: depth " + std::to_string(x) + " outside all layers");
}

void BeamModel::validate() const {
  if (!(length > 0)) throw std::invalid_argument("beam: length must be > 0");
  if (n_elems < 1) throw std::invalid_argument("beam: need at least one element");
  if (!(EI > 0)) throw std::invalid_argument("beam: EI must be > 0");
  if (layers.empty()) throw std::invalid_argument("beam: no soil layers");
  double x = 0.0;
  for (const auto& l : layers) {
    if (std::abs(l.top - x) > 1e-12 * length)
      throw std::invalid_argument("beam: soil layers must partition the depth without gaps");
    if (!(l.bottom > l.top)) throw std::invalid_argument("beam: empty soil layer");
    l.material.validate();
    x = l.bottom;
  }
  if (std::abs(x - length) > 1e-12 * length)
    throw std::invalid_argument("beam: soil layers must cover the full depth");
}

Eigen::SparseMatrix<double> beam_stiffness(const BeamModel& model) {
  model.validate();
  const double L = model.elem_length();
  const double c = model.EI / (L * L * L);
  Eigen::Matrix4d ke;
  ke << 12, 6 * L, -12, 6 * L,
        6 * L, 4 * L * L, -6 * L, 2 * L * L,
        -12, -6 * L, 12, -6 * L,
        6 * L, 2 * L * L, -6 * L, 4 * L * L;
  ke *= c;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(16 * model.n_elems));
  for (int e = 0; e < model.n_elems; ++e)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        trip.emplace_back(2 * e + i, 2 * e + j, ke(i, j));
  Eigen::SparseMatrix<double> K(model.n_dof(), model.n_dof());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

Eigen::SparseMatrix<double> elastic_spring_stiffness(const BeamModel& model) {
  model.validate();
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 1; i < model.n_nodes(); ++i) {
    const double k = model.layer_at(model.node_x(i)).E * model.tributary();
    trip.emplace_back(2 * i, 2 * i, k);
  }
  Eigen::SparseMatrix<double> K(model.n_dof(), model.n_dof());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

SpringUpdate update_springs(const BeamModel& model, const Eigen::VectorXd& u,
                            const std::vector<SpringState>& s0) {
  if (u.size() != model.n_dof()) throw std::invalid_argument("springs: dof vector size mismatch");
  if (static_cast<int>(s0.size()) != model.n_springs())
    throw std::invalid_argument("springs: state vector size mismatch");
  SpringUpdate out;
  out.force = Eigen::VectorXd::Zero(model.n_dof());
  out.tangent_diagonal = Eigen::VectorXd::Zero(model.n_dof());
  out.results.resize(s0.size());
  const double trib = model.tributary();
  for (int i = 1; i < model.n_nodes(); ++i) {
    const MaterialParams& mat = model.layer_at(model.node_x(i));
    const SpringResult r = spring_return_map(u[2 * i], s0[static_cast<std::size_t>(i - 1)], mat);
    out.force[2 * i] = r.sigma * trib;
    out.tangent_diagonal[2 * i] = r.tangent * trib;
    out.results[static_cast<std::size_t>(i - 1)] = r;
  }
  return out;
}

BeamProfile beam_profile(const BeamModel& model, const Eigen::VectorXd& u,
                         const std::vector<double>& depths) {
  if (u.size() != model.n_dof()) throw std::invalid_argument("profile: dof vector size mismatch");
  const double L = model.elem_length();
  BeamProfile p;
  for (double x : depths) {
    if (x < 0 || x > model.length)
      throw std::out_of_range("profile: depth outside the beam");
    int e = std::min(static_cast<int>(x / L), model.n_elems - 1);
    const double s = (x - model.node_x(e)) / L;  // local coordinate in [0, 1]
    const double w1 = u[2 * e], t1 = u[2 * e + 1], w2 = u[2 * e + 2], t2 = u[2 * e + 3];
    // Hermite basis on [0,1] with physical rotation dofs (chain rule in L)
    const double h1 = 1 - 3 * s * s + 2 * s * s * s;
    const double h2 = L * (s - 2 * s * s + s * s * s);
    const double h3 = 3 * s * s - 2 * s * s * s;
    const double h4 = L * (-s * s + s * s * s);
    const double d2h1 = (-6 + 12 * s) / (L * L);
    const double d2h2 = (-4 + 6 * s) / L;
    const double d2h3 = (6 - 12 * s) / (L * L);
    const double d2h4 = (-2 + 6 * s) / L;
    const double d3h1 = 12 / (L * L * L);
    const double d3h2 = 6 / (L * L);
    const double d3h3 = -12 / (L * L * L);
    const double d3h4 = 6 / (L * L);
    const double dh1 = (-6 * s + 6 * s * s) / L;
    const double dh2 = 1 - 4 * s + 3 * s * s;
    const double dh3 = (6 * s - 6 * s * s) / L;
    const double dh4 = -2 * s + 3 * s * s;
    p.x.push_back(x);
    p.w.push_back(h1 * w1 + h2 * t1 + h3 * w2 + h4 * t2);
    p.theta.push_back(dh1 * w1 + dh2 * t1 + dh3 * w2 + dh4 * t2);
    p.moment.push_back(model.EI * (d2h1 * w1 + d2h2 * t1 + d2h3 * w2 + d2h4 * t2));
    p.shear.push_back(model.EI * (d3h1 * w1 + d3h2 * t1 + d3h3 * w2 + d3h4 * t2));
  }
  return p;
}

}  // namespace cyclofem
