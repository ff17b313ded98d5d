#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "cyclofem/beam.hpp"
#include "support/test_helpers.hpp"

using namespace cyclofem;
namespace ct = cyclofem::testing;

namespace {

MaterialParams soil(double E, double sigma_p, double H_kin) {
  MaterialParams m;
  m.E = E;
  m.nu = 0.0;
  m.sigma_p = sigma_p;
  m.H_kin = H_kin;
  m.beta = 0.01;
  return m;
}

BeamModel monopile_model() {
  BeamModel b;
  b.length = 15.0;
  b.n_elems = 45;
  b.EI = 2.1e8 * annulus_inertia(0.92, 1.0);
  b.layers = {{0.0, 5.0, soil(266.67, 2.0, 1466.7)},
              {5.0, 10.0, soil(1000.0, 2.67, 2666.7)},
              {10.0, 15.0, soil(1333.3, 3.33, 4666.7)}};
  return b;
}

// Erase constrained dofs and solve densely.
Eigen::VectorXd solve_constrained(const Eigen::MatrixXd& K, const Eigen::VectorXd& f,
                                  const std::vector<int>& fixed) {
  const int n = static_cast<int>(K.rows());
  std::vector<int> keep;
  for (int i = 0; i < n; ++i)
    if (std::find(fixed.begin(), fixed.end(), i) == fixed.end()) keep.push_back(i);
  const int m = static_cast<int>(keep.size());
  Eigen::MatrixXd Kr(m, m);
  Eigen::VectorXd fr(m);
  for (int i = 0; i < m; ++i) {
    fr[i] = f[keep[static_cast<std::size_t>(i)]];
    for (int j = 0; j < m; ++j)
      Kr(i, j) = K(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);
  }
  const Eigen::VectorXd ur = Kr.ldlt().solve(fr);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i) u[keep[static_cast<std::size_t>(i)]] = ur[i];
  return u;
}

}  // namespace

TEST_CASE("hollow circular section inertia") {
  CHECK(annulus_inertia(0.92, 1.0) ==
        doctest::Approx(M_PI * (1.0 - std::pow(0.92, 4)) / 4.0).epsilon(1e-15));
  CHECK_THROWS_AS(annulus_inertia(1.0, 0.92), std::invalid_argument);
}

TEST_CASE("model validation catches bad layer tables") {
  BeamModel b = monopile_model();
  CHECK(b.n_dof() == 92);
  b.validate();
  b.layers[1].top = 6.0;  // gap
  CHECK_THROWS_AS(b.validate(), std::invalid_argument);
  b = monopile_model();
  b.layers.pop_back();  // does not reach the toe
  CHECK_THROWS_AS(b.validate(), std::invalid_argument);
  b = monopile_model();
  b.n_elems = 0;
  CHECK_THROWS_AS(b.validate(), std::invalid_argument);
}

TEST_CASE("beam stiffness has rigid modes in its nullspace") {
  const BeamModel b = monopile_model();
  const Eigen::SparseMatrix<double> K = beam_stiffness(b);
  Eigen::VectorXd trans = Eigen::VectorXd::Zero(b.n_dof()), rot = trans;
  for (int i = 0; i < b.n_nodes(); ++i) {
    trans[2 * i] = 1.0;
    rot[2 * i] = b.node_x(i);
    rot[2 * i + 1] = 1.0;
  }
  const double scale = Eigen::MatrixXd(K).cwiseAbs().maxCoeff();
  CHECK((K * trans).cwiseAbs().maxCoeff() <= 1e-12 * scale);
  CHECK((K * rot).cwiseAbs().maxCoeff() <= 1e-9 * scale);
}

TEST_CASE("cantilever tip deflection and stress resultants are nodally exact") {
  BeamModel b = monopile_model();
  b.layers = {{0.0, 15.0, soil(1.0, 1e12, 0.0)}};  // springs made irrelevant
  const double P = 7.0, L = b.length;
  const Eigen::MatrixXd K = Eigen::MatrixXd(beam_stiffness(b));
  Eigen::VectorXd f = Eigen::VectorXd::Zero(b.n_dof());
  f[2 * b.n_elems] = P;  // tip load at x = L
  const Eigen::VectorXd u = solve_constrained(K, f, {0, 1});  // clamp x = 0

  CHECK(u[2 * b.n_elems] == doctest::Approx(P * L * L * L / (3 * b.EI)).epsilon(1e-9));

  // the exact solution is cubic, so the Hermite interpolant is exact pointwise
  const BeamProfile prof = beam_profile(b, u, {0.0, 0.37 * L, L});
  CHECK(prof.moment[0] == doctest::Approx(P * L).epsilon(1e-9));
  CHECK(prof.moment[1] == doctest::Approx(P * (L - 0.37 * L)).epsilon(1e-9));
  CHECK(std::abs(prof.moment[2]) <= 1e-9 * P * L);
  for (double v : prof.shear) CHECK(v == doctest::Approx(-P).epsilon(1e-9));
  const double wx = 0.37 * L;
  CHECK(prof.w[1] == doctest::Approx(P * wx * wx * (3 * L - wx) / (6 * b.EI)).epsilon(1e-9));
}

TEST_CASE("two-element simply supported beam deflects symmetrically") {
  BeamModel b;
  b.length = 2.0;
  b.n_elems = 2;
  b.EI = 11.0;
  b.layers = {{0.0, 2.0, soil(1.0, 1e12, 0.0)}};
  const double P = 3.0;
  const Eigen::MatrixXd K = Eigen::MatrixXd(beam_stiffness(b));
  Eigen::VectorXd f = Eigen::VectorXd::Zero(b.n_dof());
  f[2] = P;  // midspan
  const Eigen::VectorXd u = solve_constrained(K, f, {0, 4});  // pin both ends

  CHECK(u[2] == doctest::Approx(P * 8.0 / (48 * b.EI)).epsilon(1e-12));
  CHECK(u[1] == doctest::Approx(-u[5]).epsilon(1e-12));
  CHECK(std::abs(u[3]) <= 1e-14);
}

TEST_CASE("long uniform foundation matches the semi-infinite closed form") {
  BeamModel b;
  b.length = 150.0;
  b.n_elems = 600;
  b.EI = 2.1e8 * annulus_inertia(0.92, 1.0);
  b.layers = {{0.0, 150.0, soil(266.67, 1e12, 0.0)}};
  const double k = 266.67;
  const double lambda = std::pow(k / (4 * b.EI), 0.25);
  REQUIRE(lambda * b.length > 4.0);  // effectively semi-infinite

  const double P = 100.0;
  Eigen::SparseMatrix<double> K = beam_stiffness(b) + elastic_spring_stiffness(b);
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(K);
  REQUIRE(llt.info() == Eigen::Success);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(b.n_dof());
  f[0] = P;
  const Eigen::VectorXd u = llt.solve(f);

  const double w0_exact = 2 * P * lambda / k;  // free head, point load
  CHECK(u[0] == doctest::Approx(w0_exact).epsilon(0.02));
}

TEST_CASE("springs pick their layer and scale by the tributary length") {
  const BeamModel b = monopile_model();
  CHECK(b.layer_at(0.0).E == doctest::Approx(266.67));
  CHECK(b.layer_at(4.99).E == doctest::Approx(266.67));
  CHECK(b.layer_at(5.0).E == doctest::Approx(1000.0));
  CHECK(b.layer_at(15.0).E == doctest::Approx(1333.3));
  CHECK_THROWS_AS(b.layer_at(15.1), std::invalid_argument);

  Eigen::VectorXd u = Eigen::VectorXd::Zero(b.n_dof());
  u[2 * 1] = 1e-3;    // node 1, top layer, elastic
  u[2 * 20] = 2e-3;   // node 20 at x = 20/3 m, middle layer
  u[2 * 45] = -1e-2;  // toe, bottom layer, past yield
  std::vector<SpringState> s0(static_cast<std::size_t>(b.n_springs()));
  const SpringUpdate su = update_springs(b, u, s0);

  const double trib = 1.0 / 3.0;
  CHECK(su.force[2 * 1] == doctest::Approx(266.67 * 1e-3 * trib).epsilon(1e-12));
  CHECK(su.tangent_diagonal[2 * 1] == doctest::Approx(266.67 * trib).epsilon(1e-12));
  CHECK(su.force[2 * 20] == doctest::Approx(1000.0 * 2e-3 * trib).epsilon(1e-12));
  CHECK(su.force[2 * 2] == 0.0);
  CHECK(su.force[0] == 0.0);  // head node has no spring

  const SpringResult toe = spring_return_map(-1e-2, SpringState{}, b.layer_at(15.0));
  CHECK(toe.plastic);
  CHECK(su.force[2 * 45] == doctest::Approx(toe.sigma * trib).epsilon(1e-12));
  CHECK(su.results[44].plastic);

  // elastic limit slope: force / deflection = E * tributary
  CHECK(su.force[2 * 1] / u[2 * 1] == doctest::Approx(266.67 * trib).epsilon(1e-12));
}
