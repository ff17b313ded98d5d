#include <doctest.h>

#include <random>

#include "cyclofem/constitutive.hpp"
#include "cyclofem/tensor.hpp"
#include "support/test_helpers.hpp"

using namespace cyclofem;

TEST_CASE("norm splits into deviatoric and volumetric parts") {
  std::mt19937 rng(42);
  for (int k = 0; k < 200; ++k) {
    const SymTensor t = testing::random_strain(rng, 1.0);
    const SymTensor d = t.deviator();
    const double lhs = t.ddot(t);
    const double rhs = d.ddot(d) + t.trace() * t.trace() / 3.0;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
    CHECK(std::abs(d.trace()) <= 1e-13 * std::max(1.0, t.norm()));
  }
}

TEST_CASE("contraction counts off-diagonal components twice") {
  const SymTensor t(1.0, 2.0, 3.0, 4.0, 5.0, 6.0);
  CHECK(t.ddot(t) == doctest::Approx(1 + 4 + 9 + 2 * (16 + 25 + 36)));
}

TEST_CASE("mandel map preserves the contraction") {
  std::mt19937 rng(7);
  for (int k = 0; k < 50; ++k) {
    const SymTensor a = testing::random_strain(rng, 2.0);
    const SymTensor b = testing::random_strain(rng, 2.0);
    CHECK(a.to_mandel().dot(b.to_mandel()) == doctest::Approx(a.ddot(b)).epsilon(1e-13));
    const SymTensor back = SymTensor::from_mandel(a.to_mandel());
    for (int i = 0; i < 6; ++i) CHECK(back[i] == doctest::Approx(a[i]).epsilon(1e-15));
  }
}

TEST_CASE("elastic moduli reproduce the plane-strain closed form") {
  MaterialParams p = testing::plate_material();
  const Matrix6d D = elastic_moduli(p);
  const double expect = p.E * (1 - p.nu) / ((1 + p.nu) * (1 - 2 * p.nu));
  CHECK(D(0, 0) == doctest::Approx(expect).epsilon(1e-13));
  CHECK(D(0, 0) == doctest::Approx(275.9615384615).epsilon(1e-10));
  CHECK(D(0, 1) == doctest::Approx(p.E * p.nu / ((1 + p.nu) * (1 - 2 * p.nu))));
  CHECK(D(3, 3) == doctest::Approx(p.mu()));  // engineering shear
  CHECK((D - D.transpose()).norm() == doctest::Approx(0.0));
}

TEST_CASE("material parameter validation rejects bad input") {
  MaterialParams p = testing::plate_material();
  p.nu = 0.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = testing::plate_material();
  p.sigma_p = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = testing::plate_material();
  p.beta = 1.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = testing::plate_material();
  p.H_iso = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
