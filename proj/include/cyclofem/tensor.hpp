#pragma once

#include <array>
#include <cmath>

#include <Eigen/Dense>

namespace cyclofem {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

// Symmetric second-order tensor, components ordered (11, 22, 33, 12, 13, 23).
// Off-diagonal components are stored unscaled; engineering (doubled) shear
// factors appear only at the B/D-matrix boundary of the FE assembly.
struct SymTensor {
  std::array<double, 6> c{};

  SymTensor() = default;
  SymTensor(double c11, double c22, double c33, double c12, double c13, double c23)
      : c{c11, c22, c33, c12, c13, c23} {}

  double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

  double trace() const { return c[0] + c[1] + c[2]; }

  SymTensor deviator() const {
    const double m = trace() / 3.0;
    return {c[0] - m, c[1] - m, c[2] - m, c[3], c[4], c[5]};
  }

  // Full contraction a:b; off-diagonal pairs count twice.
  double ddot(const SymTensor& o) const {
    return c[0] * o.c[0] + c[1] * o.c[1] + c[2] * o.c[2] +
           2.0 * (c[3] * o.c[3] + c[4] * o.c[4] + c[5] * o.c[5]);
  }

  double norm() const { return std::sqrt(ddot(*this)); }

  bool is_finite() const {
    for (double v : c)
      if (!std::isfinite(v)) return false;
    return true;
  }

  SymTensor operator+(const SymTensor& o) const {
    return {c[0] + o.c[0], c[1] + o.c[1], c[2] + o.c[2],
            c[3] + o.c[3], c[4] + o.c[4], c[5] + o.c[5]};
  }
  SymTensor operator-(const SymTensor& o) const {
    return {c[0] - o.c[0], c[1] - o.c[1], c[2] - o.c[2],
            c[3] - o.c[3], c[4] - o.c[4], c[5] - o.c[5]};
  }
  SymTensor operator*(double s) const {
    return {c[0] * s, c[1] * s, c[2] * s, c[3] * s, c[4] * s, c[5] * s};
  }
  SymTensor& operator+=(const SymTensor& o) {
    for (int i = 0; i < 6; ++i) c[static_cast<std::size_t>(i)] += o.c[static_cast<std::size_t>(i)];
    return *this;
  }

  // Orthonormal (Mandel) vector: shear slots scaled by sqrt(2) so that the
  // Euclidean dot product equals the tensor contraction.
  Vector6d to_mandel() const {
    const double s = std::sqrt(2.0);
    Vector6d m;
    m << c[0], c[1], c[2], s * c[3], s * c[4], s * c[5];
    return m;
  }
  static SymTensor from_mandel(const Vector6d& m) {
    const double s = 1.0 / std::sqrt(2.0);
    return {m[0], m[1], m[2], s * m[3], s * m[4], s * m[5]};
  }
};

inline SymTensor operator*(double s, const SymTensor& t) { return t * s; }

}  // namespace cyclofem
