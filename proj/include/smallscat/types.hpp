#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Core>

namespace smallscat {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

inline bool is_finite(const CVec3& v) {
  for (int i = 0; i < 3; ++i)
    if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) return false;
  return true;
}

// Bilinear product (no conjugation); this is the dot product of the moment
// formulas, e.g. B·A in the single-body denominator.
inline cplx bdot(const CVec3& u, const CVec3& v) {
  return u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
}

inline CVec3 bcross(const CVec3& u, const CVec3& v) {
  return CVec3(u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2],
               u[0] * v[1] - u[1] * v[0]);
}

inline CVec3 complexify(const Vec3& v) { return v.cast<cplx>(); }

}  // namespace smallscat
