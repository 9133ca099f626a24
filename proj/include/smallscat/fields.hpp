#pragma once

#include <functional>
#include <string>
#include <vector>

#include "smallscat/types.hpp"

namespace smallscat {

/// Scalar field over space. Densities use only the real part.
using ComplexField = std::function<cplx(const Vec3&)>;

/// Named built-in fields used by configuration files:
///   constant: value
///   linear:   value + gradient . x
///   gaussian: value + amplitude exp(-|x - center|^2 / (2 width^2))
struct FieldSpec {
  enum class Kind { Constant, Linear, Gaussian };
  Kind kind = Kind::Constant;
  cplx value{0.0};
  CVec3 gradient = CVec3::Zero();
  cplx amplitude{0.0};
  Vec3 center = Vec3::Zero();
  double width = 1.0;

  static FieldSpec constant(cplx v);
  static FieldSpec linear(cplx v, const CVec3& gradient);
  static FieldSpec gaussian(cplx base, cplx amplitude, const Vec3& center, double width);

  cplx operator()(const Vec3& x) const;
  ComplexField function() const;
  std::string describe() const;
};

}  // namespace smallscat
