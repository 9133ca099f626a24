#include "smallscat/fields.hpp"

#include <cmath>
#include <sstream>

#include "smallscat/error.hpp"

namespace smallscat {

FieldSpec FieldSpec::constant(cplx v) {
  FieldSpec f;
  f.value = v;
  return f;
}

FieldSpec FieldSpec::linear(cplx v, const CVec3& gradient) {
  FieldSpec f;
  f.kind = Kind::Linear;
  f.value = v;
  f.gradient = gradient;
  return f;
}

FieldSpec FieldSpec::gaussian(cplx base, cplx amplitude, const Vec3& center, double width) {
  if (!(width > 0.0)) fail(ErrorCode::InvalidArgument, "gaussian width must be > 0");
  FieldSpec f;
  f.kind = Kind::Gaussian;
  f.value = base;
  f.amplitude = amplitude;
  f.center = center;
  f.width = width;
  return f;
}

cplx FieldSpec::operator()(const Vec3& x) const {
  switch (kind) {
    case Kind::Constant:
      return value;
    case Kind::Linear:
      return value + bdot(gradient, complexify(x));
    case Kind::Gaussian:
      return value +
             amplitude * std::exp(-(x - center).squaredNorm() / (2.0 * width * width));
  }
  return value;
}

ComplexField FieldSpec::function() const {
  return [f = *this](const Vec3& x) { return f(x); };
}

std::string FieldSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::Constant:
      os << "constant(" << value << ")";
      break;
    case Kind::Linear:
      os << "linear(" << value << "; " << gradient[0] << ", " << gradient[1] << ", "
         << gradient[2] << ")";
      break;
    case Kind::Gaussian:
      os << "gaussian(" << value << "; " << amplitude << "; " << center[0] << ", " << center[1]
         << ", " << center[2] << "; " << width << ")";
      break;
  }
  return os.str();
}

}  // namespace smallscat
