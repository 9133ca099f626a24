#include "smallscat/profile.hpp"

#include <cmath>
#include <vector>

#include "smallscat/error.hpp"
#include "smallscat/quadrature.hpp"

namespace smallscat {

ShapeFunction ShapeFunction::unit() { return ShapeFunction{}; }

ShapeFunction ShapeFunction::custom(std::function<double(double)> h,
                                    std::function<double(double)> dh) {
  if (!h) fail(ErrorCode::InvalidArgument, "shape function h must be callable");
  ShapeFunction s;
  s.unit_ = false;
  s.h_ = std::make_shared<const std::function<double(double)>>(std::move(h));
  s.dh_ = std::move(dh);
  return s;
}

double ShapeFunction::value(double t) const { return unit_ ? 1.0 : (*h_)(t); }

double ShapeFunction::envelope_derivative(double t, double fd_step) const {
  if (unit_) return -2.0 * (1.0 - t);
  if (dh_) return -2.0 * (1.0 - t) * (*h_)(t) + (1.0 - t) * (1.0 - t) * dh_(t);
  const double d = fd_step;
  if (t - d < 0.0) {
    return (-3.0 * envelope(t) + 4.0 * envelope(t + d) - envelope(t + 2 * d)) / (2 * d);
  }
  if (t + d > 1.0) {
    return (3.0 * envelope(t) - 4.0 * envelope(t - d) + envelope(t - 2 * d)) / (2 * d);
  }
  return (envelope(t + d) - envelope(t - d)) / (2 * d);
}

double ShapeFunction::gap_envelope_derivative(double s, double fd_step) const {
  if (unit_) return -2.0 * s;
  if (dh_) return -2.0 * s * (*h_)(1.0 - s) + s * s * dh_(1.0 - s);
  return envelope_derivative(1.0 - s, fd_step);
}

RadialProfile::RadialProfile(cplx gamma, double kappa, double radius, ShapeFunction shape)
    : gamma_(gamma), kappa_(kappa), radius_(radius), shape_(std::move(shape)) {
  if (!std::isfinite(gamma.real()) || !std::isfinite(gamma.imag()))
    fail(ErrorCode::InvalidArgument, "gamma must be finite");
  if (gamma.imag() < 0.0)
    fail(ErrorCode::InvalidArgument, "Im(gamma) must be >= 0");
  if (!(kappa > 0.0 && kappa < 3.0))
    fail(ErrorCode::InvalidArgument, "kappa must lie in (0, 3)");
  if (!(radius > 0.0) || !std::isfinite(radius))
    fail(ErrorCode::InvalidArgument, "radius must be > 0");
}

RadialProfile RadialProfile::with_gamma(cplx gamma) const {
  return RadialProfile(gamma, kappa_, radius_, shape_);
}

RadialProfile RadialProfile::with_radius(double radius) const {
  return RadialProfile(gamma_, kappa_, radius, shape_);
}

cplx RadialProfile::amplitude() const {
  return gamma_ / (4.0 * kPi * std::pow(radius_, kappa_));
}

cplx RadialProfile::p(double r) const {
  const double t = r / radius_;
  if (t > 1.0) return 0.0;
  return amplitude() * shape_.envelope(t);
}

cplx RadialProfile::dp_dr(double r) const {
  const double t = r / radius_;
  if (t > 1.0) return 0.0;
  return amplitude() * shape_.envelope_derivative(t) / radius_;
}

cplx RadialProfile::q_radial(double r, double k) const {
  if (r > radius_) return 0.0;
  const cplx den = k * k + p(r);
  if (std::abs(den) < 1e-14)
    fail(ErrorCode::SingularDenominator, "k^2 + p(r) vanishes inside the particle");
  return dp_dr(r) / den;
}

double RadialProfile::shape_moment() const {
  if (shape_.is_unit()) return 1.0 / 30.0;
  const auto res = integrate(
      [this](double t) { return cplx(shape_.envelope(t) * t * t); }, 0.0, 1.0, 1e-12);
  return res.value.real();
}

cplx p_eval(const RadialProfile& prof, double r) {
  if (r < 0.0) fail(ErrorCode::InvalidArgument, "r must be >= 0");
  return prof.p(r);
}

CVec3 q_eval(const RadialProfile& prof, const Vec3& y, const Vec3& center, double k) {
  const Vec3 d = y - center;
  const double r = d.norm();
  if (r == 0.0 || r > prof.radius()) return CVec3::Zero();
  return prof.q_radial(r, k) * complexify(d / r);
}

cplx j_total(const RadialProfile& prof, JMethod method) {
  const double a = prof.radius();
  if (method == JMethod::ClosedForm) {
    if (!prof.shape().is_unit())
      fail(ErrorCode::MethodMismatch, "closed-form j requires h = 1");
    return prof.gamma() / 30.0 * std::pow(a, 3.0 - prof.kappa());
  }
  const auto res = integrate([&](double t) { return t * t * prof.p(a * t); }, 0.0, 1.0, 1e-12);
  return 4.0 * kPi * a * a * a * res.value;
}

namespace {

// Breakpoints clustering toward t = 1, where nu + S(t) changes on the scale
// sqrt(nu / |gamma|).
std::vector<double> boundary_layer_breaks(double nu, cplx gamma) {
  std::vector<double> pts;
  if (std::abs(gamma) == 0.0) return pts;
  const double w = std::sqrt(nu / std::abs(gamma));
  for (double f : {1e-1, 1.0, 1e1, 1e2, 1e3}) {
    const double s = f * w;
    if (s > 0.0 && s < 1.0) pts.push_back(s);
  }
  return pts;
}

double nu_of(const RadialProfile& prof, double k) {
  return 4.0 * kPi * k * k * std::pow(prof.radius(), prof.kappa());
}

// Scans nu + S(t) on a fine grid including both ends; a zero there makes the
// integrand non-integrable and the adaptive scheme would only grind.
void check_denominator(const RadialProfile& prof, double nu, double scale) {
  const ShapeFunction& shape = prof.shape();
  constexpr int kSamples = 2048;
  for (int i = 0; i <= kSamples; ++i) {
    const double t = static_cast<double>(i) / kSamples;
    if (std::abs(nu + prof.gamma() * shape.gap_envelope(t)) < 1e-14 * scale)
      fail(ErrorCode::SingularDenominator, "k^2 + p vanishes inside the ball");
  }
}

}  // namespace

cplx I_of_a(const RadialProfile& prof, double k) {
  const cplx gamma = prof.gamma();
  if (gamma == cplx(0.0)) return 0.0;
  const double nu = nu_of(prof, k);
  const double scale = 4.0 * kPi * std::pow(prof.radius(), prof.kappa());
  const ShapeFunction& shape = prof.shape();
  check_denominator(prof, nu, scale);
  // Integrated in s = 1 - t.
  auto integrand = [&](double s) -> cplx {
    const double t = 1.0 - s;
    const cplx den = nu + gamma * shape.gap_envelope(s);
    if (std::abs(den) < 1e-14 * scale)
      fail(ErrorCode::SingularDenominator, "k^2 + p vanishes at a quadrature node");
    return t * t * t * gamma * shape.gap_envelope_derivative(s) / den;
  };
  const auto breaks = boundary_layer_breaks(nu, gamma);
  return integrate(integrand, 0.0, 1.0, 1e-12, breaks).value;
}

cplx I_of_a_by_parts(const RadialProfile& prof, double k) {
  const cplx gamma = prof.gamma();
  if (gamma == cplx(0.0)) return 0.0;
  const double nu = nu_of(prof, k);
  check_denominator(prof, nu, 4.0 * kPi * std::pow(prof.radius(), prof.kappa()));
  const ShapeFunction& shape = prof.shape();
  auto log_den = [&](double s) { return std::log(nu + gamma * shape.gap_envelope(s)); };
  const auto breaks = boundary_layer_breaks(nu, gamma);
  const cplx tail = integrate([&](double s) { return (1.0 - s) * (1.0 - s) * log_den(s); },
                              0.0, 1.0, 1e-12, breaks)
                        .value;
  return log_den(0.0) - 3.0 * tail;
}

cplx dipole_weight(const RadialProfile& prof, double k) {
  const double a = prof.radius();
  return a * a * a * I_of_a(prof, k);
}

cplx Z_estimate(const RadialProfile& prof, cplx divE, double k, bool asymptotic) {
  if (divE == cplx(0.0)) return 0.0;
  const double a = prof.radius();
  const double a3 = a * a * a;
  if (asymptotic) return 4.0 * kPi * prof.kappa() / 3.0 * divE * a3 * std::log(a);
  return 4.0 * kPi / 3.0 * a3 * I_of_a(prof, k) * divE;
}

}  // namespace smallscat
