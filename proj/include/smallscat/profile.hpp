#pragma once

#include <functional>
#include <memory>

#include "smallscat/types.hpp"

namespace smallscat {

/// Shape factor h(t) on [0, 1] of the radial potential. The default h = 1
/// admits closed forms; custom shapes may supply h' or fall back to finite
/// differences.
class ShapeFunction {
 public:
  static ShapeFunction unit();
  static ShapeFunction custom(std::function<double(double)> h,
                              std::function<double(double)> dh = {});

  double value(double t) const;
  bool is_unit() const { return unit_; }
  bool has_derivative() const { return static_cast<bool>(dh_) || unit_; }

  /// d/dt of (1-t)^2 h(t). Uses h' when available; otherwise a second-order
  /// finite difference with step `fd_step` (one-sided near the ends).
  double envelope_derivative(double t, double fd_step = 1e-6) const;
  double envelope(double t) const { return (1.0 - t) * (1.0 - t) * value(t); }

  // Same two quantities parametrized by the gap s = 1 - t, which keeps full
  // relative precision near the ball surface.
  double gap_envelope(double s) const { return s * s * value(1.0 - s); }
  double gap_envelope_derivative(double s, double fd_step = 1e-6) const;

 private:
  bool unit_ = true;
  std::shared_ptr<const std::function<double(double)>> h_;
  std::function<double(double)> dh_;
};

/// Potential p(r) = gamma/(4 pi a^kappa) (1 - r/a)^2 h(r/a) on a ball of
/// radius a, zero outside.
class RadialProfile {
 public:
  RadialProfile(cplx gamma, double kappa, double radius,
                ShapeFunction shape = ShapeFunction::unit());

  cplx gamma() const { return gamma_; }
  double kappa() const { return kappa_; }
  double radius() const { return radius_; }
  const ShapeFunction& shape() const { return shape_; }

  RadialProfile with_gamma(cplx gamma) const;
  RadialProfile with_radius(double radius) const;

  /// gamma / (4 pi a^kappa)
  cplx amplitude() const;
  cplx p(double r) const;
  cplx dp_dr(double r) const;

  /// p'(r) / (k^2 + p(r)); the radial magnitude of q. Zero for r > a.
  /// Throws SingularDenominator when |k^2 + p| < 1e-14.
  cplx q_radial(double r, double k) const;

  /// Integral of (1-t)^2 h(t) t^2 over [0, 1]; 1/30 for h = 1.
  double shape_moment() const;

  /// c1 = gamma * shape_moment(), so that j = c1 a^(3 - kappa).
  cplx c1() const { return gamma_ * shape_moment(); }

 private:
  cplx gamma_;
  double kappa_;
  double radius_;
  ShapeFunction shape_;
};

cplx p_eval(const RadialProfile& prof, double r);

/// q(y) = p'(r)/(k^2 + p(r)) r0 with r0 = (y - center)/r; zero outside the
/// ball and at the center itself.
CVec3 q_eval(const RadialProfile& prof, const Vec3& y, const Vec3& center, double k);

enum class JMethod { ClosedForm, Quadrature };

/// j = integral of p over the ball.
cplx j_total(const RadialProfile& prof, JMethod method);

/// I(a) = int_0^1 t^3 S'(t) / (nu + S(t)) dt with S = gamma (1-t)^2 h(t) and
/// nu = 4 pi k^2 a^kappa.
cplx I_of_a(const RadialProfile& prof, double k);

/// Same quantity from the integrated-by-parts form
/// ln(nu + S(1)) - 3 int_0^1 t^2 ln(nu + S(t)) dt.
cplx I_of_a_by_parts(const RadialProfile& prof, double k);

/// Integral of p'(r) r^3 / (k^2 + p) over [0, a], i.e. a^3 I(a). This is the
/// scalar Y with int_B q_i (y - c)_l dy = (4 pi / 3) Y delta_il.
cplx dipole_weight(const RadialProfile& prof, double k);

/// Z = (4 pi / 3) a^3 I(a) div E (pre-asymptotic) or
/// (4 pi kappa / 3) div E a^3 ln a (asymptotic).
cplx Z_estimate(const RadialProfile& prof, cplx divE, double k, bool asymptotic = false);

}  // namespace smallscat
