#pragma once

#include <functional>
#include <string>
#include <vector>

#include "smallscat/effective.hpp"

namespace smallscat {

/// Target medium: n^2(x) on D realized with density N and shape h.
struct DesignSpec {
  ComplexField n2_target;
  RealField N;
  double kappa = 1.0;
  Box domain;
  ShapeFunction shape = ShapeFunction::unit();
  /// Reject designs that need Im gamma < 0 where Im n^2 >= 0.
  bool passive = true;
  /// Frequencies for dispersive designs; empty means a single run at k.
  std::vector<double> omega_grid;
  std::string description;
};

/// gamma(x) = k^2 (n^2(x) - 1) / (N(x) int (1-t)^2 h t^2 dt).
/// The returned field throws ZeroDensity where n^2 != 1 but N = 0 and
/// PassivityViolation when `passive` and Im gamma < -1e-12.
ComplexField design_from_target(const DesignSpec& spec, double k);

/// Designed gamma sampled on a grid (all nodes validated).
struct DesignGrid {
  GridSpec grid;
  double k = 0.0;
  std::vector<cplx> gamma;

  /// x [length],y [length],z [length],re_gamma [1],im_gamma [1]
  std::string to_csv() const;
};

DesignGrid sample_design(const DesignSpec& spec, double k, const GridSpec& grid);

/// Reads a CSV written by DesignGrid::to_csv back into per-row values.
struct DesignRow {
  Vec3 x;
  cplx gamma;
};
std::vector<DesignRow> parse_design_csv(const std::string& text);

using Dispersion = std::function<cplx(const Vec3&, double)>;

struct DispersionCheck {
  cplx n;
  double derivative = 0.0;
  double value = 0.0;
  /// Finite-difference noise band around zero; |value| inside it counts as 0.
  double tolerance = 0.0;
  bool negative = false;
};

/// value = n + omega dn/domega by central difference at relative step delta.
/// Throws NonRealIndex if |Im n| > 1e-10 at any stencil point.
DispersionCheck negative_refraction_check(const Dispersion& n, const Vec3& x, double omega,
                                          double delta = 1e-5);
DispersionCheck negative_refraction_check(const std::function<cplx(double)>& n, double omega,
                                          double delta = 1e-5);

struct PhaseFit {
  double slope = 0.0;
  double intercept = 0.0;
  double n = 0.0;
  double n2 = 0.0;
  double rms = 0.0;
};

/// Least-squares line through the unwrapped phase of samples f(s_i); n = slope / k.
PhaseFit fit_phase_index(const std::vector<double>& s, const std::vector<cplx>& values, double k);

}  // namespace smallscat
