#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "smallscat/core.hpp"
#include "smallscat/fields.hpp"
#include "smallscat/many.hpp"

namespace smallscat {

using RealField = std::function<double(const Vec3&)>;

/// Particle density law: a subdomain T receives about int_T N / phi(a)
/// particles, phi(a) = a^(3 - kappa).
struct DensitySpec {
  RealField N;
  double kappa = 1.0;
  Box domain;

  double phi(double a) const;
};

struct PlacementOptions {
  std::uint64_t seed = 0;
  /// Uniform jitter as a fraction of the local cell size (at most 0.1).
  double jitter = 0.0;
  ShapeFunction shape = ShapeFunction::unit();
  /// Cells per axis of the mass table used to invert the density.
  int mass_resolution = 96;
};

/// Deterministic stratified placement: equal-mass z slabs, equal-mass y rows
/// inside each slab, and x positions where the running count crosses
/// half-integers. Throws DensityTooHigh if two centers end up within 2a.
ParticleCloud place_particles(const DensitySpec& spec, double a, const ComplexField& gamma,
                              const PlacementOptions& opts = {});

/// Expected particle count int_D N / phi(a).
double expected_count(const DensitySpec& spec, double a);

struct RiemannCheck {
  cplx lhs;
  cplx rhs;
  double gap;
};

/// lhs = sum_m f(x_m) phi(a), rhs = int_D f N by tensor Gauss-Legendre.
RiemannCheck riemann_sum_check(const ComplexField& f, const ParticleCloud& cloud,
                               const DensitySpec& spec, double a);

/// Tensor Gauss-Legendre integral over a box (order points per axis and
/// panels per axis).
cplx integrate_box(const ComplexField& f, const Box& box, int order = 16, int panels = 4);

/// C(x) = c1(x) N(x) with c1 = gamma(x) int_0^1 (1-t)^2 h(t) t^2 dt.
ComplexField coefficient_C(const ComplexField& gamma, const RealField& N,
                           const ShapeFunction& shape = ShapeFunction::unit());

/// n^2 = 1 + C / k^2.
cplx refraction_index(cplx C, double k);
ComplexField refraction_index(const ComplexField& C, double k);

/// Cell-centered uniform grid over a box.
struct GridSpec {
  Box domain;
  std::array<int, 3> n{8, 8, 8};

  static GridSpec with_spacing(const Box& domain, double h);

  std::size_t size() const { return static_cast<std::size_t>(n[0]) * n[1] * n[2]; }
  Vec3 spacing() const;
  double cell_volume() const { return spacing().prod(); }
  std::size_t index(int i, int j, int l) const {
    return (static_cast<std::size_t>(l) * n[1] + j) * n[0] + i;
  }
  Vec3 node(int i, int j, int l) const;
  Vec3 node(std::size_t idx) const;
};

/// int_0^R r exp(ikr) dr with R the radius of the sphere of volume `volume`.
cplx self_cell_weight(double volume, double k);

enum class EffectiveSolver { Auto, Direct, Iterative };

struct EffectiveOptions {
  EffectiveSolver solver = EffectiveSolver::Auto;
  /// Auto picks the dense solve up to this many nodes.
  std::size_t direct_limit = 3000;
  double tol = 1e-10;
  int max_iter = 500;
};

/// Nystrom solution of E = E0 + int_D g C E on the cell centers.
struct EffectiveFieldGrid {
  GridSpec grid;
  PlaneWave wave;
  std::vector<cplx> C;
  std::vector<CVec3> E;
  int iterations = 0;

  /// E_e at an arbitrary point from the Nystrom interpolant.
  CVec3 eval(const Vec3& x) const;
};

/// Throws Resolution when a spacing exceeds a tenth of the wavelength and
/// SingularSystem / NoConvergence from the solvers.
EffectiveFieldGrid solve_effective(const GridSpec& grid, const ComplexField& C,
                                   const PlaneWave& pw, const Background& bg,
                                   const EffectiveOptions& opts = {});

/// max over interior nodes (optionally restricted to `region`) of
/// |Lap_h E + (k^2 + C) E| / max |E|, Lap_h the 7-point Laplacian.
double helmholtz_residual(const EffectiveFieldGrid& sol, double k,
                          const std::optional<Box>& region = std::nullopt);

/// Same residual for arbitrary node values (used for negative controls).
double helmholtz_residual(const GridSpec& grid, const std::vector<CVec3>& E,
                          const std::vector<cplx>& C, double k,
                          const std::optional<Box>& region = std::nullopt);

struct DivergenceField {
  GridSpec grid;
  std::vector<cplx> eta;      // zero on boundary nodes
  std::vector<char> interior;

  /// max |eta| over interior nodes, optionally inside `region`.
  double max_abs(const std::optional<Box>& region = std::nullopt) const;
};

/// Central-difference divergence of E_e.
DivergenceField divergence_field(const EffectiveFieldGrid& sol);

/// Deterministic Halton points (bases 2, 3, 5) in a box.
std::vector<Vec3> halton_points(const Box& box, std::size_t count, std::size_t skip = 20);

struct ConvergenceRow {
  double a = 0.0;
  std::size_t M = 0;
  double sup_diff = 0.0;
  double mean_diff = 0.0;
  double contraction_norm = 0.0;
  double wall_time_s = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  std::string to_csv(bool include_timing = true) const;
};

struct ConvergenceOptions {
  /// Probe points; filtered per radius to keep 10a from every center.
  std::vector<Vec3> probes;
  GridSpec grid;
  EffectiveOptions effective;
  PlacementOptions placement;
  /// Moment mode for the many-body systems.
  MomentMode mode = MomentMode::Midpoint;
  /// Dense solve up to this many particles, block-Jacobi iteration above.
  std::size_t direct_limit = 1000;
  double tol = 1e-10;
  int max_iter = 500;
};

/// For each radius: place particles, solve the many-body system, and compare
/// its field with the effective field on the probes. Differences are
/// relative to the largest scattered effective field on the probes.
ConvergenceTable convergence_study(const DensitySpec& spec, const ComplexField& gamma,
                                   const PlaneWave& pw, const Background& bg,
                                   const std::vector<double>& a_list,
                                   const ConvergenceOptions& opts);

/// Probe points outside the domain: Halton points in a box three times as
/// large, keeping those at least `margin` away from the domain.
std::vector<Vec3> exterior_probes(const Box& domain, std::size_t count, double margin);

}  // namespace smallscat
