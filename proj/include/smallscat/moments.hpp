#pragma once

#include <cstddef>

#include "smallscat/core.hpp"
#include "smallscat/types.hpp"

namespace smallscat {

/// Coupling moments of particle j against source point x_m:
///   a = int_{D_j} p g(x, x_m),      B = int_{D_j} p grad_x g(x, x_m),
///   C = int_{D_j} q g(x, x_m),      d = int_{D_j} q . grad_x g(x, x_m).
struct MomentBlock {
  cplx a{0.0};
  CVec3 B = CVec3::Zero();
  CVec3 C = CVec3::Zero();
  cplx d{0.0};
};

/// V0 = int_{D_j} p E0, nu0 = int_{D_j} q . E0.
struct SourceMoments {
  CVec3 V0 = CVec3::Zero();
  cplx nu0{0.0};
};

enum class MomentMode { Midpoint, Quadrature };

/// Quadrature for systems up to this many particles, midpoint above.
inline constexpr std::size_t kQuadratureParticleLimit = 200;
MomentMode default_moment_mode(std::size_t particle_count);

struct BallQuadratureOptions {
  int initial_order = 12;
  int max_order = 192;
  double rel_tol = 1e-8;
};

/// Diagonal entry j = m. The weakly singular kernel is reduced to 1-D radial
/// integrals; B and C vanish identically for a radial profile.
MomentBlock self_moments(const Particle& part, double k);

/// Off-diagonal entry. Throws TooClose if |x_j - x_m| <= 2a.
MomentBlock cross_moments(const Particle& part_j, const Vec3& x_m, double k, MomentMode mode,
                          const BallQuadratureOptions& opts = {});

SourceMoments source_moments(const Particle& part_j, const PlaneWave& pw, MomentMode mode,
                             const BallQuadratureOptions& opts = {});

/// Radial scalars of one particle used by the midpoint expansions:
/// j = int p and dipole = (4 pi / 3) a^3 I(a), so that
/// int q_i (x - x_j)_l dx = dipole delta_il.
struct ParticleScalars {
  cplx j{0.0};
  cplx dipole{0.0};
};

ParticleScalars particle_scalars(const Particle& part, double k);

/// Midpoint cross moments from precomputed scalars (no distance check).
MomentBlock midpoint_cross_moments(const ParticleScalars& s, const Vec3& x_j, const Vec3& x_m,
                                   double k);

}  // namespace smallscat
