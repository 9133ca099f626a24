#pragma once

#include "smallscat/core.hpp"
#include "smallscat/moments.hpp"

namespace smallscat {

/// Moments V = int_D p E and nu = int_D q . E of one small body together with
/// the data that produced them.
struct SingleSolution {
  CVec3 V = CVec3::Zero();
  cplx nu{0.0};
  Particle particle;
  MomentBlock moments;  // self moments: a, B (= int p grad g), C (= int q g), d
  SourceMoments source;
  PlaneWave wave;
};

/// Closed form of the 2x2 block system
///   V  = V0  + a V + B nu
///   nu = nu0 + C.V + d nu
/// Throws SmallnessViolation if |a| >= 1 and DegenerateDenominator if
/// |(1-a)(1-d) - C.B| < 1e-12.
void solve_moment_system(const MomentBlock& m, const SourceMoments& src, CVec3& V, cplx& nu);

SingleSolution solve_single(const Particle& part, const PlaneWave& pw, const Background& bg,
                            MomentMode mode = MomentMode::Quadrature);

/// E(x) = E0(x) + g(x, x_m) V + grad_x g(x, x_m) nu. Throws InsideNearZone
/// for |x - x_m| <= 2a.
CVec3 eval_field_single(const SingleSolution& sol, const Vec3& x);

/// Scattering amplitude F(beta) = exp(-ik beta.x_m) (V + i k beta nu) / (4 pi),
/// so that E ~ E0 + exp(ik|x|)/|x| F(x/|x|) far away.
CVec3 far_field(const SingleSolution& sol, const Vec3& beta);

}  // namespace smallscat
