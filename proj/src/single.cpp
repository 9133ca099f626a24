#include "smallscat/single.hpp"

#include <cmath>
#include <sstream>

#include "smallscat/error.hpp"

namespace smallscat {

void solve_moment_system(const MomentBlock& m, const SourceMoments& src, CVec3& V, cplx& nu) {
  if (std::abs(m.a) >= 1.0) {
    std::ostringstream os;
    os << "|a_m| = " << std::abs(m.a) << " >= 1";
    fail(ErrorCode::SmallnessViolation, os.str());
  }
  const cplx one_a = 1.0 - m.a;
  const cplx den = one_a * (1.0 - m.d) - bdot(m.C, m.B);
  if (std::abs(den) < 1e-12) fail(ErrorCode::DegenerateDenominator, "(1-a)(1-b) - B.A vanishes");
  nu = (one_a * src.nu0 + bdot(m.C, src.V0)) / den;
  V = (src.V0 + m.B * nu) / one_a;
}

SingleSolution solve_single(const Particle& part, const PlaneWave& pw, const Background& bg,
                            MomentMode mode) {
  if (std::abs(bg.k() - pw.k()) > 1e-12 * bg.k())
    fail(ErrorCode::InvalidArgument, "plane wave and background disagree on k");
  SingleSolution sol{CVec3::Zero(), 0.0, part, self_moments(part, bg.k()),
                     source_moments(part, pw, mode), pw};
  solve_moment_system(sol.moments, sol.source, sol.V, sol.nu);
  return sol;
}

CVec3 eval_field_single(const SingleSolution& sol, const Vec3& x) {
  const Vec3& c = sol.particle.center();
  if ((x - c).norm() <= 2.0 * sol.particle.radius())
    fail(ErrorCode::InsideNearZone, "evaluation point within 2a of the particle");
  const double k = sol.wave.k();
  return sol.wave(x) + green(x, c, k) * sol.V + grad_green(x, c, k) * sol.nu;
}

CVec3 far_field(const SingleSolution& sol, const Vec3& beta) {
  if (std::abs(beta.norm() - 1.0) > 1e-12) fail(ErrorCode::InvalidArgument, "beta must be a unit vector");
  const cplx ik = kI * sol.wave.k();
  // Phase of the particle position relative to the origin; 1 for a body
  // centered at the origin.
  const cplx shift = std::exp(-ik * beta.dot(sol.particle.center()));
  return shift * (sol.V + (ik * sol.nu) * complexify(beta)) / (4.0 * kPi);
}

}  // namespace smallscat
