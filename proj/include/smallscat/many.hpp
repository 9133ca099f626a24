#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "smallscat/core.hpp"
#include "smallscat/moments.hpp"

namespace smallscat {

/// The many-body system x = b + T x with 4M unknowns, stored per particle as
/// (V_x, V_y, V_z, nu). Block (j, m) of T is
///   [ a_jm I3   B_jm ]
///   [ C_jm^T    d_jm ]
/// and the diagonal blocks hold the self moments.
class ManyBodySystem {
 public:
  ManyBodySystem(ParticleCloud cloud, PlaneWave wave, MomentMode mode,
                 std::vector<MomentBlock> blocks, std::vector<SourceMoments> rhs);

  std::size_t size() const { return cloud_.size(); }
  std::size_t unknowns() const { return 4 * size(); }
  const ParticleCloud& cloud() const { return cloud_; }
  const PlaneWave& wave() const { return wave_; }
  double k() const { return wave_.k(); }
  MomentMode mode() const { return mode_; }

  const MomentBlock& block(std::size_t j, std::size_t m) const { return blocks_[j * size() + m]; }
  const std::vector<SourceMoments>& rhs() const { return rhs_; }

  Eigen::VectorXcd rhs_vector() const;
  /// Dense I - T.
  Eigen::MatrixXcd matrix() const;
  /// T x, rows summed in ascending m regardless of the thread count.
  Eigen::VectorXcd apply_T(const Eigen::VectorXcd& x) const;

 private:
  ParticleCloud cloud_;
  PlaneWave wave_;
  MomentMode mode_;
  std::vector<MomentBlock> blocks_;
  std::vector<SourceMoments> rhs_;
};

ManyBodySystem assemble(const ParticleCloud& cloud, const PlaneWave& pw, const Background& bg,
                        MomentMode mode, const BallQuadratureOptions& opts = {});
/// Mode chosen by default_moment_mode(cloud.size()).
ManyBodySystem assemble(const ParticleCloud& cloud, const PlaneWave& pw, const Background& bg);

/// max_j sum_m (|a_jm| + |d_jm| + |B_jm| + |C_jm|). A value below one bounds T
/// in block_max_norm, so plain iteration contracts.
double contraction_norm(const ManyBodySystem& sys);

/// max over particles of max(|V_m|, |nu_m|).
double block_max_norm(const Eigen::VectorXcd& x);

struct ManySolution {
  std::vector<CVec3> V;
  std::vector<cplx> nu;
  ParticleCloud cloud;
  PlaneWave wave;
  double residual_norm = 0.0;  // |b - (I - T) x|_2
  int iterations = 0;          // 0 for direct solves
  std::vector<std::string> warnings;

  Eigen::VectorXcd vector() const;
};

/// Dense LU. Throws SingularSystem when a pivot falls below 1e-14 |I - T|.
ManySolution solve_direct(const ManyBodySystem& sys);

enum class IterationScheme {
  Plain,        // x <- b + T x
  BlockJacobi,  // x <- (I - T_jj)^-1 (b + (T - T_jj) x), per-particle 4x4 blocks
};

struct IterativeOptions {
  double tol = 1e-10;
  int max_iter = 500;
  IterationScheme scheme = IterationScheme::Plain;
  /// Called with (iteration, iterate) after every sweep.
  std::function<void(int, const Eigen::VectorXcd&)> observer;
};

/// Fixed-point iteration from x0 = b until |x_n - x_{n-1}| <= tol |x_n| in
/// block_max_norm. Throws NoConvergence after max_iter sweeps.
ManySolution solve_iterative(const ManyBodySystem& sys, const IterativeOptions& opts = {});
ManySolution solve_iterative(const ManyBodySystem& sys, double tol, int max_iter);

/// E(x) = E0(x) + sum_m g(x, x_m) V_m + grad_x g(x, x_m) nu_m. Throws
/// InsideNearZone when x lies within 2a of a particle center.
CVec3 eval_field(const ManySolution& sol, const Vec3& x);

/// H = curl E / (i omega mu) with the curl taken analytically:
/// curl E0 + sum_m grad g(x, x_m) x V_m (gradient terms are curl free).
CVec3 eval_H_field(const ManySolution& sol, const Vec3& x, const Background& bg);

}  // namespace smallscat
