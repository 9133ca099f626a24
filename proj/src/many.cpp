#include "smallscat/many.hpp"

#include <cmath>
#include <sstream>

#include "smallscat/error.hpp"
#include "smallscat/parallel.hpp"

namespace smallscat {

namespace {

using Block4 = Eigen::Matrix<cplx, 4, 4>;

Block4 block_matrix(const MomentBlock& b) {
  Block4 t = Block4::Zero();
  for (int i = 0; i < 3; ++i) {
    t(i, i) = b.a;
    t(i, 3) = b.B[i];
    t(3, i) = b.C[i];
  }
  t(3, 3) = b.d;
  return t;
}

// Adds T_jm x_m to out (4 entries).
inline void accumulate(const MomentBlock& b, const cplx* x, cplx* out) {
  const cplx nu = x[3];
  out[0] += b.a * x[0] + b.B[0] * nu;
  out[1] += b.a * x[1] + b.B[1] * nu;
  out[2] += b.a * x[2] + b.B[2] * nu;
  out[3] += b.C[0] * x[0] + b.C[1] * x[1] + b.C[2] * x[2] + b.d * nu;
}

ManySolution make_solution(const ManyBodySystem& sys, const Eigen::VectorXcd& x) {
  ManySolution sol{{}, {}, sys.cloud(), sys.wave(), 0.0, 0, {}};
  const std::size_t M = sys.size();
  sol.V.resize(M);
  sol.nu.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    sol.V[m] = x.segment<3>(4 * m);
    sol.nu[m] = x[4 * m + 3];
  }
  const Eigen::VectorXcd r = sys.rhs_vector() - (x - sys.apply_T(x));
  sol.residual_norm = r.norm();
  return sol;
}

}  // namespace

ManyBodySystem::ManyBodySystem(ParticleCloud cloud, PlaneWave wave, MomentMode mode,
                               std::vector<MomentBlock> blocks, std::vector<SourceMoments> rhs)
    : cloud_(std::move(cloud)),
      wave_(std::move(wave)),
      mode_(mode),
      blocks_(std::move(blocks)),
      rhs_(std::move(rhs)) {
  const std::size_t M = cloud_.size();
  if (blocks_.size() != M * M || rhs_.size() != M)
    fail(ErrorCode::InvalidArgument, "moment blocks do not match the particle count");
}

Eigen::VectorXcd ManyBodySystem::rhs_vector() const {
  Eigen::VectorXcd b(unknowns());
  for (std::size_t j = 0; j < size(); ++j) {
    b.segment<3>(4 * j) = rhs_[j].V0;
    b[4 * j + 3] = rhs_[j].nu0;
  }
  return b;
}

Eigen::MatrixXcd ManyBodySystem::matrix() const {
  const std::size_t M = size();
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(4 * M, 4 * M);
  parallel_for(M, [&](std::size_t j) {
    for (std::size_t m = 0; m < M; ++m) A.block<4, 4>(4 * j, 4 * m) -= block_matrix(block(j, m));
  });
  return A;
}

Eigen::VectorXcd ManyBodySystem::apply_T(const Eigen::VectorXcd& x) const {
  const std::size_t M = size();
  if (static_cast<std::size_t>(x.size()) != 4 * M)
    fail(ErrorCode::InvalidArgument, "vector size does not match the system");
  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(4 * M);
  parallel_for(M, [&](std::size_t j) {
    cplx acc[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t m = 0; m < M; ++m) accumulate(block(j, m), x.data() + 4 * m, acc);
    for (int i = 0; i < 4; ++i) y[4 * j + i] = acc[i];
  });
  return y;
}

ManyBodySystem assemble(const ParticleCloud& cloud, const PlaneWave& pw, const Background& bg,
                        MomentMode mode, const BallQuadratureOptions& opts) {
  if (std::abs(bg.k() - pw.k()) > 1e-12 * bg.k())
    fail(ErrorCode::InvalidArgument, "plane wave and background disagree on k");
  const double k = bg.k();
  const std::size_t M = cloud.size();
  std::vector<ParticleScalars> scalars(mode == MomentMode::Midpoint ? M : 0);
  if (mode == MomentMode::Midpoint)
    parallel_for(M, [&](std::size_t j) { scalars[j] = particle_scalars(cloud[j], k); });

  std::vector<MomentBlock> blocks(M * M);
  std::vector<SourceMoments> rhs(M);
  parallel_for(M, [&](std::size_t j) {
    const Particle& pj = cloud[j];
    for (std::size_t m = 0; m < M; ++m) {
      MomentBlock& out = blocks[j * M + m];
      if (m == j) {
        out = self_moments(pj, k);
      } else if (mode == MomentMode::Midpoint) {
        out = midpoint_cross_moments(scalars[j], pj.center(), cloud[m].center(), k);
      } else {
        out = cross_moments(pj, cloud[m].center(), k, mode, opts);
      }
    }
    rhs[j] = source_moments(pj, pw, mode, opts);
  });
  return ManyBodySystem(cloud, pw, mode, std::move(blocks), std::move(rhs));
}

ManyBodySystem assemble(const ParticleCloud& cloud, const PlaneWave& pw, const Background& bg) {
  return assemble(cloud, pw, bg, default_moment_mode(cloud.size()));
}

double contraction_norm(const ManyBodySystem& sys) {
  const std::size_t M = sys.size();
  std::vector<double> rows(M, 0.0);
  parallel_for(M, [&](std::size_t j) {
    double s = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      const MomentBlock& b = sys.block(j, m);
      s += std::abs(b.a) + std::abs(b.d) + b.B.norm() + b.C.norm();
    }
    rows[j] = s;
  });
  double q = 0.0;
  for (double r : rows) q = std::max(q, r);
  return q;
}

double block_max_norm(const Eigen::VectorXcd& x) {
  double n = 0.0;
  for (Eigen::Index m = 0; m + 3 < x.size(); m += 4)
    n = std::max({n, x.segment<3>(m).norm(), std::abs(x[m + 3])});
  return n;
}

Eigen::VectorXcd ManySolution::vector() const {
  Eigen::VectorXcd x(4 * V.size());
  for (std::size_t m = 0; m < V.size(); ++m) {
    x.segment<3>(4 * m) = V[m];
    x[4 * m + 3] = nu[m];
  }
  return x;
}

ManySolution solve_direct(const ManyBodySystem& sys) {
  const Eigen::MatrixXcd A = sys.matrix();
  const double norm = A.cwiseAbs().colwise().sum().maxCoeff();
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
  const double pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (pivot < 1e-14 * norm) {
    std::ostringstream os;
    os << "pivot " << pivot << " below 1e-14 |I - T| = " << 1e-14 * norm;
    fail(ErrorCode::SingularSystem, os.str());
  }
  const Eigen::VectorXcd x = lu.solve(sys.rhs_vector());
  return make_solution(sys, x);
}

ManySolution solve_iterative(const ManyBodySystem& sys, const IterativeOptions& opts) {
  const std::size_t M = sys.size();
  const Eigen::VectorXcd b = sys.rhs_vector();
  std::vector<std::string> warnings;
  const double q = contraction_norm(sys);
  if (opts.scheme == IterationScheme::Plain && q >= 1.0) {
    std::ostringstream os;
    os << "contraction norm " << q << " >= 1; plain iteration may diverge";
    warnings.push_back(os.str());
  }

  std::vector<Eigen::PartialPivLU<Block4>> diag;
  if (opts.scheme == IterationScheme::BlockJacobi) {
    diag.resize(M);
    for (std::size_t j = 0; j < M; ++j)
      diag[j].compute(Block4::Identity() - block_matrix(sys.block(j, j)));
  }

  Eigen::VectorXcd x = b;
  for (int it = 1; it <= opts.max_iter; ++it) {
    Eigen::VectorXcd next = b + sys.apply_T(x);
    if (opts.scheme == IterationScheme::BlockJacobi) {
      parallel_for(M, [&](std::size_t j) {
        Eigen::Matrix<cplx, 4, 1> r = next.segment<4>(4 * j);
        cplx diag_term[4] = {0.0, 0.0, 0.0, 0.0};
        accumulate(sys.block(j, j), x.data() + 4 * j, diag_term);
        for (int i = 0; i < 4; ++i) r[i] -= diag_term[i];
        next.segment<4>(4 * j) = diag[j].solve(r);
      });
    }
    const double step = block_max_norm(next - x);
    x.swap(next);
    if (opts.observer) opts.observer(it, x);
    if (!std::isfinite(step)) break;
    if (step <= opts.tol * block_max_norm(x)) {
      ManySolution sol = make_solution(sys, x);
      sol.iterations = it;
      sol.warnings = std::move(warnings);
      return sol;
    }
  }
  const Eigen::VectorXcd r = b - (x - sys.apply_T(x));
  std::ostringstream os;
  os << "no convergence after " << opts.max_iter << " iterations; residual " << r.norm();
  fail(ErrorCode::NoConvergence, os.str());
}

ManySolution solve_iterative(const ManyBodySystem& sys, double tol, int max_iter) {
  IterativeOptions opts;
  opts.tol = tol;
  opts.max_iter = max_iter;
  return solve_iterative(sys, opts);
}

namespace {
void check_far_enough(const ManySolution& sol, const Vec3& x) {
  for (const Particle& p : sol.cloud.particles())
    if ((x - p.center()).norm() <= 2.0 * p.radius())
      fail(ErrorCode::InsideNearZone, "evaluation point within 2a of a particle");
}
}  // namespace

CVec3 eval_field(const ManySolution& sol, const Vec3& x) {
  check_far_enough(sol, x);
  const double k = sol.wave.k();
  CVec3 e = sol.wave(x);
  for (std::size_t m = 0; m < sol.V.size(); ++m) {
    const Vec3& c = sol.cloud[m].center();
    e += green(x, c, k) * sol.V[m] + grad_green(x, c, k) * sol.nu[m];
  }
  return e;
}

CVec3 eval_H_field(const ManySolution& sol, const Vec3& x, const Background& bg) {
  check_far_enough(sol, x);
  const double k = sol.wave.k();
  CVec3 curl = sol.wave.curl(x);
  for (std::size_t m = 0; m < sol.V.size(); ++m)
    curl += bcross(grad_green(x, sol.cloud[m].center(), k), sol.V[m]);
  return curl / (kI * bg.omega() * bg.mu());
}

}  // namespace smallscat
