#include <cmath>
#include <random>

#include "doctest.h"
#include "smallscat/error.hpp"
#include "smallscat/many.hpp"
#include "smallscat/single.hpp"

using namespace smallscat;

namespace {

const Background kBg = Background::from_wavenumber(1.0);
const PlaneWave kWave(Vec3(0, 0, 1), CVec3(1, 0, 0), 1.0);
const Box kUnit{Vec3(0, 0, 0), Vec3(1, 1, 1)};

ParticleCloud lattice(int n, double spacing, double a, cplx gamma, const Vec3& origin) {
  std::vector<Particle> ps;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l)
        ps.emplace_back(origin + spacing * Vec3(i, j, l), RadialProfile(gamma, 1.0, a));
  return ParticleCloud(std::move(ps), Box{origin - Vec3::Constant(a), origin + Vec3::Constant(n * spacing)});
}

}  // namespace

TEST_CASE("M = 1 reduces to the single-body closed form") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 10; ++n) {
    const double a = 0.002 + 0.008 * u(rng);
    const Particle part(Vec3(u(rng), u(rng), u(rng)),
                        RadialProfile(cplx(40 * u(rng), u(rng)), 0.5 + 2 * u(rng), a));
    const PlaneWave pw(Vec3(0, 0.6, 0.8), CVec3(cplx(1, 0.5), 0.8, -0.6), 1.0);
    const ParticleCloud cloud({part}, kUnit);
    const ManyBodySystem sys = assemble(cloud, pw, kBg, MomentMode::Quadrature);
    const ManySolution ms = solve_direct(sys);
    const SingleSolution ss = solve_single(part, pw, kBg);
    CHECK((ms.V[0] - ss.V).norm() <= 1e-12 * ss.V.norm());
    CHECK(std::abs(ms.nu[0] - ss.nu) <= 1e-12 * (std::abs(ss.nu) + ss.V.norm()));
    const Vec3 x = part.center() + Vec3(0.1, -0.05, 0.2);
    CHECK((eval_field(ms, x) - eval_field_single(ss, x)).norm() <= 1e-12 * pw(x).norm());
  }
}

TEST_CASE("trivial systems") {
  const ParticleCloud cloud = lattice(2, 0.2, 0.01, 0.0, Vec3(0.3, 0.3, 0.3));
  const ManyBodySystem sys = assemble(cloud, kWave, kBg, MomentMode::Quadrature);
  CHECK(contraction_norm(sys) == 0.0);
  const ManySolution d = solve_direct(sys);
  CHECK(d.vector().norm() == 0.0);
  const ManySolution it = solve_iterative(sys, 1e-10, 10);
  CHECK(it.iterations == 1);
  const Vec3 x(0.1, 0.1, 0.1);
  CHECK((eval_field(d, x) - kWave(x)).norm() == 0.0);
  CHECK((eval_H_field(d, x, kBg) - kWave.curl(x) / (kI * kBg.omega() * kBg.mu())).norm() == 0.0);
}

TEST_CASE("single particle contraction norm") {
  const ParticleCloud cloud({Particle(Vec3(0.5, 0.5, 0.5), RadialProfile(0.05, 1.0, 0.01))}, kUnit);
  const ManyBodySystem sys = assemble(cloud, kWave, kBg);
  const MomentBlock& b = sys.block(0, 0);
  CHECK(contraction_norm(sys) == doctest::Approx(std::abs(b.a) + std::abs(b.d)).epsilon(1e-12));
}

TEST_CASE("reflection symmetry of two particles") {
  // Two identical particles mirrored through the plane x = 0.5, normal
  // incidence along z with polarization along y: the mirror maps the scene
  // onto itself with the labels swapped.
  const PlaneWave pw(Vec3(0, 0, 1), CVec3(0, 1, 0), 1.0);
  const RadialProfile prof(cplx(10, 1), 1.0, 0.01);
  const Vec3 p1(0.4, 0.5, 0.45), p2(0.6, 0.5, 0.55);
  const ManyBodySystem s12 =
      assemble(ParticleCloud({Particle(p1, prof), Particle(p2, prof)}, kUnit), pw, kBg,
               MomentMode::Quadrature);
  const Eigen::Matrix3d R = Eigen::Vector3d(-1, 1, 1).asDiagonal();
  // Block (j, m) of the original equals block (j', m') of the mirrored,
  // relabeled cloud with vector moments reflected.
  const Vec3 r1 = R * (p1 - Vec3(0.5, 0, 0)) + Vec3(0.5, 0, 0);
  const Vec3 r2 = R * (p2 - Vec3(0.5, 0, 0)) + Vec3(0.5, 0, 0);
  const ManyBodySystem mirrored =
      assemble(ParticleCloud({Particle(r2, prof), Particle(r1, prof)}, kUnit), pw, kBg,
               MomentMode::Quadrature);
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t m = 0; m < 2; ++m) {
      const MomentBlock& b = s12.block(j, m);
      const MomentBlock& c = mirrored.block(1 - j, 1 - m);
      CHECK(std::abs(b.a - c.a) <= 1e-12 * std::abs(b.a));
      CHECK(std::abs(b.d - c.d) <= 1e-12 * std::abs(b.d));
      CHECK((R.cast<cplx>() * b.B - c.B).norm() <= 1e-12 * (b.B.norm() + 1e-300));
      CHECK((R.cast<cplx>() * b.C - c.C).norm() <= 1e-12 * (b.C.norm() + 1e-300));
    }
}

TEST_CASE("direct solve residual and iterative agreement") {
  const ParticleCloud cloud = lattice(2, 0.15, 0.01, cplx(0.02, 0.01), Vec3(0.2, 0.2, 0.2));
  const ManyBodySystem sys = assemble(cloud, kWave, kBg, MomentMode::Quadrature);
  const double q = contraction_norm(sys);
  REQUIRE(q < 1.0);
  const ManySolution d = solve_direct(sys);
  CHECK(d.residual_norm <= 1e-10 * (sys.rhs_vector().norm() + d.vector().norm()));
  const double tol = 1e-10;
  const ManySolution it = solve_iterative(sys, tol, 200);
  CHECK(block_max_norm(it.vector() - d.vector()) <= 10 * tol * block_max_norm(d.vector()));
}

TEST_CASE("iterates respect the geometric envelope") {
  const ParticleCloud cloud = lattice(3, 0.1, 0.005, cplx(0.005, 0.0), Vec3(0.2, 0.2, 0.2));
  const ManyBodySystem sys = assemble(cloud, kWave, kBg, MomentMode::Midpoint);
  const double q = contraction_norm(sys);
  REQUIRE(q < 1.0);
  const Eigen::VectorXcd exact = solve_direct(sys).vector();
  const double bnorm = block_max_norm(sys.rhs_vector());
  bool ok = true;
  IterativeOptions opts;
  opts.tol = 1e-13;
  opts.observer = [&](int n, const Eigen::VectorXcd& x) {
    const double err = block_max_norm(x - exact);
    if (err > std::pow(q, n) / (1 - q) * bnorm * (1 + 1e-9) + 1e-15 * bnorm) ok = false;
  };
  solve_iterative(sys, opts);
  CHECK(ok);
}

TEST_CASE("block Jacobi converges where plain iteration does not") {
  const ParticleCloud cloud = lattice(3, 0.1, 0.005, cplx(30, 0.0), Vec3(0.2, 0.2, 0.2));
  const ManyBodySystem sys = assemble(cloud, kWave, kBg, MomentMode::Midpoint);
  CHECK(contraction_norm(sys) > 1.0);
  try {
    solve_iterative(sys, 1e-10, 50);
    FAIL("expected NoConvergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoConvergence);
  }
  IterativeOptions opts;
  opts.scheme = IterationScheme::BlockJacobi;
  const ManySolution it = solve_iterative(sys, opts);
  const ManySolution d = solve_direct(sys);
  CHECK(block_max_norm(it.vector() - d.vector()) <= 1e-9 * block_max_norm(d.vector()));
}

TEST_CASE("permutation invariance") {
  const ParticleCloud cloud = lattice(2, 0.15, 0.01, cplx(3, 0.1), Vec3(0.2, 0.2, 0.2));
  std::vector<Particle> rev(cloud.particles().rbegin(), cloud.particles().rend());
  const ManySolution a = solve_direct(assemble(cloud, kWave, kBg, MomentMode::Quadrature));
  const ManySolution b =
      solve_direct(assemble(ParticleCloud(rev, cloud.domain()), kWave, kBg, MomentMode::Quadrature));
  const std::size_t M = cloud.size();
  for (std::size_t m = 0; m < M; ++m) CHECK((a.V[m] - b.V[M - 1 - m]).norm() <= 1e-12 * a.V[m].norm());
  const Vec3 x(0.9, 0.8, 0.7);
  CHECK((eval_field(a, x) - eval_field(b, x)).norm() <= 1e-12);
}

TEST_CASE("weak coupling superposes single-body fields") {
  const RadialProfile prof(cplx(1e-3, 0), 1.0, 0.01);
  const Particle p1(Vec3(0.2, 0.5, 0.5), prof), p2(Vec3(0.8, 0.5, 0.5), prof);
  const ManySolution ms = solve_direct(assemble(ParticleCloud({p1, p2}, kUnit), kWave, kBg, MomentMode::Quadrature));
  const SingleSolution s1 = solve_single(p1, kWave, kBg), s2 = solve_single(p2, kWave, kBg);
  const Vec3 x(0.5, 0.9, 0.5);
  const CVec3 scat = eval_field(ms, x) - kWave(x);
  const CVec3 sum = eval_field_single(s1, x) + eval_field_single(s2, x) - 2.0 * kWave(x);
  CHECK((scat - sum).norm() <= 1e-4 * sum.norm());
}

TEST_CASE("magnetic field") {
  const ParticleCloud cloud = lattice(2, 0.15, 0.01, cplx(20, 0.5), Vec3(0.2, 0.2, 0.2));
  const Background bg(2.0, 1.0, 0.5);
  const PlaneWave pw(Vec3(0, 0, 1), CVec3(1, 0, 0), bg.k());
  ManySolution sol = solve_direct(assemble(cloud, pw, bg, MomentMode::Midpoint));
  const Vec3 x(0.9, 0.1, 0.5);
  const CVec3 H = eval_H_field(sol, x, bg);
  const double h = 1e-4;
  auto E = [&](const Vec3& y) { return eval_field(sol, y); };
  auto d = [&](int c, int dir) {
    Vec3 e = Vec3::Zero();
    e[dir] = h;
    return (E(x + e)[c] - E(x - e)[c]) / (2 * h);
  };
  const CVec3 curl(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
  CHECK((H - curl / (kI * bg.omega() * bg.mu())).norm() <= 1e-6 * H.norm());

  // Gradient terms are curl free.
  for (auto& v : sol.V) v.setZero();
  CHECK((eval_H_field(sol, x, bg) - pw.curl(x) / (kI * bg.omega() * bg.mu())).norm() <= 1e-15);
}

TEST_CASE("radiation behaviour") {
  const ParticleCloud cloud = lattice(2, 0.15, 0.01, cplx(20, 0.5), Vec3(0.2, 0.2, 0.2));
  const ManySolution sol = solve_direct(assemble(cloud, kWave, kBg, MomentMode::Midpoint));
  const Vec3 beta = Vec3(1, -1, 2).normalized();
  double prev = -1;
  for (double R : {1e2, 1e3, 1e4}) {
    const double v = (eval_field(sol, R * beta) - kWave(R * beta)).norm() * R;
    if (prev > 0) CHECK(v == doctest::Approx(prev).epsilon(0.05));
    prev = v;
  }
}

TEST_CASE("assembly is deterministic") {
  const ParticleCloud cloud = lattice(2, 0.15, 0.01, cplx(3, 0.1), Vec3(0.2, 0.2, 0.2));
  const Eigen::MatrixXcd A = assemble(cloud, kWave, kBg, MomentMode::Quadrature).matrix();
  const Eigen::MatrixXcd B = assemble(cloud, kWave, kBg, MomentMode::Quadrature).matrix();
  CHECK((A.array() == B.array()).all());
}
