#include <cmath>
#include <random>

#include "doctest.h"
#include "smallscat/error.hpp"
#include "smallscat/moments.hpp"
#include "smallscat/quadrature.hpp"

using namespace smallscat;

namespace {

bool rel_close(cplx x, cplx y, double tol) {
  return std::abs(x - y) <= tol * std::max(std::abs(x), std::abs(y));
}
bool rel_close(const CVec3& x, const CVec3& y, double tol) {
  return (x - y).norm() <= tol * std::max(x.norm(), y.norm());
}

// Radial integral of f(r) 4 pi r^2 w(kr) over [0, a] with a fine fixed rule.
cplx radial_mean(const std::function<cplx(double)>& f, double a,
                 const std::function<double(double)>& w) {
  const GaussLegendre& gl = gauss_legendre(200);
  cplx s = 0;
  const int panels = 8;
  for (int p = 0; p < panels; ++p) {
    const double lo = a * p / panels, hi = a * (p + 1) / panels;
    for (int i = 0; i < 200; ++i) {
      const double r = lo + 0.5 * (hi - lo) * (1 + gl.nodes[i]);
      s += 0.5 * (hi - lo) * gl.weights[i] * 4 * kPi * r * r * f(r) * w(r);
    }
  }
  return s;
}

}  // namespace

TEST_CASE("ball quadrature examples") {
  const Vec3 c(0.3, -1, 2);
  CHECK(ball_quadrature([](const Vec3&) { return 1.0; }, c, 0.5, 2) ==
        doctest::Approx(4 * kPi / 3 * 0.125).epsilon(1e-12));
  const Vec3 m = ball_quadrature([&](const Vec3& x) -> Vec3 { return x - c; }, c, 1.0, 4);
  CHECK(m.norm() < 1e-14);
  CHECK(ball_quadrature([&](const Vec3& x) { return (x - c).squaredNorm(); }, c, 1.0, 4) ==
        doctest::Approx(4 * kPi / 5).epsilon(1e-12));
}

TEST_CASE("self moments") {
  const double k = 1.0;
  SUBCASE("zero profile") {
    const MomentBlock m = self_moments(Particle(Vec3::Zero(), RadialProfile(0.0, 1.0, 0.01)), k);
    CHECK(std::abs(m.a) == 0.0);
    CHECK(std::abs(m.d) == 0.0);
    CHECK(m.B.norm() == 0.0);
    CHECK(m.C.norm() == 0.0);
  }
  SUBCASE("against ball quadrature") {
    const Vec3 c(0.2, 0.1, -0.3);
    const Particle part(c, RadialProfile(1.0, 1.0, 0.01));
    const RadialProfile& prof = part.profile();
    const MomentBlock m = self_moments(part, k);
    CHECK(m.B.norm() == 0.0);
    CHECK(m.C.norm() == 0.0);

    const cplx a_ref = ball_quadrature(
        [&](const Vec3& x) { return prof.p((x - c).norm()) * green(x, c, k); }, c, 0.01, 40);
    CHECK(rel_close(m.a, a_ref, 1e-8));
    const cplx d_ref = ball_quadrature(
        [&](const Vec3& x) { return bdot(q_eval(prof, x, c, k), grad_green(x, c, k)); }, c,
        0.01, 40);
    CHECK(rel_close(m.d, d_ref, 1e-8));

    const CVec3 b_ref = ball_quadrature(
        [&](const Vec3& x) -> CVec3 { return prof.p((x - c).norm()) * grad_green(x, c, k); }, c,
        0.01, 20);
    CHECK(b_ref.norm() < 1e-10);
    const CVec3 c_ref = ball_quadrature(
        [&](const Vec3& x) -> CVec3 { return q_eval(prof, x, c, k) * green(x, c, k); }, c, 0.01,
        20);
    CHECK(c_ref.norm() < 1e-10);
  }
  SUBCASE("scaling in gamma") {
    const Particle p1(Vec3::Zero(), RadialProfile(cplx(2, 1), 1.0, 0.01));
    const Particle p2(Vec3::Zero(), RadialProfile(cplx(4, 2), 1.0, 0.01));
    const MomentBlock m1 = self_moments(p1, k), m2 = self_moments(p2, k);
    CHECK(rel_close(m2.a, 2.0 * m1.a, 1e-13));

    const Particle big1(Vec3::Zero(), RadialProfile(30.0, 1.0, 0.01));
    const Particle big2(Vec3::Zero(), RadialProfile(60.0, 1.0, 0.01));
    CHECK(!rel_close(self_moments(big2, k).d, 2.0 * self_moments(big1, k).d, 0.1));

    const Particle tiny1(Vec3::Zero(), RadialProfile(1e-6, 1.0, 0.01));
    const Particle tiny2(Vec3::Zero(), RadialProfile(2e-6, 1.0, 0.01));
    CHECK(rel_close(self_moments(tiny2, k).d, 2.0 * self_moments(tiny1, k).d, 1e-3));
  }
  SUBCASE("smallness") {
    // |d_jj| is about |ln(1 + p(0)/k^2)|, so it stays below one only while the
    // peak potential is comparable to k^2.
    for (double a : {1e-3, 1e-2, 1e-1})
      for (double kappa : {0.5, 1.0, 2.0})
        for (double peak : {0.1, 1.0}) {
          const cplx gamma = peak * 4 * kPi * std::pow(a, kappa) * k * k;
          const MomentBlock m =
              self_moments(Particle(Vec3::Zero(), RadialProfile(gamma, kappa, a)), k);
          CHECK(std::abs(m.a) < 1.0);
          CHECK(std::abs(m.d) < 1.0);
        }
    const MomentBlock strong =
        self_moments(Particle(Vec3::Zero(), RadialProfile(30.0, 1.0, 1e-3)), k);
    CHECK(std::abs(strong.a) < 1.0);
    CHECK(std::abs(strong.d) > 1.0);
  }
}

TEST_CASE("cross moments by quadrature match spherical-mean identities") {
  const double k = 1.7, a = 0.02;
  const Particle part(Vec3(0.1, 0.2, 0.3), RadialProfile(cplx(5, 1), 1.0, a));
  const RadialProfile& prof = part.profile();
  const Vec3 xm(0.25, 0.1, 0.2);
  const MomentBlock m = cross_moments(part, xm, k, MomentMode::Quadrature);

  auto sinc = [&](double r) { return std::sin(k * r) / (k * r); };
  auto j1k = [&](double r) {
    const double z = k * r;
    return (std::sin(z) / (z * z) - std::cos(z) / z) / k;
  };
  const cplx P0 = radial_mean([&](double r) { return prof.p(r); }, a, sinc);
  const cplx Q1 = radial_mean([&](double r) { return prof.q_radial(r, k); }, a, j1k);
  const cplx g = green(part.center(), xm, k);
  const CVec3 dg = grad_green(part.center(), xm, k);
  CHECK(rel_close(m.a, g * P0, 1e-8));
  CHECK(rel_close(m.B, P0 * dg, 1e-8));
  CHECK(rel_close(m.C, Q1 * dg, 1e-8));
  CHECK(rel_close(m.d, -k * k * Q1 * g, 1e-8));
}

TEST_CASE("cross moments errors and trivial cases") {
  const Particle part(Vec3::Zero(), RadialProfile(1.0, 1.0, 0.01));
  try {
    cross_moments(part, Vec3(0.015, 0, 0), 1.0, MomentMode::Quadrature);
    FAIL("expected TooClose");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooClose);
  }
  const Particle zero(Vec3::Zero(), RadialProfile(0.0, 1.0, 0.01));
  for (auto mode : {MomentMode::Midpoint, MomentMode::Quadrature}) {
    const MomentBlock m = cross_moments(zero, Vec3(1, 0, 0), 1.0, mode);
    CHECK(std::abs(m.a) + std::abs(m.d) + m.B.norm() + m.C.norm() == 0.0);
  }
}

TEST_CASE("midpoint versus quadrature") {
  SUBCASE("reference geometry") {
    const Particle part(Vec3::Zero(), RadialProfile(1.0, 1.0, 1e-3));
    const Vec3 xm(0.1, 0, 0);
    const MomentBlock q = cross_moments(part, xm, 1.0, MomentMode::Quadrature);
    const MomentBlock mp = cross_moments(part, xm, 1.0, MomentMode::Midpoint);
    CHECK(rel_close(mp.a, q.a, 1e-2));
  }
  SUBCASE("random geometries") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int n = 0; n < 10; ++n) {
      const double a = 0.002 + 0.008 * (u(rng) + 1) / 2;
      const double ratio = 0.005 + 0.045 * (u(rng) + 1) / 2;
      const double k = 0.5 + (u(rng) + 1);
      const Vec3 dir = Vec3(u(rng), u(rng), u(rng)).normalized();
      const Particle part(Vec3(u(rng), u(rng), u(rng)),
                          RadialProfile(cplx(10 * (u(rng) + 1), (u(rng) + 1)), 1.0, a));
      const Vec3 xm = part.center() + (a / ratio) * dir;
      const MomentBlock q = cross_moments(part, xm, k, MomentMode::Quadrature);
      const MomentBlock mp = cross_moments(part, xm, k, MomentMode::Midpoint);
      const double tol = 5 * ratio;
      CHECK(rel_close(mp.a, q.a, tol));
      CHECK(rel_close(mp.B, q.B, tol));
      CHECK(rel_close(mp.C, q.C, tol));
      CHECK(rel_close(mp.d, q.d, tol));
    }
  }
}

TEST_CASE("reflection flips the gradient moments") {
  const Particle part(Vec3(0.5, 0.5, 0.5), RadialProfile(cplx(3, 0.2), 1.0, 0.01));
  const Vec3 off(0.07, -0.03, 0.05);
  const MomentBlock m1 = cross_moments(part, part.center() + off, 1.0, MomentMode::Quadrature);
  const MomentBlock m2 = cross_moments(part, part.center() - off, 1.0, MomentMode::Quadrature);
  CHECK((m1.B + m2.B).norm() < 1e-10 * m1.B.norm());
  CHECK((m1.C + m2.C).norm() < 1e-10 * m1.C.norm());
  CHECK(rel_close(m1.a, m2.a, 1e-12));
  CHECK(rel_close(m1.d, m2.d, 1e-12));
}

TEST_CASE("source moments") {
  const PlaneWave pw(Vec3(0, 0, 1), CVec3(1, 0, 0), 1.0);
  SUBCASE("zero amplitude or zero profile") {
    const PlaneWave dark(Vec3(0, 0, 1), CVec3::Zero(), 1.0);
    const Particle part(Vec3::Zero(), RadialProfile(1.0, 1.0, 0.01));
    const Particle none(Vec3::Zero(), RadialProfile(0.0, 1.0, 0.01));
    for (auto mode : {MomentMode::Midpoint, MomentMode::Quadrature}) {
      auto s = source_moments(part, dark, mode);
      CHECK(s.V0.norm() + std::abs(s.nu0) == 0.0);
      s = source_moments(none, pw, mode);
      CHECK(s.V0.norm() + std::abs(s.nu0) == 0.0);
    }
  }
  SUBCASE("V0 midpoint within O(ka)") {
    const Particle part(Vec3(0.1, 0.2, 0.7), RadialProfile(2.0, 1.0, 1e-3));
    const auto q = source_moments(part, pw, MomentMode::Quadrature);
    const auto m = source_moments(part, pw, MomentMode::Midpoint);
    CHECK(rel_close(m.V0, q.V0, 1e-3));
    // Exact for a radial profile: E0(x_j) int p sinc(kr).
    const cplx P0 = radial_mean([&](double r) { return part.profile().p(r); }, 1e-3,
                                [](double r) { return std::sin(r) / r; });
    CHECK(rel_close(q.V0, P0 * pw(part.center()), 1e-8));
  }
  SUBCASE("nu0 vanishes for a transverse wave") {
    for (double a : {1e-2, 1e-3}) {
      const Particle part(Vec3(0.1, 0.2, 0.7), RadialProfile(2.0, 1.0, a));
      const auto q = source_moments(part, pw, MomentMode::Quadrature);
      CHECK(std::abs(q.nu0) <= std::pow(a, 4) * std::abs(std::log(a)));
      const auto m = source_moments(part, pw, MomentMode::Midpoint);
      CHECK(std::abs(m.nu0) < 1e-15);
    }
  }
}

TEST_CASE("default mode switches on particle count") {
  CHECK(default_moment_mode(200) == MomentMode::Quadrature);
  CHECK(default_moment_mode(201) == MomentMode::Midpoint);
}
