#include "smallscat/moments.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <vector>

#include "smallscat/error.hpp"
#include "smallscat/quadrature.hpp"

namespace smallscat {

MomentMode default_moment_mode(std::size_t particle_count) {
  return particle_count <= kQuadratureParticleLimit ? MomentMode::Quadrature
                                                    : MomentMode::Midpoint;
}

namespace {

// Radial breakpoints (in r) bracketing the layer near r = a where |p| drops
// below k^2.
std::vector<double> radial_breaks(const RadialProfile& prof, double k) {
  std::vector<double> out;
  const double amp = std::abs(prof.amplitude());
  if (amp == 0.0) return out;
  const double w = k / std::sqrt(amp);
  for (double f : {10.0, 1.0}) {
    const double t = 1.0 - f * w;
    if (t > 0.05 && t < 1.0) out.push_back(t * prof.radius());
  }
  return out;
}

struct RadialNodes {
  std::vector<double> r;
  std::vector<double> w;  // includes the r^2 Jacobian
  std::vector<cplx> p;
  std::vector<cplx> f;  // p' / (k^2 + p)
  std::vector<double> abs_wp, abs_wf;
};

RadialNodes radial_nodes(const RadialProfile& prof, double k, int order) {
  std::vector<double> edges{0.0};
  for (double b : radial_breaks(prof, k)) edges.push_back(b);
  edges.push_back(prof.radius());
  const GaussLegendre& gl = gauss_legendre(order);
  RadialNodes out;
  for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
    const double lo = edges[s], hi = edges[s + 1];
    for (int i = 0; i < order; ++i) {
      const double r = lo + 0.5 * (hi - lo) * (1.0 + gl.nodes[i]);
      out.r.push_back(r);
      out.w.push_back(0.5 * (hi - lo) * gl.weights[i] * r * r);
      out.p.push_back(prof.p(r));
      out.f.push_back(prof.q_radial(r, k));
      out.abs_wp.push_back(out.w.back() * std::abs(out.p.back()));
      out.abs_wf.push_back(out.w.back() * std::abs(out.f.back()));
    }
  }
  return out;
}

struct Directions {
  std::vector<Vec3> d;
  std::vector<double> w;
};

Directions build_directions(int order) {
  const GaussLegendre& gm = gauss_legendre(order);
  const int n_phi = 2 * order;
  const double w_phi = 2.0 * kPi / n_phi;
  Directions out;
  for (int j = 0; j < order; ++j) {
    const double mu = gm.nodes[j];
    const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
    for (int l = 0; l < n_phi; ++l) {
      const double phi = w_phi * (l + 0.5);
      out.d.emplace_back(s * std::cos(phi), s * std::sin(phi), mu);
      out.w.push_back(gm.weights[j] * w_phi);
    }
  }
  return out;
}

// Cached per order; the rule is shared by every particle.
const Directions& sphere_directions(int order) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<Directions>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<Directions>(build_directions(order));
  return *slot;
}

// A quadrature value with the L1 size of each integrand, which sets the
// roundoff floor when an integral cancels to (near) zero.
template <class T>
struct Estimate {
  T value;
  double mag[4] = {0.0, 0.0, 0.0, 0.0};
};

Estimate<MomentBlock> integrate_cross(const Particle& part, const Vec3& x_m, double k, int nr,
                                      int na) {
  const RadialNodes rn = radial_nodes(part.profile(), k, nr);
  const Directions& dirs = sphere_directions(na);
  const Vec3 rel = part.center() - x_m;
  Estimate<MomentBlock> est;
  MomentBlock& m = est.value;
  for (std::size_t a = 0; a < dirs.d.size(); ++a) {
    const Vec3& dir = dirs.d[a];
    cplx sa = 0.0, sd = 0.0, sc = 0.0;
    cplx sb[3] = {0.0, 0.0, 0.0};
    double mp = 0.0, mf = 0.0, mpg = 0.0, mfg = 0.0;
    for (std::size_t i = 0; i < rn.r.size(); ++i) {
      const Vec3 diff = rel + rn.r[i] * dir;
      const double r = diff.norm();
      const double inv = 1.0 / r;
      const double c = std::cos(k * r), s = std::sin(k * r);
      const cplx g(c * inv / (4.0 * kPi), s * inv / (4.0 * kPi));
      // radial factor of grad g: g (ik - 1/r) / r
      const cplx gr = g * cplx(-inv, k) * inv;
      const cplx wp = rn.w[i] * rn.p[i];
      const cplx wf = rn.w[i] * rn.f[i];
      sa += wp * g;
      const cplx wpg = wp * gr;
      sb[0] += wpg * diff[0];
      sb[1] += wpg * diff[1];
      sb[2] += wpg * diff[2];
      sc += wf * g;
      sd += wf * gr * dir.dot(diff);
      const double ag = inv / (4.0 * kPi), agr = ag * std::sqrt(inv * inv + k * k);
      mp += rn.abs_wp[i] * ag;
      mpg += rn.abs_wp[i] * agr;
      mf += rn.abs_wf[i] * ag;
      mfg += rn.abs_wf[i] * agr;
    }
    const double w = dirs.w[a];
    m.a += w * sa;
    for (int l = 0; l < 3; ++l) {
      m.B[l] += w * sb[l];
      m.C[l] += (w * dir[l]) * sc;
    }
    m.d += w * sd;
    est.mag[0] += w * mp;
    est.mag[1] += w * mpg;
    est.mag[2] += w * mf;
    est.mag[3] += w * mfg;
  }
  return est;
}

Estimate<SourceMoments> integrate_source(const Particle& part, const PlaneWave& pw, double k,
                                         int nr, int na) {
  const RadialNodes rn = radial_nodes(part.profile(), k, nr);
  const Directions& dirs = sphere_directions(na);
  Estimate<SourceMoments> est;
  SourceMoments& s = est.value;
  for (std::size_t a = 0; a < dirs.d.size(); ++a) {
    const Vec3& dir = dirs.d[a];
    const CVec3 cdir = complexify(dir);
    SourceMoments shell;
    double mp = 0.0, mf = 0.0;
    for (std::size_t i = 0; i < rn.r.size(); ++i) {
      const CVec3 e0 = pw(part.center() + rn.r[i] * dir);
      shell.V0 += (rn.w[i] * rn.p[i]) * e0;
      shell.nu0 += rn.w[i] * rn.f[i] * bdot(cdir, e0);
      mp += rn.w[i] * std::abs(rn.p[i]) * e0.norm();
      mf += rn.w[i] * std::abs(rn.f[i]) * e0.norm();
    }
    s.V0 += dirs.w[a] * shell.V0;
    s.nu0 += dirs.w[a] * shell.nu0;
    est.mag[0] += dirs.w[a] * mp;
    est.mag[1] += dirs.w[a] * mf;
  }
  return est;
}

constexpr double kRoundoffFloor = 1e-13;

bool close(cplx x, cplx y, double tol, double mag) {
  return std::abs(x - y) <= std::max(tol * std::max(std::abs(x), std::abs(y)),
                                     kRoundoffFloor * mag);
}
bool close(const CVec3& x, const CVec3& y, double tol, double mag) {
  return (x - y).norm() <= std::max(tol * std::max(x.norm(), y.norm()), kRoundoffFloor * mag);
}
bool agree(const Estimate<MomentBlock>& u, const Estimate<MomentBlock>& v, double tol) {
  return close(u.value.a, v.value.a, tol, v.mag[0]) && close(u.value.B, v.value.B, tol, v.mag[1]) &&
         close(u.value.C, v.value.C, tol, v.mag[2]) && close(u.value.d, v.value.d, tol, v.mag[3]);
}
bool agree(const Estimate<SourceMoments>& u, const Estimate<SourceMoments>& v, double tol) {
  return close(u.value.V0, v.value.V0, tol, v.mag[0]) &&
         close(u.value.nu0, v.value.nu0, tol, v.mag[1]);
}

// Doubles the radial order until two successive values agree, then the
// angular order.
template <class Eval>
auto adapt(Eval eval, const BallQuadratureOptions& opts) {
  int nr = opts.initial_order, na = opts.initial_order;
  auto prev = eval(nr, na);
  while (nr * 2 <= opts.max_order) {
    auto next = eval(nr * 2, na);
    nr *= 2;
    const bool ok = agree(prev, next, opts.rel_tol);
    prev = next;
    if (ok) break;
  }
  while (na * 2 <= opts.max_order) {
    auto next = eval(nr, na * 2);
    na *= 2;
    const bool ok = agree(prev, next, opts.rel_tol);
    prev = next;
    if (ok) break;
  }
  return prev.value;
}

}  // namespace

MomentBlock self_moments(const Particle& part, double k) {
  const RadialProfile& prof = part.profile();
  MomentBlock m;
  if (prof.gamma() == cplx(0.0)) return m;
  const std::vector<double> breaks = radial_breaks(prof, k);
  const double a = prof.radius();
  m.a = integrate([&](double r) { return prof.p(r) * r * std::exp(kI * (k * r)); }, 0.0, a,
                  1e-10, breaks)
            .value;
  m.d = integrate(
            [&](double r) {
              return prof.q_radial(r, k) * std::exp(kI * (k * r)) * (kI * (k * r) - 1.0);
            },
            0.0, a, 1e-10, breaks)
            .value;
  return m;
}

ParticleScalars particle_scalars(const Particle& part, double k) {
  const RadialProfile& prof = part.profile();
  ParticleScalars s;
  if (prof.gamma() == cplx(0.0)) return s;
  s.j = prof.shape().is_unit() ? j_total(prof, JMethod::ClosedForm)
                               : j_total(prof, JMethod::Quadrature);
  s.dipole = 4.0 * kPi / 3.0 * dipole_weight(prof, k);
  return s;
}

MomentBlock midpoint_cross_moments(const ParticleScalars& s, const Vec3& x_j, const Vec3& x_m,
                                   double k) {
  const cplx g = green(x_j, x_m, k);
  const CVec3 dg = grad_green(x_j, x_m, k);
  MomentBlock m;
  m.a = g * s.j;
  m.B = s.j * dg;
  m.C = s.dipole * dg;
  // Laplacian of g is -k^2 g away from the source point.
  m.d = -k * k * s.dipole * g;
  return m;
}

MomentBlock cross_moments(const Particle& part_j, const Vec3& x_m, double k, MomentMode mode,
                          const BallQuadratureOptions& opts) {
  const double dist = (part_j.center() - x_m).norm();
  if (dist <= 2.0 * part_j.radius()) {
    std::ostringstream os;
    os << "source point at distance " << dist << " <= 2a from the particle center";
    fail(ErrorCode::TooClose, os.str());
  }
  if (part_j.profile().gamma() == cplx(0.0)) return MomentBlock{};
  if (mode == MomentMode::Midpoint)
    return midpoint_cross_moments(particle_scalars(part_j, k), part_j.center(), x_m, k);
  return adapt([&](int nr, int na) { return integrate_cross(part_j, x_m, k, nr, na); }, opts);
}

SourceMoments source_moments(const Particle& part_j, const PlaneWave& pw, MomentMode mode,
                             const BallQuadratureOptions& opts) {
  if (part_j.profile().gamma() == cplx(0.0) || pw.amplitude().norm() == 0.0)
    return SourceMoments{};
  const double k = pw.k();
  if (mode == MomentMode::Midpoint) {
    const ParticleScalars s = particle_scalars(part_j, k);
    const CVec3 e0 = pw(part_j.center());
    SourceMoments out;
    out.V0 = s.j * e0;
    // Trace of the Jacobian of E0 at the center, i.e. div E0 = ik alpha.E0.
    out.nu0 = s.dipole * kI * k * bdot(complexify(pw.alpha()), e0);
    return out;
  }
  return adapt([&](int nr, int na) { return integrate_source(part_j, pw, k, nr, na); }, opts);
}

}  // namespace smallscat
