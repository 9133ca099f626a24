#include "smallscat/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "smallscat/error.hpp"

namespace smallscat {

Background::Background(double omega, double epsilon, double mu)
    : omega_(omega), epsilon_(epsilon), mu_(mu) {
  if (!(omega > 0.0 && epsilon > 0.0 && mu > 0.0))
    fail(ErrorCode::InvalidArgument, "omega, epsilon and mu must be > 0");
  k_ = omega * std::sqrt(epsilon * mu);
}

Background Background::from_wavenumber(double k) {
  if (!(k > 0.0)) fail(ErrorCode::InvalidArgument, "wavenumber must be > 0");
  return Background(k, 1.0, 1.0);
}

PlaneWave::PlaneWave(const Vec3& alpha, const CVec3& amplitude, double k)
    : alpha_(alpha), amplitude_(amplitude), k_(k) {
  if (!(k > 0.0)) fail(ErrorCode::InvalidArgument, "wavenumber must be > 0");
  if (!alpha.allFinite() || !is_finite(amplitude))
    fail(ErrorCode::InvalidArgument, "plane wave data must be finite");
  if (std::abs(alpha.norm() - 1.0) > 1e-12)
    fail(ErrorCode::InvalidArgument, "incident direction must be a unit vector");
  if (std::abs(bdot(amplitude, complexify(alpha))) > 1e-12 * amplitude.norm())
    fail(ErrorCode::InvalidArgument, "amplitude must be orthogonal to the direction");
}

CVec3 PlaneWave::operator()(const Vec3& x) const {
  return amplitude_ * std::exp(kI * (k_ * alpha_.dot(x)));
}

CVec3 PlaneWave::curl(const Vec3& x) const {
  return kI * k_ * bcross(complexify(alpha_), (*this)(x));
}

CVec3 plane_wave_eval(const PlaneWave& pw, const Vec3& x) { return pw(x); }

bool Box::contains(const Vec3& x, double tol) const {
  for (int i = 0; i < 3; ++i)
    if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
  return true;
}

double Box::distance(const Vec3& x) const {
  Vec3 d;
  for (int i = 0; i < 3; ++i) d[i] = std::max({lo[i] - x[i], 0.0, x[i] - hi[i]});
  return d.norm();
}

Particle::Particle(const Vec3& center, RadialProfile profile)
    : center_(center), profile_(std::move(profile)) {
  if (!center.allFinite()) fail(ErrorCode::InvalidArgument, "particle center must be finite");
}

double min_pairwise_distance(const std::vector<Vec3>& points) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = points.size();
  if (n < 2) return best;
  if (n <= 64) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) best = std::min(best, (points[i] - points[j]).norm());
    return best;
  }
  Vec3 lo = points[0], hi = points[0];
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  // Cell size from the mean spacing; neighbours within one cell are searched,
  // and the search radius grows if no pair is found that close.
  const Vec3 ext = (hi - lo).cwiseMax(1e-300);
  double cell = std::cbrt(ext.prod() / static_cast<double>(n));
  if (!(cell > 0.0)) cell = ext.maxCoeff() / std::cbrt(static_cast<double>(n));
  for (;;) {
    std::unordered_map<long long, std::vector<std::size_t>> grid;
    auto key = [&](long long ix, long long iy, long long iz) {
      return (ix * 2000003LL + iy) * 2000003LL + iz;
    };
    auto index = [&](const Vec3& p, int axis) {
      return static_cast<long long>(std::floor((p[axis] - lo[axis]) / cell));
    };
    for (std::size_t i = 0; i < n; ++i)
      grid[key(index(points[i], 0), index(points[i], 1), index(points[i], 2))].push_back(i);
    for (std::size_t i = 0; i < n; ++i) {
      const long long ix = index(points[i], 0), iy = index(points[i], 1), iz = index(points[i], 2);
      for (long long dx = -1; dx <= 1; ++dx)
        for (long long dy = -1; dy <= 1; ++dy)
          for (long long dz = -1; dz <= 1; ++dz) {
            auto it = grid.find(key(ix + dx, iy + dy, iz + dz));
            if (it == grid.end()) continue;
            for (std::size_t j : it->second)
              if (j > i) best = std::min(best, (points[i] - points[j]).norm());
          }
    }
    if (best <= cell) return best;
    cell *= 2.0;
  }
}

ParticleCloud::ParticleCloud(std::vector<Particle> particles, Box domain)
    : particles_(std::move(particles)), domain_(domain) {
  std::vector<Vec3> centers;
  centers.reserve(particles_.size());
  for (std::size_t i = 0; i < particles_.size(); ++i) {
    const auto& p = particles_[i];
    if (!domain_.contains(p.center(), 1e-12 * (1.0 + domain_.extent().norm()))) {
      std::ostringstream os;
      os << "particle " << i << " lies outside the domain";
      fail(ErrorCode::InvalidArgument, os.str());
    }
    centers.push_back(p.center());
  }
  d_min_ = min_pairwise_distance(centers);
  const double a = max_radius();
  if (particles_.size() > 1 && d_min_ <= 2.0 * a) {
    std::ostringstream os;
    os << "particles overlap: minimum center distance " << d_min_ << " <= 2a = " << 2.0 * a;
    fail(ErrorCode::Overlap, os.str());
  }
}

double ParticleCloud::max_radius() const {
  double a = 0.0;
  for (const auto& p : particles_) a = std::max(a, p.radius());
  return a;
}

DiagnosticsReport validate_scene(const ParticleCloud& cloud, const Background& bg) {
  DiagnosticsReport r;
  const double a = cloud.max_radius();
  r.d_min = cloud.min_center_distance();
  r.ka = bg.k() * a;
  r.a_over_d = std::isfinite(r.d_min) ? a / r.d_min : 0.0;
  r.error_budget = r.a_over_d + r.ka;
  r.ka_warn = r.ka > kSmallnessThreshold;
  r.a_over_d_warn = r.a_over_d > kSmallnessThreshold;
  return r;
}

DiagnosticsReport validate_scene(const std::vector<Particle>& particles, const Background& bg) {
  Box bounds{Vec3::Constant(std::numeric_limits<double>::infinity()),
             Vec3::Constant(-std::numeric_limits<double>::infinity())};
  for (const auto& p : particles) {
    bounds.lo = bounds.lo.cwiseMin(p.center());
    bounds.hi = bounds.hi.cwiseMax(p.center());
  }
  if (particles.empty()) bounds = Box{Vec3::Zero(), Vec3::Zero()};
  return validate_scene(ParticleCloud(particles, bounds), bg);
}

cplx green(const Vec3& x, const Vec3& y, double k) {
  const double r = (x - y).norm();
  return std::exp(kI * (k * r)) / (4.0 * kPi * r);
}

CVec3 grad_green(const Vec3& x, const Vec3& y, double k) {
  const Vec3 d = x - y;
  const double r = d.norm();
  const cplx g = std::exp(kI * (k * r)) / (4.0 * kPi * r);
  return (g * (kI * k - 1.0 / r) / r) * complexify(d);
}

}  // namespace smallscat
