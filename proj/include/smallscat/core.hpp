#pragma once

#include <limits>
#include <vector>

#include "smallscat/profile.hpp"
#include "smallscat/types.hpp"

namespace smallscat {

/// Homogeneous exterior medium. k = omega sqrt(epsilon mu).
class Background {
 public:
  Background(double omega, double epsilon, double mu);

  /// Unit epsilon and mu; omega = k.
  static Background from_wavenumber(double k);

  double k() const { return k_; }
  double omega() const { return omega_; }
  double epsilon() const { return epsilon_; }
  double mu() const { return mu_; }

 private:
  double k_;
  double omega_;
  double epsilon_;
  double mu_;
};

/// E0(x) = amplitude * exp(i k alpha.x), alpha a unit vector orthogonal to the
/// amplitude.
class PlaneWave {
 public:
  PlaneWave(const Vec3& alpha, const CVec3& amplitude, double k);

  const Vec3& alpha() const { return alpha_; }
  const CVec3& amplitude() const { return amplitude_; }
  double k() const { return k_; }

  CVec3 operator()(const Vec3& x) const;
  /// curl E0 = i k alpha x E0.
  CVec3 curl(const Vec3& x) const;

 private:
  Vec3 alpha_;
  CVec3 amplitude_;
  double k_;
};

CVec3 plane_wave_eval(const PlaneWave& pw, const Vec3& x);

struct Box {
  Vec3 lo;
  Vec3 hi;

  Vec3 extent() const { return hi - lo; }
  double volume() const { return extent().prod(); }
  bool contains(const Vec3& x, double tol = 0.0) const;
  /// Euclidean distance from x to the box (0 inside).
  double distance(const Vec3& x) const;
};

class Particle {
 public:
  Particle(const Vec3& center, RadialProfile profile);

  const Vec3& center() const { return center_; }
  double radius() const { return profile_.radius(); }
  const RadialProfile& profile() const { return profile_; }

 private:
  Vec3 center_;
  RadialProfile profile_;
};

/// Ordered set of non-overlapping balls inside an axis-aligned domain.
class ParticleCloud {
 public:
  /// Throws Overlap when two balls intersect and InvalidArgument when a
  /// center lies outside the domain.
  ParticleCloud(std::vector<Particle> particles, Box domain);

  const std::vector<Particle>& particles() const { return particles_; }
  const Box& domain() const { return domain_; }
  std::size_t size() const { return particles_.size(); }
  bool empty() const { return particles_.empty(); }
  const Particle& operator[](std::size_t i) const { return particles_[i]; }

  double max_radius() const;
  /// Smallest pairwise center distance; +inf for fewer than two particles.
  double min_center_distance() const { return d_min_; }

 private:
  std::vector<Particle> particles_;
  Box domain_;
  double d_min_ = std::numeric_limits<double>::infinity();
};

/// Smallest pairwise distance between points (cell-list search).
double min_pairwise_distance(const std::vector<Vec3>& points);

struct DiagnosticsReport {
  double ka = 0.0;
  double a_over_d = 0.0;
  double d_min = std::numeric_limits<double>::infinity();
  double error_budget = 0.0;  // a/d_min + ka
  bool ka_warn = false;
  bool a_over_d_warn = false;

  bool pass() const { return !ka_warn && !a_over_d_warn; }
};

inline constexpr double kSmallnessThreshold = 0.1;

DiagnosticsReport validate_scene(const ParticleCloud& cloud, const Background& bg);
/// Same checks on a raw particle list; throws Overlap when two balls intersect.
DiagnosticsReport validate_scene(const std::vector<Particle>& particles, const Background& bg);

// Free-space kernel g(x, y) = exp(ik|x-y|) / (4 pi |x-y|) and derivatives.
cplx green(const Vec3& x, const Vec3& y, double k);
/// grad_x g(x, y) = g (ik - 1/r) (x - y)/r.
CVec3 grad_green(const Vec3& x, const Vec3& y, double k);

}  // namespace smallscat
