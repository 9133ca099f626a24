#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <type_traits>
#include <vector>

#include "smallscat/types.hpp"

namespace smallscat {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached n-point rule (n >= 1). Thread-safe.
const GaussLegendre& gauss_legendre(int n);

struct Integral1D {
  cplx value;
  double error;
};

/// Adaptive Gauss-Kronrod integration of a complex integrand over [lo, hi].
/// `breakpoints` (inside (lo, hi), ascending) split the range before
/// adaptation starts; use them to flag boundary layers.
Integral1D integrate(const std::function<cplx(double)>& f, double lo, double hi,
                     double rel_tol = 1e-10,
                     std::span<const double> breakpoints = {});

namespace detail {
template <class R>
R zero_value() {
  if constexpr (std::is_arithmetic_v<R> || std::is_same_v<R, cplx>) {
    return R(0);
  } else {
    return R::Zero();
  }
}
}  // namespace detail

/// Tensor-product quadrature over the ball B(center, a): Gauss-Legendre in r
/// (mapped to [0, a]) and in cos(theta), trapezoid in phi with
/// 2*angular_order points. f may return a scalar or an Eigen vector.
template <class F>
auto ball_quadrature(F&& f, const Vec3& center, double a, int radial_order,
                     int angular_order) {
  using R = std::decay_t<decltype(f(center))>;
  const GaussLegendre& gr = gauss_legendre(radial_order);
  const GaussLegendre& gm = gauss_legendre(angular_order);
  const int n_phi = 2 * angular_order;
  const double w_phi = 2.0 * kPi / n_phi;

  std::vector<Vec3> dirs;
  std::vector<double> dir_w;
  dirs.reserve(static_cast<std::size_t>(angular_order) * n_phi);
  for (int j = 0; j < angular_order; ++j) {
    const double mu = gm.nodes[j];
    const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
    for (int l = 0; l < n_phi; ++l) {
      const double phi = w_phi * (l + 0.5);
      dirs.emplace_back(s * std::cos(phi), s * std::sin(phi), mu);
      dir_w.push_back(gm.weights[j] * w_phi);
    }
  }

  R total = detail::zero_value<R>();
  for (int i = 0; i < radial_order; ++i) {
    const double r = 0.5 * a * (1.0 + gr.nodes[i]);
    const double wr = 0.5 * a * gr.weights[i] * r * r;
    R shell = detail::zero_value<R>();
    for (std::size_t d = 0; d < dirs.size(); ++d) {
      const Vec3 x = center + r * dirs[d];
      shell += dir_w[d] * f(x);
    }
    total += wr * shell;
  }
  return total;
}

template <class F>
auto ball_quadrature(F&& f, const Vec3& center, double a, int order) {
  return ball_quadrature(std::forward<F>(f), center, a, order, order);
}

}  // namespace smallscat
