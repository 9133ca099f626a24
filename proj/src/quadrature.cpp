#include "smallscat/quadrature.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <queue>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include "smallscat/error.hpp"

namespace smallscat {

namespace {

GaussLegendre build_rule(int n) {
  // legendre_p_zeros returns the non-negative roots in ascending order.
  const std::vector<double> pos = boost::math::legendre_p_zeros<double>(n);
  GaussLegendre rule;
  auto weight = [n](double x) {
    const double dp = boost::math::legendre_p_prime<double>(n, x);
    return 2.0 / ((1.0 - x * x) * dp * dp);
  };
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) {
    if (*it == 0.0) continue;
    rule.nodes.push_back(-*it);
    rule.weights.push_back(weight(*it));
  }
  for (double x : pos) {
    rule.nodes.push_back(x);
    rule.weights.push_back(weight(x));
  }
  return rule;
}

}  // namespace

const GaussLegendre& gauss_legendre(int n) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "Gauss-Legendre order must be >= 1");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussLegendre>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussLegendre>(build_rule(n));
  return *slot;
}

Integral1D integrate(const std::function<cplx(double)>& f, double lo, double hi,
                     double rel_tol, std::span<const double> breakpoints) {
  using boost::math::quadrature::gauss_kronrod;
  // Global adaptive bisection: the worst panel is split until the summed
  // error estimate meets the tolerance. Per-panel tolerances (Boost's own
  // recursion) never terminate once roundoff dominates a narrow panel.
  constexpr std::size_t kMaxPanels = 4000;
  struct Panel {
    double lo, hi;
    cplx value;
    double error;
    bool operator<(const Panel& o) const { return error < o.error; }
  };
  auto eval = [&f](double a, double b) {
    double err = 0.0;
    const cplx v = gauss_kronrod<double, 31>::integrate([&f](double t) { return f(t); }, a, b,
                                                         0, 0.0, &err);
    return Panel{a, b, v, err};
  };

  std::vector<double> edges{lo};
  for (double b : breakpoints)
    if (b > edges.back() && b < hi) edges.push_back(b);
  edges.push_back(hi);

  std::priority_queue<Panel> queue;
  cplx total = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    Panel p = eval(edges[i], edges[i + 1]);
    total += p.value;
    error += p.error;
    queue.push(p);
  }
  while (error > rel_tol * std::abs(total) && error > 1e-300 && queue.size() < kMaxPanels) {
    Panel worst = queue.top();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi)) break;
    queue.pop();
    const Panel left = eval(worst.lo, mid), right = eval(mid, worst.hi);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    queue.push(left);
    queue.push(right);
  }
  // Re-sum to shed the drift of the incremental updates.
  total = 0.0;
  error = 0.0;
  std::vector<Panel> panels;
  while (!queue.empty()) {
    panels.push_back(queue.top());
    queue.pop();
  }
  std::sort(panels.begin(), panels.end(),
            [](const Panel& x, const Panel& y) { return x.lo < y.lo; });
  for (const Panel& p : panels) {
    total += p.value;
    error += p.error;
  }
  return Integral1D{total, error};
}

}  // namespace smallscat
