#include "smallscat/effective.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <random>
#include <sstream>

#include <fftw3.h>

#include "smallscat/error.hpp"
#include "smallscat/parallel.hpp"
#include "smallscat/quadrature.hpp"

namespace smallscat {

double DensitySpec::phi(double a) const { return std::pow(a, 3.0 - kappa); }

namespace {

// Piecewise-constant density on a fine cell grid with 3-D prefix sums, so the
// mass of any axis-aligned box is a trilinear lookup.
class MassTable {
 public:
  MassTable(const DensitySpec& spec, int res) : box_(spec.domain), res_(res) {
    const Vec3 ext = box_.extent();
    h_ = ext / res;
    const double vol = h_.prod();
    const std::size_t r1 = res + 1;
    prefix_.assign(r1 * r1 * r1, 0.0);
    std::vector<double> cell(static_cast<std::size_t>(res) * res * res);
    parallel_for(static_cast<std::size_t>(res), [&](std::size_t l) {
      for (int j = 0; j < res; ++j)
        for (int i = 0; i < res; ++i) {
          const Vec3 x = box_.lo + Vec3((i + 0.5) * h_[0], (j + 0.5) * h_[1], (l + 0.5) * h_[2]);
          const double n = spec.N(x);
          if (!(n >= 0.0) || !std::isfinite(n))
            fail(ErrorCode::InvalidArgument, "density N must be finite and >= 0");
          cell[(l * res + j) * res + i] = n * vol;
        }
    });
    for (int l = 1; l <= res; ++l)
      for (int j = 1; j <= res; ++j)
        for (int i = 1; i <= res; ++i) {
          prefix_[at(i, j, l)] = cell[((l - 1) * res + (j - 1)) * res + (i - 1)] +
                                 prefix_[at(i - 1, j, l)] + prefix_[at(i, j - 1, l)] +
                                 prefix_[at(i, j, l - 1)] - prefix_[at(i - 1, j - 1, l)] -
                                 prefix_[at(i - 1, j, l - 1)] - prefix_[at(i, j - 1, l - 1)] +
                                 prefix_[at(i - 1, j - 1, l - 1)];
        }
  }

  // Mass of [lo, x] (corner to point).
  double cumulative(const Vec3& x) const {
    double u[3];
    int c[3];
    for (int d = 0; d < 3; ++d) {
      double s = (x[d] - box_.lo[d]) / h_[d];
      s = std::clamp(s, 0.0, static_cast<double>(res_));
      c[d] = std::min(static_cast<int>(s), res_ - 1);
      u[d] = s - c[d];
    }
    double f = 0.0;
    for (int dl = 0; dl < 2; ++dl)
      for (int dj = 0; dj < 2; ++dj)
        for (int di = 0; di < 2; ++di) {
          const double w = (di ? u[0] : 1 - u[0]) * (dj ? u[1] : 1 - u[1]) * (dl ? u[2] : 1 - u[2]);
          if (w != 0.0) f += w * prefix_[at(c[0] + di, c[1] + dj, c[2] + dl)];
        }
    return f;
  }

  double mass(const Vec3& lo, const Vec3& hi) const {
    double m = 0.0;
    for (int s = 0; s < 8; ++s) {
      Vec3 p;
      int sign = 1;
      for (int d = 0; d < 3; ++d) {
        const bool upper = (s >> d) & 1;
        p[d] = upper ? hi[d] : lo[d];
        if (!upper) sign = -sign;
      }
      m += sign * cumulative(p);
    }
    return std::max(m, 0.0);
  }

 private:
  std::size_t at(int i, int j, int l) const {
    const std::size_t r1 = res_ + 1;
    return (static_cast<std::size_t>(l) * r1 + j) * r1 + i;
  }

  Box box_;
  int res_;
  Vec3 h_;
  std::vector<double> prefix_;
};

// Smallest t in [lo, hi] with F(t) >= target for a non-decreasing F.
template <class F>
double invert(F&& f, double lo, double hi, double target) {
  for (int it = 0; it < 100 && hi - lo > 1e-15 * (std::abs(lo) + std::abs(hi) + 1e-300); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < target) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double expected_count(const DensitySpec& spec, double a) {
  return integrate_box([&](const Vec3& x) { return cplx(spec.N(x)); }, spec.domain).real() /
         spec.phi(a);
}

ParticleCloud place_particles(const DensitySpec& spec, double a, const ComplexField& gamma,
                              const PlacementOptions& opts) {
  if (!(a > 0.0)) fail(ErrorCode::InvalidArgument, "radius must be > 0");
  if (!(spec.kappa > 0.0 && spec.kappa < 3.0))
    fail(ErrorCode::InvalidArgument, "kappa must lie in (0, 3)");
  if (opts.jitter < 0.0 || opts.jitter > 0.1)
    fail(ErrorCode::InvalidArgument, "jitter must lie in [0, 0.1]");
  const Box& D = spec.domain;
  const MassTable table(spec, opts.mass_resolution);
  const double phi = spec.phi(a);
  const double total = table.mass(D.lo, D.hi) / phi;

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  std::vector<Vec3> centers;
  if (total > 0.0) {
    const int n3 = std::max(1, static_cast<int>(std::lround(std::cbrt(total))));
    auto zmass = [&](double z) { return table.mass(D.lo, Vec3(D.hi[0], D.hi[1], z)) / phi; };
    std::vector<double> zb(n3 + 1);
    zb[0] = D.lo[2];
    zb[n3] = D.hi[2];
    for (int s = 1; s < n3; ++s) zb[s] = invert(zmass, D.lo[2], D.hi[2], total * s / n3);

    double acc = 0.0;
    for (int s = 0; s < n3; ++s) {
      const double z0 = zb[s], z1 = zb[s + 1];
      const double base_z = zmass(z0);
      const double wz = zmass(z1) - base_z;
      if (wz <= 0.0) continue;
      const double zc = invert(zmass, z0, z1, base_z + 0.5 * wz);
      const int n2 = std::max(1, static_cast<int>(std::lround(std::sqrt(wz))));
      auto ymass = [&](double y) {
        return table.mass(Vec3(D.lo[0], D.lo[1], z0), Vec3(D.hi[0], y, z1)) / phi;
      };
      std::vector<double> yb(n2 + 1);
      yb[0] = D.lo[1];
      yb[n2] = D.hi[1];
      for (int r = 1; r < n2; ++r) yb[r] = invert(ymass, D.lo[1], D.hi[1], wz * r / n2);
      for (int r = 0; r < n2; ++r) {
        const double y0 = yb[r], y1 = yb[r + 1];
        const double base_y = ymass(y0);
        const double wy = ymass(y1) - base_y;
        if (wy <= 0.0) continue;
        const double yc = invert(ymass, y0, y1, base_y + 0.5 * wy);
        auto xmass = [&](double x) {
          return table.mass(Vec3(D.lo[0], y0, z0), Vec3(x, y1, z1)) / phi;
        };
        const double wx = xmass(D.hi[0]);
        // Particles sit where acc + xmass crosses k + 1/2.
        for (double k = std::ceil(acc - 0.5) + 0.5; k <= acc + wx; k += 1.0) {
          if (k <= acc) continue;
          const double xc = invert(xmass, D.lo[0], D.hi[0], k - acc);
          Vec3 c(xc, yc, zc);
          if (opts.jitter > 0.0) {
            const double xl = invert(xmass, D.lo[0], D.hi[0], std::max(0.0, k - 0.5 - acc));
            const double xr = invert(xmass, D.lo[0], D.hi[0], std::min(wx, k + 0.5 - acc));
            const Vec3 cell(xr - xl, y1 - y0, z1 - z0);
            for (int d = 0; d < 3; ++d) c[d] += opts.jitter * cell[d] * unit(rng);
            for (int d = 0; d < 3; ++d) c[d] = std::clamp(c[d], D.lo[d], D.hi[d]);
          }
          centers.push_back(c);
        }
        acc += wx;
      }
    }
  }

  const double dmin = min_pairwise_distance(centers);
  if (dmin <= 2.0 * a) {
    std::ostringstream os;
    os << "placement spacing " << dmin << " <= 2a = " << 2.0 * a;
    fail(ErrorCode::DensityTooHigh, os.str());
  }
  std::vector<Particle> parts;
  parts.reserve(centers.size());
  for (const Vec3& c : centers)
    parts.emplace_back(c, RadialProfile(gamma(c), spec.kappa, a, opts.shape));
  return ParticleCloud(std::move(parts), D);
}

cplx integrate_box(const ComplexField& f, const Box& box, int order, int panels) {
  const GaussLegendre& gl = gauss_legendre(order);
  std::vector<double> xs[3], ws[3];
  for (int d = 0; d < 3; ++d) {
    const double L = box.hi[d] - box.lo[d];
    const double hp = L / panels;
    for (int p = 0; p < panels; ++p)
      for (int i = 0; i < order; ++i) {
        xs[d].push_back(box.lo[d] + hp * (p + 0.5 * (1.0 + gl.nodes[i])));
        ws[d].push_back(0.5 * hp * gl.weights[i]);
      }
  }
  const std::size_t nz = xs[2].size();
  std::vector<cplx> planes(nz);
  parallel_for(nz, [&](std::size_t l) {
    cplx s = 0.0;
    for (std::size_t j = 0; j < xs[1].size(); ++j) {
      cplx row = 0.0;
      for (std::size_t i = 0; i < xs[0].size(); ++i)
        row += ws[0][i] * f(Vec3(xs[0][i], xs[1][j], xs[2][l]));
      s += ws[1][j] * row;
    }
    planes[l] = ws[2][l] * s;
  });
  cplx total = 0.0;
  for (const cplx& p : planes) total += p;
  return total;
}

RiemannCheck riemann_sum_check(const ComplexField& f, const ParticleCloud& cloud,
                               const DensitySpec& spec, double a) {
  cplx lhs = 0.0;
  for (const Particle& p : cloud.particles()) lhs += f(p.center());
  lhs *= spec.phi(a);
  const cplx rhs = integrate_box([&](const Vec3& x) { return f(x) * spec.N(x); }, spec.domain);
  const double gap = std::abs(rhs) > 0.0 ? std::abs(lhs - rhs) / std::abs(rhs) : std::abs(lhs);
  return RiemannCheck{lhs, rhs, gap};
}

ComplexField coefficient_C(const ComplexField& gamma, const RealField& N,
                           const ShapeFunction& shape) {
  const double moment = RadialProfile(1.0, 1.0, 1.0, shape).shape_moment();
  return [gamma, N, moment](const Vec3& x) { return gamma(x) * moment * N(x); };
}

cplx refraction_index(cplx C, double k) {
  if (!(k > 0.0)) fail(ErrorCode::InvalidArgument, "k must be > 0");
  return 1.0 + C / (k * k);
}

ComplexField refraction_index(const ComplexField& C, double k) {
  if (!(k > 0.0)) fail(ErrorCode::InvalidArgument, "k must be > 0");
  return [C, k](const Vec3& x) { return 1.0 + C(x) / (k * k); };
}

GridSpec GridSpec::with_spacing(const Box& domain, double h) {
  if (!(h > 0.0)) fail(ErrorCode::InvalidArgument, "grid spacing must be > 0");
  GridSpec g{domain, {}};
  const Vec3 ext = domain.extent();
  for (int d = 0; d < 3; ++d) g.n[d] = std::max(1, static_cast<int>(std::ceil(ext[d] / h - 1e-9)));
  return g;
}

Vec3 GridSpec::spacing() const {
  const Vec3 ext = domain.extent();
  return Vec3(ext[0] / n[0], ext[1] / n[1], ext[2] / n[2]);
}

Vec3 GridSpec::node(int i, int j, int l) const {
  const Vec3 h = spacing();
  return domain.lo + Vec3((i + 0.5) * h[0], (j + 0.5) * h[1], (l + 0.5) * h[2]);
}

Vec3 GridSpec::node(std::size_t idx) const {
  const int i = static_cast<int>(idx % n[0]);
  const int j = static_cast<int>((idx / n[0]) % n[1]);
  const int l = static_cast<int>(idx / (static_cast<std::size_t>(n[0]) * n[1]));
  return node(i, j, l);
}

cplx self_cell_weight(double volume, double k) {
  const double R = std::cbrt(3.0 * volume / (4.0 * kPi));
  const double x = k * R;
  if (x < 0.1) {
    // sum_n (ikR)^n R^2 / (n! (n + 2))
    cplx term = 1.0, sum = 0.0;
    for (int n = 0; n < 24; ++n) {
      sum += term / double(n + 2);
      term *= kI * x / double(n + 1);
    }
    return R * R * sum;
  }
  const cplx e = std::exp(kI * x);
  return (e * (1.0 - kI * x) - 1.0) / (k * k);
}

namespace {

std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

// Block-Toeplitz operator u -> sum_j w(x_i - x_j) u_j on the grid, applied by
// zero-padded FFT convolution.
class ToeplitzOperator {
 public:
  ToeplitzOperator(const GridSpec& grid, double k) : grid_(grid) {
    for (int d = 0; d < 3; ++d) m_[d] = 2 * grid.n[d];
    total_ = static_cast<std::size_t>(m_[0]) * m_[1] * m_[2];
    kernel_.assign(total_, 0.0);
    buf_.assign(total_, 0.0);
    const Vec3 h = grid.spacing();
    const double vol = grid.cell_volume();
    const cplx self = self_cell_weight(vol, k);
    const int n0 = grid.n[0], n1 = grid.n[1], n2 = grid.n[2];
    for (int dl = -(n2 - 1); dl <= n2 - 1; ++dl)
      for (int dj = -(n1 - 1); dj <= n1 - 1; ++dj)
        for (int di = -(n0 - 1); di <= n0 - 1; ++di) {
          cplx w;
          if (di == 0 && dj == 0 && dl == 0) {
            w = self;
          } else {
            const double r = Vec3(di * h[0], dj * h[1], dl * h[2]).norm();
            w = std::exp(kI * (k * r)) / (4.0 * kPi * r) * vol;
          }
          kernel_[pad_index((di + m_[0]) % m_[0], (dj + m_[1]) % m_[1], (dl + m_[2]) % m_[2])] = w;
        }
    std::lock_guard<std::mutex> lock(fftw_mutex());
    auto* data = reinterpret_cast<fftw_complex*>(buf_.data());
    fwd_ = fftw_plan_dft_3d(m_[2], m_[1], m_[0], data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_3d(m_[2], m_[1], m_[0], data, data, FFTW_BACKWARD, FFTW_ESTIMATE);
    auto* kd = reinterpret_cast<fftw_complex*>(kernel_.data());
    fftw_execute_dft(fwd_, kd, kd);
  }

  ~ToeplitzOperator() {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }

  ToeplitzOperator(const ToeplitzOperator&) = delete;
  ToeplitzOperator& operator=(const ToeplitzOperator&) = delete;

  std::vector<cplx> apply(const std::vector<cplx>& u) {
    std::fill(buf_.begin(), buf_.end(), cplx(0.0));
    const int n0 = grid_.n[0], n1 = grid_.n[1], n2 = grid_.n[2];
    for (int l = 0; l < n2; ++l)
      for (int j = 0; j < n1; ++j)
        for (int i = 0; i < n0; ++i) buf_[pad_index(i, j, l)] = u[grid_.index(i, j, l)];
    auto* data = reinterpret_cast<fftw_complex*>(buf_.data());
    fftw_execute_dft(fwd_, data, data);
    for (std::size_t q = 0; q < total_; ++q) buf_[q] *= kernel_[q];
    fftw_execute_dft(bwd_, data, data);
    const double scale = 1.0 / static_cast<double>(total_);
    std::vector<cplx> out(u.size());
    for (int l = 0; l < n2; ++l)
      for (int j = 0; j < n1; ++j)
        for (int i = 0; i < n0; ++i) out[grid_.index(i, j, l)] = buf_[pad_index(i, j, l)] * scale;
    return out;
  }

 private:
  std::size_t pad_index(int i, int j, int l) const {
    return (static_cast<std::size_t>(l) * m_[1] + j) * m_[0] + i;
  }

  GridSpec grid_;
  int m_[3];
  std::size_t total_;
  std::vector<cplx> kernel_;
  std::vector<cplx> buf_;
  fftw_plan fwd_;
  fftw_plan bwd_;
};

double max_norm(const std::vector<CVec3>& v) {
  double m = 0.0;
  for (const CVec3& e : v) m = std::max(m, e.norm());
  return m;
}

}  // namespace

EffectiveFieldGrid solve_effective(const GridSpec& grid, const ComplexField& C,
                                   const PlaneWave& pw, const Background& bg,
                                   const EffectiveOptions& opts) {
  if (std::abs(bg.k() - pw.k()) > 1e-12 * bg.k())
    fail(ErrorCode::InvalidArgument, "plane wave and background disagree on k");
  const double k = bg.k();
  const double lambda = 2.0 * kPi / k;
  const Vec3 h = grid.spacing();
  if (h.maxCoeff() > lambda / 10.0) {
    std::ostringstream os;
    os << "grid spacing " << h.maxCoeff() << " exceeds lambda/10 = " << lambda / 10.0;
    fail(ErrorCode::Resolution, os.str());
  }
  const std::size_t N = grid.size();
  EffectiveFieldGrid sol{grid, pw, std::vector<cplx>(N), std::vector<CVec3>(N), 0};
  std::vector<CVec3> E0(N);
  for (std::size_t q = 0; q < N; ++q) {
    const Vec3 x = grid.node(q);
    sol.C[q] = C(x);
    E0[q] = pw(x);
  }
  bool all_zero = true;
  for (const cplx& c : sol.C) all_zero = all_zero && c == cplx(0.0);
  if (all_zero) {
    sol.E = E0;
    return sol;
  }

  const bool direct = opts.solver == EffectiveSolver::Direct ||
                      (opts.solver == EffectiveSolver::Auto && N <= opts.direct_limit);
  if (direct) {
    const double vol = grid.cell_volume();
    const cplx self = self_cell_weight(vol, k);
    Eigen::MatrixXcd A(N, N);
    parallel_for(N, [&](std::size_t i) {
      const Vec3 xi = grid.node(i);
      for (std::size_t j = 0; j < N; ++j) {
        const cplx w = i == j ? self : green(xi, grid.node(j), k) * vol;
        A(i, j) = (i == j ? 1.0 : 0.0) - w * sol.C[j];
      }
    });
    const double norm = A.cwiseAbs().colwise().sum().maxCoeff();
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
    if (lu.matrixLU().diagonal().cwiseAbs().minCoeff() < 1e-14 * norm)
      fail(ErrorCode::SingularSystem, "effective-medium matrix is numerically singular");
    Eigen::MatrixXcd rhs(N, 3);
    for (std::size_t q = 0; q < N; ++q) rhs.row(q) = E0[q].transpose();
    const Eigen::MatrixXcd X = lu.solve(rhs);
    for (std::size_t q = 0; q < N; ++q) sol.E[q] = X.row(q).transpose();
    return sol;
  }

  ToeplitzOperator op(grid, k);
  std::vector<CVec3> u = E0;
  std::vector<cplx> comp(N);
  for (int it = 1; it <= opts.max_iter; ++it) {
    std::vector<CVec3> next = E0;
    for (int c = 0; c < 3; ++c) {
      for (std::size_t q = 0; q < N; ++q) comp[q] = sol.C[q] * u[q][c];
      const std::vector<cplx> w = op.apply(comp);
      for (std::size_t q = 0; q < N; ++q) next[q][c] += w[q];
    }
    double step = 0.0;
    for (std::size_t q = 0; q < N; ++q) step = std::max(step, (next[q] - u[q]).norm());
    u.swap(next);
    const double size = max_norm(u);
    if (!std::isfinite(step) || step > 1e8 * max_norm(E0)) break;
    if (step <= opts.tol * size) {
      sol.E = std::move(u);
      sol.iterations = it;
      return sol;
    }
  }
  std::ostringstream os;
  os << "effective-medium iteration did not converge in " << opts.max_iter << " sweeps";
  fail(ErrorCode::NoConvergence, os.str());
}

CVec3 EffectiveFieldGrid::eval(const Vec3& x) const {
  const double k = wave.k();
  const double vol = grid.cell_volume();
  const double tiny = 1e-12 * grid.spacing().minCoeff();
  const cplx self = self_cell_weight(vol, k);
  CVec3 e = wave(x);
  for (std::size_t q = 0; q < E.size(); ++q) {
    if (C[q] == cplx(0.0)) continue;
    const Vec3 y = grid.node(q);
    const double r = (x - y).norm();
    const cplx w = r < tiny ? self : std::exp(kI * (k * r)) / (4.0 * kPi * r) * vol;
    e += (w * C[q]) * E[q];
  }
  return e;
}

double helmholtz_residual(const GridSpec& grid, const std::vector<CVec3>& E,
                          const std::vector<cplx>& C, double k, const std::optional<Box>& region) {
  const Vec3 h = grid.spacing();
  const double scale = max_norm(E);
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (int l = 1; l + 1 < grid.n[2]; ++l)
    for (int j = 1; j + 1 < grid.n[1]; ++j)
      for (int i = 1; i + 1 < grid.n[0]; ++i) {
        if (region && !region->contains(grid.node(i, j, l))) continue;
        const std::size_t q = grid.index(i, j, l);
        CVec3 lap = (E[grid.index(i + 1, j, l)] + E[grid.index(i - 1, j, l)] - 2.0 * E[q]) / (h[0] * h[0]) +
                    (E[grid.index(i, j + 1, l)] + E[grid.index(i, j - 1, l)] - 2.0 * E[q]) / (h[1] * h[1]) +
                    (E[grid.index(i, j, l + 1)] + E[grid.index(i, j, l - 1)] - 2.0 * E[q]) / (h[2] * h[2]);
        worst = std::max(worst, (lap + (k * k + C[q]) * E[q]).norm());
      }
  return worst / scale;
}

double helmholtz_residual(const EffectiveFieldGrid& sol, double k, const std::optional<Box>& region) {
  return helmholtz_residual(sol.grid, sol.E, sol.C, k, region);
}

DivergenceField divergence_field(const EffectiveFieldGrid& sol) {
  const GridSpec& g = sol.grid;
  const Vec3 h = g.spacing();
  DivergenceField out{g, std::vector<cplx>(g.size(), 0.0), std::vector<char>(g.size(), 0)};
  for (int l = 1; l + 1 < g.n[2]; ++l)
    for (int j = 1; j + 1 < g.n[1]; ++j)
      for (int i = 1; i + 1 < g.n[0]; ++i) {
        const std::size_t q = g.index(i, j, l);
        out.eta[q] = (sol.E[g.index(i + 1, j, l)][0] - sol.E[g.index(i - 1, j, l)][0]) / (2 * h[0]) +
                     (sol.E[g.index(i, j + 1, l)][1] - sol.E[g.index(i, j - 1, l)][1]) / (2 * h[1]) +
                     (sol.E[g.index(i, j, l + 1)][2] - sol.E[g.index(i, j, l - 1)][2]) / (2 * h[2]);
        out.interior[q] = 1;
      }
  return out;
}

double DivergenceField::max_abs(const std::optional<Box>& region) const {
  double m = 0.0;
  for (std::size_t q = 0; q < eta.size(); ++q) {
    if (!interior[q]) continue;
    if (region && !region->contains(grid.node(q))) continue;
    m = std::max(m, std::abs(eta[q]));
  }
  return m;
}

std::vector<Vec3> halton_points(const Box& box, std::size_t count, std::size_t skip) {
  auto radical = [](std::size_t i, int base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
      f /= base;
      r += f * static_cast<double>(i % base);
      i /= base;
    }
    return r;
  };
  std::vector<Vec3> pts;
  pts.reserve(count);
  const Vec3 ext = box.extent();
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t i = n + skip + 1;
    pts.push_back(box.lo + Vec3(radical(i, 2) * ext[0], radical(i, 3) * ext[1], radical(i, 5) * ext[2]));
  }
  return pts;
}

std::vector<Vec3> exterior_probes(const Box& domain, std::size_t count, double margin) {
  const Vec3 mid = 0.5 * (domain.lo + domain.hi);
  const Vec3 ext = domain.extent();
  const Box big{mid - 1.5 * ext - Vec3::Constant(margin), mid + 1.5 * ext + Vec3::Constant(margin)};
  std::vector<Vec3> out;
  std::size_t skip = 20;
  while (out.size() < count) {
    for (const Vec3& p : halton_points(big, 4 * count, skip))
      if (out.size() < count && domain.distance(p) >= margin) out.push_back(p);
    skip += 4 * count;
  }
  return out;
}

std::string ConvergenceTable::to_csv(bool include_timing) const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "a [length],M [count],sup_diff [relative],mean_diff [relative],contraction_norm [1],"
        "wall_time_s [s]\n";
  for (const ConvergenceRow& r : rows)
    os << r.a << ',' << r.M << ',' << r.sup_diff << ',' << r.mean_diff << ','
       << r.contraction_norm << ',' << (include_timing ? r.wall_time_s : 0.0) << '\n';
  return os.str();
}

ConvergenceTable convergence_study(const DensitySpec& spec, const ComplexField& gamma,
                                   const PlaneWave& pw, const Background& bg,
                                   const std::vector<double>& a_list,
                                   const ConvergenceOptions& opts) {
  if (opts.probes.empty()) fail(ErrorCode::InvalidArgument, "convergence study needs probe points");
  const ComplexField C = coefficient_C(gamma, spec.N, opts.placement.shape);
  const EffectiveFieldGrid eff = solve_effective(opts.grid, C, pw, bg, opts.effective);
  std::vector<CVec3> e_eff(opts.probes.size());
  parallel_for(opts.probes.size(), [&](std::size_t p) { e_eff[p] = eff.eval(opts.probes[p]); });
  double scale = 0.0;
  for (std::size_t p = 0; p < opts.probes.size(); ++p)
    scale = std::max(scale, (e_eff[p] - pw(opts.probes[p])).norm());
  if (scale == 0.0) scale = 1.0;

  ConvergenceTable table;
  for (double a : a_list) {
    const auto t0 = std::chrono::steady_clock::now();
    const ParticleCloud cloud = place_particles(spec, a, gamma, opts.placement);
    ConvergenceRow row;
    row.a = a;
    row.M = cloud.size();
    std::vector<std::size_t> keep;
    for (std::size_t p = 0; p < opts.probes.size(); ++p) {
      bool ok = true;
      for (const Particle& part : cloud.particles())
        if ((part.center() - opts.probes[p]).norm() <= 10.0 * a) {
          ok = false;
          break;
        }
      if (ok) keep.push_back(p);
    }
    if (cloud.size() > 0) {
      const ManyBodySystem sys = assemble(cloud, pw, bg, opts.mode);
      row.contraction_norm = contraction_norm(sys);
      ManySolution sol = [&] {
        if (cloud.size() <= opts.direct_limit) return solve_direct(sys);
        IterativeOptions it;
        it.tol = opts.tol;
        it.max_iter = opts.max_iter;
        it.scheme = IterationScheme::BlockJacobi;
        return solve_iterative(sys, it);
      }();
      std::vector<double> diff(keep.size());
      parallel_for(keep.size(), [&](std::size_t q) {
        const std::size_t p = keep[q];
        diff[q] = (eval_field(sol, opts.probes[p]) - e_eff[p]).norm() / scale;
      });
      double sum = 0.0;
      for (double d : diff) {
        row.sup_diff = std::max(row.sup_diff, d);
        sum += d;
      }
      row.mean_diff = keep.empty() ? 0.0 : sum / keep.size();
    } else {
      double sum = 0.0;
      for (std::size_t p : keep) {
        const double d = (pw(opts.probes[p]) - e_eff[p]).norm() / scale;
        row.sup_diff = std::max(row.sup_diff, d);
        sum += d;
      }
      row.mean_diff = keep.empty() ? 0.0 : sum / keep.size();
    }
    row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace smallscat
