#include "smallscat/design.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "smallscat/error.hpp"

namespace smallscat {

ComplexField design_from_target(const DesignSpec& spec, double k) {
  if (!(k > 0.0)) fail(ErrorCode::InvalidArgument, "k must be > 0");
  if (!spec.n2_target || !spec.N) fail(ErrorCode::InvalidArgument, "design needs n2 and N");
  const double moment = RadialProfile(1.0, 1.0, 1.0, spec.shape).shape_moment();
  const DesignSpec s = spec;
  return [s, k, moment](const Vec3& x) -> cplx {
    const cplx n2 = s.n2_target(x);
    const cplx C = k * k * (n2 - 1.0);
    if (C == cplx(0.0)) return 0.0;
    const double N = s.N(x);
    if (!(N > 0.0)) {
      std::ostringstream os;
      os << "target n^2 = " << n2 << " needs particles but N = " << N << " at (" << x[0] << ", "
         << x[1] << ", " << x[2] << ")";
      fail(ErrorCode::ZeroDensity, os.str());
    }
    const cplx gamma = C / (N * moment);
    if (s.passive && n2.imag() >= 0.0 && gamma.imag() < -1e-12) {
      std::ostringstream os;
      os << "designed gamma " << gamma << " has negative imaginary part";
      fail(ErrorCode::PassivityViolation, os.str());
    }
    return gamma;
  };
}

DesignGrid sample_design(const DesignSpec& spec, double k, const GridSpec& grid) {
  const ComplexField g = design_from_target(spec, k);
  DesignGrid out{grid, k, std::vector<cplx>(grid.size())};
  for (std::size_t q = 0; q < grid.size(); ++q) out.gamma[q] = g(grid.node(q));
  return out;
}

std::string DesignGrid::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "x [length],y [length],z [length],re_gamma [1],im_gamma [1]\n";
  for (std::size_t q = 0; q < gamma.size(); ++q) {
    const Vec3 x = grid.node(q);
    os << x[0] << ',' << x[1] << ',' << x[2] << ',' << gamma[q].real() << ',' << gamma[q].imag()
       << '\n';
  }
  return os.str();
}

std::vector<DesignRow> parse_design_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<DesignRow> rows;
  if (!std::getline(in, line)) fail(ErrorCode::Parse, "design CSV is empty");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    double v[5];
    for (int c = 0; c < 5; ++c) {
      std::string cell;
      if (!std::getline(ls, cell, ',')) {
        fail(ErrorCode::Parse, "design CSV line " + std::to_string(lineno) + ": expected 5 columns");
      }
      try {
        std::size_t used = 0;
        v[c] = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        fail(ErrorCode::Parse, "design CSV line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    rows.push_back({Vec3(v[0], v[1], v[2]), cplx(v[3], v[4])});
  }
  return rows;
}

DispersionCheck negative_refraction_check(const Dispersion& n, const Vec3& x, double omega,
                                          double delta) {
  if (!(omega > 0.0)) fail(ErrorCode::InvalidArgument, "omega must be > 0");
  if (!(delta > 0.0 && delta < 0.5)) fail(ErrorCode::InvalidArgument, "delta must lie in (0, 0.5)");
  const double h = omega * delta;
  const cplx n0 = n(x, omega);
  const cplx np = n(x, omega + h);
  const cplx nm = n(x, omega - h);
  for (const cplx& v : {n0, np, nm}) {
    if (std::abs(v.imag()) > 1e-10) {
      std::ostringstream os;
      os << "refraction index " << v << " is not real";
      fail(ErrorCode::NonRealIndex, os.str());
    }
  }
  DispersionCheck r;
  r.n = n0;
  r.derivative = (np.real() - nm.real()) / (2.0 * h);
  r.value = n0.real() + omega * r.derivative;
  // truncation O(delta^2) plus cancellation O(eps / delta), relative to the terms
  const double eps = std::numeric_limits<double>::epsilon();
  const double scale = std::abs(n0.real()) + std::abs(np.real()) + std::abs(nm.real());
  r.tolerance = 10.0 * (delta * delta + eps / delta) * scale;
  r.negative = r.value < -r.tolerance;
  return r;
}

DispersionCheck negative_refraction_check(const std::function<cplx(double)>& n, double omega,
                                          double delta) {
  return negative_refraction_check([&](const Vec3&, double w) { return n(w); }, Vec3::Zero(),
                                   omega, delta);
}

PhaseFit fit_phase_index(const std::vector<double>& s, const std::vector<cplx>& values, double k) {
  if (s.size() != values.size() || s.size() < 2)
    fail(ErrorCode::InvalidArgument, "phase fit needs at least two matching samples");
  if (!(k > 0.0)) fail(ErrorCode::InvalidArgument, "k must be > 0");
  std::vector<double> phase(s.size());
  phase[0] = std::arg(values[0]);
  for (std::size_t i = 1; i < s.size(); ++i) {
    double d = std::arg(values[i]) - std::arg(values[i - 1]);
    d -= 2.0 * kPi * std::round(d / (2.0 * kPi));
    phase[i] = phase[i - 1] + d;
  }
  const double n = static_cast<double>(s.size());
  double ms = 0.0, mp = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ms += s[i] / n;
    mp += phase[i] / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sxx += (s[i] - ms) * (s[i] - ms);
    sxy += (s[i] - ms) * (phase[i] - mp);
  }
  if (sxx == 0.0) fail(ErrorCode::InvalidArgument, "phase fit needs distinct sample positions");
  PhaseFit f;
  f.slope = sxy / sxx;
  f.intercept = mp - f.slope * ms;
  double ss = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double r = phase[i] - (f.intercept + f.slope * s[i]);
    ss += r * r;
  }
  f.rms = std::sqrt(ss / n);
  f.n = f.slope / k;
  f.n2 = f.n * f.n;
  return f;
}

}  // namespace smallscat
