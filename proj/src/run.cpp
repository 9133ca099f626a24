#include "smallscat/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "smallscat/design.hpp"
#include "smallscat/effective.hpp"
#include "smallscat/many.hpp"
#include "smallscat/parallel.hpp"
#include "smallscat/single.hpp"

namespace smallscat {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  f << content;
  f.close();
  if (!f) fail(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::Io, "cannot read '" + path.string() + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

struct Csv {
  std::ostringstream os;
  Csv() { os << std::setprecision(17); }
};

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

json cvec_json(const CVec3& v) {
  return json::array({complex_json(v[0]), complex_json(v[1]), complex_json(v[2])});
}

json diagnostics_json(const DiagnosticsReport& d) {
  return json{{"ka", d.ka},
              {"a_over_d_min", d.a_over_d},
              {"d_min", number_or_null(d.d_min)},
              {"error_budget", d.error_budget},
              {"ka_warn", d.ka_warn},
              {"a_over_d_warn", d.a_over_d_warn}};
}

Background background(const RunConfig& c) {
  const double eps = c.real("background.epsilon"), mu = c.real("background.mu");
  return Background(c.real("wave.k") / std::sqrt(eps * mu), eps, mu);
}

PlaneWave plane_wave(const RunConfig& c, const Background& bg) {
  Vec3 dir = c.vec3("wave.direction");
  if (!(dir.norm() > 0.0)) fail(ErrorCode::InvalidArgument, "wave.direction must be nonzero");
  dir.normalize();
  return PlaneWave(dir, c.cvec3("wave.amplitude"), bg.k());
}

Box domain(const RunConfig& c) {
  const Box b{c.vec3("domain.lo"), c.vec3("domain.hi")};
  for (int d = 0; d < 3; ++d)
    if (!(b.hi[d] > b.lo[d])) fail(ErrorCode::InvalidArgument, "domain.hi must exceed domain.lo");
  return b;
}

std::vector<Vec3> probes(const RunConfig& c, const Box& around) {
  const std::string kind = c.text("probes.kind");
  const auto count = static_cast<std::size_t>(c.integer("probes.count"));
  if (kind == "box") return halton_points(Box{c.vec3("probes.lo"), c.vec3("probes.hi")}, count);
  if (kind == "exterior") return exterior_probes(around, count, c.real("probes.margin"));
  const Vec3 a = c.vec3("probes.start"), b = c.vec3("probes.end");
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < count; ++i)
    pts.push_back(count == 1 ? a : Vec3(a + (b - a) * (static_cast<double>(i) / (count - 1))));
  return pts;
}

std::string field_csv(const std::vector<Vec3>& pts, const std::vector<CVec3>& E,
                      const std::vector<CVec3>* H) {
  Csv c;
  c.os << "x [m],y [m],z [m],re_Ex [V/m],im_Ex [V/m],re_Ey [V/m],im_Ey [V/m],re_Ez [V/m],im_Ez [V/m]";
  if (H) c.os << ",re_Hx [A/m],im_Hx [A/m],re_Hy [A/m],im_Hy [A/m],re_Hz [A/m],im_Hz [A/m]";
  c.os << '\n';
  for (std::size_t i = 0; i < pts.size(); ++i) {
    c.os << pts[i][0] << ',' << pts[i][1] << ',' << pts[i][2];
    for (int d = 0; d < 3; ++d) c.os << ',' << E[i][d].real() << ',' << E[i][d].imag();
    if (H)
      for (int d = 0; d < 3; ++d) c.os << ',' << (*H)[i][d].real() << ',' << (*H)[i][d].imag();
    c.os << '\n';
  }
  return c.os.str();
}

GridSpec grid_of(const RunConfig& c, const Box& D) {
  const double h = c.real("grid.spacing");
  if (h > 0.0) return GridSpec::with_spacing(D, h);
  return GridSpec{D, c.triple("grid.n")};
}

EffectiveSolver effective_solver(const RunConfig& c) {
  const std::string s = c.text("effective.solver");
  if (s == "direct") return EffectiveSolver::Direct;
  if (s == "iterative") return EffectiveSolver::Iterative;
  return EffectiveSolver::Auto;
}

EffectiveOptions effective_options(const RunConfig& c) {
  EffectiveOptions o;
  o.solver = effective_solver(c);
  o.direct_limit = static_cast<std::size_t>(c.integer("effective.direct_limit"));
  o.tol = c.real("solver.tol");
  o.max_iter = static_cast<int>(c.integer("solver.max_iter"));
  return o;
}

PlacementOptions placement(const RunConfig& c) {
  PlacementOptions o;
  o.seed = static_cast<std::uint64_t>(c.integer("seed"));
  o.jitter = c.real("placement.jitter");
  o.mass_resolution = static_cast<int>(c.integer("placement.mass_resolution"));
  return o;
}

DensitySpec density(const RunConfig& c, double kappa) {
  const FieldSpec N = c.field("density.N");
  return DensitySpec{[N](const Vec3& x) { return N(x).real(); }, kappa, domain(c)};
}

MomentMode moment_mode(const RunConfig& c, std::size_t M) {
  const std::string m = c.text("moments.mode");
  if (m == "quadrature") return MomentMode::Quadrature;
  if (m == "midpoint") return MomentMode::Midpoint;
  return default_moment_mode(M);
}

json base_summary(const RunConfig& c) {
  json s;
  s["command"] = c.command();
  s["seed"] = c.integer("seed");
  json cfg;
  for (const auto& [k, v] : c.values()) cfg[k] = v;
  s["config"] = cfg;
  return s;
}

// No particles in play: the smallness diagnostics are undefined.
json no_diagnostics() {
  return json{{"ka", nullptr}, {"a_over_d_min", nullptr}, {"d_min", nullptr}, {"error_budget", nullptr}};
}

ParticleCloud build_cloud(const RunConfig& c) {
  const double a = c.real("cloud.radius"), kappa = c.real("cloud.kappa");
  const FieldSpec gamma = c.field("cloud.gamma");
  if (c.text("cloud.layout") == "density")
    return place_particles(density(c, kappa), a, gamma.function(), placement(c));
  const auto n = c.triple("lattice.n");
  const double s = c.real("lattice.spacing");
  const Vec3 o = c.vec3("lattice.origin");
  std::vector<Particle> ps;
  for (int l = 0; l < n[2]; ++l)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const Vec3 x = o + s * Vec3(i, j, l);
        ps.emplace_back(x, RadialProfile(gamma(x), kappa, a));
      }
  validate_scene(ps, Background::from_wavenumber(c.real("wave.k")));
  const Vec3 far = o + s * Vec3(n[0] - 1, n[1] - 1, n[2] - 1);
  return ParticleCloud(std::move(ps), Box{o - Vec3::Constant(a), far + Vec3::Constant(a)});
}

using Files = std::vector<fs::path>;

void finish(json& summary, const RunConfig& c, const fs::path& out, Files& files,
            std::chrono::steady_clock::time_point t0) {
  if (c.boolean("output.timing"))
    summary["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_file(out / "summary.json", summary.dump(2) + "\n");
  files.push_back(out / "summary.json");
}

Files run_single(const RunConfig& c, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const Background bg = background(c);
  const PlaneWave pw = plane_wave(c, bg);
  const double a = c.real("particle.radius");
  const Particle part(c.vec3("particle.center"),
                      RadialProfile(c.complex("particle.gamma"), c.real("particle.kappa"), a));
  const DiagnosticsReport diag = validate_scene(std::vector<Particle>{part}, bg);
  const SingleSolution sol = solve_single(part, pw, bg, moment_mode(c, 1));
  const std::vector<Vec3> pts =
      probes(c, Box{part.center() - Vec3::Constant(a), part.center() + Vec3::Constant(a)});
  std::vector<CVec3> E, H;
  for (const Vec3& x : pts) {
    E.push_back(eval_field_single(sol, x));
    if (c.boolean("output.H")) {
      // single-body H from the same analytic curl as the many-body case
      const CVec3 scattered = bcross(grad_green(x, part.center(), bg.k()), sol.V);
      H.push_back((pw.curl(x) + scattered) / (kI * bg.omega() * bg.mu()));
    }
  }
  Files files;
  write_file(out / "field.csv", field_csv(pts, E, c.boolean("output.H") ? &H : nullptr));
  files.push_back(out / "field.csv");
  json s = base_summary(c);
  s["diagnostics"] = diagnostics_json(diag);
  s["probes"] = pts.size();
  s["V"] = cvec_json(sol.V);
  s["nu"] = complex_json(sol.nu);
  finish(s, c, out, files, t0);
  return files;
}

Files run_many(const RunConfig& c, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const Background bg = background(c);
  const PlaneWave pw = plane_wave(c, bg);
  const ParticleCloud cloud = build_cloud(c);
  const DiagnosticsReport diag = validate_scene(cloud, bg);
  const MomentMode mode = moment_mode(c, cloud.size());
  const ManyBodySystem sys = assemble(cloud, pw, bg, mode);
  const double q = contraction_norm(sys);
  const std::string kind = c.text("solver.kind");
  const bool direct =
      kind == "direct" ||
      (kind == "auto" && cloud.size() <= static_cast<std::size_t>(c.integer("solver.direct_limit")));
  ManySolution sol = [&] {
    if (direct) return solve_direct(sys);
    IterativeOptions o;
    o.tol = c.real("solver.tol");
    o.max_iter = static_cast<int>(c.integer("solver.max_iter"));
    o.scheme = c.text("solver.scheme") == "block-jacobi" ? IterationScheme::BlockJacobi
                                                         : IterationScheme::Plain;
    return solve_iterative(sys, o);
  }();
  const std::vector<Vec3> pts = probes(c, cloud.domain());
  std::vector<CVec3> E(pts.size()), H(pts.size());
  const bool withH = c.boolean("output.H");
  parallel_for(pts.size(), [&](std::size_t i) {
    E[i] = eval_field(sol, pts[i]);
    if (withH) H[i] = eval_H_field(sol, pts[i], bg);
  });
  Files files;
  write_file(out / "field.csv", field_csv(pts, E, withH ? &H : nullptr));
  files.push_back(out / "field.csv");
  Csv m;
  m.os << "index [1],x [m],y [m],z [m],re_Vx,im_Vx,re_Vy,im_Vy,re_Vz,im_Vz,re_nu,im_nu\n";
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    const Vec3& x = cloud.particles()[j].center();
    m.os << j << ',' << x[0] << ',' << x[1] << ',' << x[2];
    for (int d = 0; d < 3; ++d) m.os << ',' << sol.V[j][d].real() << ',' << sol.V[j][d].imag();
    m.os << ',' << sol.nu[j].real() << ',' << sol.nu[j].imag() << '\n';
  }
  write_file(out / "moments.csv", m.os.str());
  files.push_back(out / "moments.csv");
  json s = base_summary(c);
  s["diagnostics"] = diagnostics_json(diag);
  s["particles"] = cloud.size();
  s["moment_mode"] = mode == MomentMode::Quadrature ? "quadrature" : "midpoint";
  s["solver"] = direct ? "direct" : "iterative";
  s["contraction_norm"] = q;
  s["residual_norm"] = sol.residual_norm;
  s["iterations"] = sol.iterations;
  s["warnings"] = sol.warnings;
  s["probes"] = pts.size();
  finish(s, c, out, files, t0);
  return files;
}

// C on the grid from a design CSV: c1 N with c1 = gamma * shape moment.
std::vector<cplx> coefficient_from_design(const RunConfig& c, const GridSpec& grid) {
  const std::string path = c.text("effective.design_csv");
  if (path.empty()) fail(ErrorCode::Schema, "effective.source = design needs effective.design_csv");
  const auto rows = parse_design_csv(read_file(path));
  if (rows.size() != grid.size())
    fail(ErrorCode::InvalidArgument, "design grid has " + std::to_string(rows.size()) +
                                         " nodes, effective grid has " + std::to_string(grid.size()));
  const FieldSpec N = c.field("density.N");
  const double moment = RadialProfile(1.0, 1.0, 1.0).shape_moment();
  const double tol = 1e-9 * grid.domain.extent().norm();
  std::vector<cplx> C(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q) {
    if ((rows[q].x - grid.node(q)).norm() > tol)
      fail(ErrorCode::InvalidArgument, "design grid nodes do not match the effective grid");
    C[q] = rows[q].gamma * moment * N(grid.node(q)).real();
  }
  return C;
}

Files run_effective(const RunConfig& c, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const Background bg = background(c);
  const PlaneWave pw = plane_wave(c, bg);
  const Box D = domain(c);
  const GridSpec grid = grid_of(c, D);
  ComplexField C;
  if (c.text("effective.source") == "design") {
    auto values = std::make_shared<std::vector<cplx>>(coefficient_from_design(c, grid));
    C = [values, grid](const Vec3& x) {
      const Vec3 h = grid.spacing();
      int idx[3];
      for (int d = 0; d < 3; ++d)
        idx[d] = std::clamp(static_cast<int>(std::floor((x[d] - grid.domain.lo[d]) / h[d])), 0,
                            grid.n[d] - 1);
      return (*values)[grid.index(idx[0], idx[1], idx[2])];
    };
  } else {
    const FieldSpec N = c.field("density.N");
    C = coefficient_C(c.field("cloud.gamma").function(),
                      [N](const Vec3& x) { return N(x).real(); });
  }
  const EffectiveFieldGrid sol = solve_effective(grid, C, pw, bg, effective_options(c));
  std::vector<Vec3> nodes(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q) nodes[q] = grid.node(q);
  Files files;
  write_file(out / "field.csv", field_csv(nodes, sol.E, nullptr));
  files.push_back(out / "field.csv");
  Csv n2;
  n2.os << "x [m],y [m],z [m],re_n2 [1],im_n2 [1]\n";
  for (std::size_t q = 0; q < grid.size(); ++q) {
    const cplx v = refraction_index(sol.C[q], bg.k());
    n2.os << nodes[q][0] << ',' << nodes[q][1] << ',' << nodes[q][2] << ',' << v.real() << ','
          << v.imag() << '\n';
  }
  write_file(out / "n2.csv", n2.os.str());
  files.push_back(out / "n2.csv");
  json s = base_summary(c);
  s["diagnostics"] = no_diagnostics();
  s["grid"] = {grid.n[0], grid.n[1], grid.n[2]};
  s["iterations"] = sol.iterations;
  s["helmholtz_residual"] = helmholtz_residual(sol, bg.k());
  s["divergence_max"] = divergence_field(sol).max_abs();
  finish(s, c, out, files, t0);
  return files;
}

Files run_design(const RunConfig& c, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const Background bg = background(c);
  const Box D = domain(c);
  const FieldSpec n2 = c.field("design.n2");
  const FieldSpec N = c.field("density.N");
  DesignSpec spec;
  spec.n2_target = n2.function();
  spec.N = [N](const Vec3& x) { return N(x).real(); };
  spec.kappa = c.real("cloud.kappa");
  spec.domain = D;
  spec.passive = c.boolean("design.passive");
  spec.description = n2.describe();
  const DesignGrid g = sample_design(spec, bg.k(), grid_of(c, D));
  Files files;
  write_file(out / "gamma.csv", g.to_csv());
  files.push_back(out / "gamma.csv");
  json s = base_summary(c);
  s["diagnostics"] = no_diagnostics();
  s["kappa"] = spec.kappa;
  s["N"] = N.describe();
  s["n2_target"] = spec.description;
  s["k"] = bg.k();
  s["grid"] = {g.grid.n[0], g.grid.n[1], g.grid.n[2]};
  finish(s, c, out, files, t0);
  return files;
}

Files run_converge(const RunConfig& c, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const Background bg = background(c);
  const PlaneWave pw = plane_wave(c, bg);
  const double kappa = c.real("cloud.kappa");
  const DensitySpec spec = density(c, kappa);
  const FieldSpec gamma = c.field("cloud.gamma");
  ConvergenceOptions o;
  o.probes = probes(c, spec.domain);
  o.grid = grid_of(c, spec.domain);
  o.effective = effective_options(c);
  o.placement = placement(c);
  const std::string mode = c.text("moments.mode");
  o.mode = mode == "quadrature" ? MomentMode::Quadrature : MomentMode::Midpoint;
  o.direct_limit = static_cast<std::size_t>(c.integer("solver.direct_limit"));
  o.tol = c.real("solver.tol");
  o.max_iter = static_cast<int>(c.integer("solver.max_iter"));
  const std::vector<double> radii = c.real_list("converge.radii");
  const ConvergenceTable table = convergence_study(spec, gamma.function(), pw, bg, radii, o);
  Files files;
  write_file(out / "convergence.csv", table.to_csv(c.boolean("output.timing")));
  files.push_back(out / "convergence.csv");
  json s = base_summary(c);
  json diag = json::array();
  for (double a : radii) {
    const ParticleCloud cloud = place_particles(spec, a, gamma.function(), o.placement);
    json d = diagnostics_json(validate_scene(cloud, bg));
    d["a"] = a;
    diag.push_back(d);
  }
  s["diagnostics"] = diag;
  json rows = json::array();
  for (const ConvergenceRow& r : table.rows)
    rows.push_back({{"a", r.a}, {"M", r.M}, {"sup_diff", r.sup_diff}, {"mean_diff", r.mean_diff},
                    {"contraction_norm", r.contraction_norm}});
  s["rows"] = rows;
  finish(s, c, out, files, t0);
  return files;
}

Files run_dispersion(const RunConfig& c, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const double n0 = c.real("dispersion.n0"), c0 = c.real("dispersion.c0"),
               p = c.real("dispersion.power"), delta = c.real("dispersion.delta");
  const auto n = [=](double w) { return cplx(n0 + c0 * std::pow(w, p)); };
  Csv csv;
  csv.os << "omega [1/s],n [1],dn_domega [s],value [1],tolerance [1],negative [1]\n";
  json rows = json::array();
  for (double w : c.real_list("dispersion.omega")) {
    const DispersionCheck r = negative_refraction_check(n, w, delta);
    csv.os << w << ',' << r.n.real() << ',' << r.derivative << ',' << r.value << ',' << r.tolerance
           << ',' << (r.negative ? 1 : 0) << '\n';
    rows.push_back({{"omega", w}, {"value", r.value}, {"negative", r.negative}});
  }
  Files files;
  write_file(out / "dispersion.csv", csv.os.str());
  files.push_back(out / "dispersion.csv");
  json s = base_summary(c);
  s["diagnostics"] = no_diagnostics();
  s["rows"] = rows;
  finish(s, c, out, files, t0);
  return files;
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse:
    case ErrorCode::Schema:
    case ErrorCode::InvalidArgument:
    case ErrorCode::Overlap:
    case ErrorCode::MethodMismatch:
      return 2;
    case ErrorCode::Io:
      return 4;
    default:
      return 3;
  }
}

std::vector<fs::path> run(const RunConfig& cfg, const fs::path& out) {
  const std::string& cmd = cfg.command();
  if (cmd.empty()) fail(ErrorCode::Schema, "missing required key 'command'");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) fail(ErrorCode::Io, "cannot create output directory '" + out.string() + "': " + ec.message());
  if (cmd == "single") return run_single(cfg, out);
  if (cmd == "many") return run_many(cfg, out);
  if (cmd == "effective") return run_effective(cfg, out);
  if (cmd == "design") return run_design(cfg, out);
  if (cmd == "converge") return run_converge(cfg, out);
  return run_dispersion(cfg, out);
}

int report_error(const Error& e, const fs::path& out) {
  const int code = exit_code_for(e.code());
  const json j = {{"error", {{"code", std::string(to_string(e.code()))}, {"message", e.what()}, {"exit_code", code}}}};
  try {
    write_file(out / "error.json", j.dump(2) + "\n");
  } catch (const Error&) {
    return 4;
  }
  return code;
}

int run_guarded(const RunConfig& cfg, const fs::path& out, std::string* message) {
  try {
    run(cfg, out);
    return 0;
  } catch (const Error& e) {
    if (message) *message = std::string(to_string(e.code())) + ": " + e.what();
    return report_error(e, out);
  }
}

}  // namespace smallscat
