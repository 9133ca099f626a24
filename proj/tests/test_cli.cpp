#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "smallscat/config.hpp"
#include "smallscat/run.hpp"

using namespace smallscat;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& f, std::string* what = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (what) *what = e.what();
    return e.code();
  }
  FAIL("no exception");
  return ErrorCode::Io;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "smallscat_cli_test" / name;
  fs::remove_all(p);
  return p;
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> r;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) r.push_back(std::stod(cell));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST_CASE("minimal config gets defaults") {
  const RunConfig c = parse_config("command = single\nparticle.radius = 0.02\n");
  CHECK(c.command() == "single");
  CHECK(c.real("particle.radius") == 0.02);
  CHECK(c.real("solver.tol") == 1e-10);
  CHECK(c.integer("seed") == 0);
  CHECK(c.text("moments.mode") == "auto");
  CHECK(c.field("cloud.gamma").kind == FieldSpec::Kind::Constant);
}

TEST_CASE("schema violations") {
  std::string what;
  CHECK(code_of([] { parse_config("command = single\nparticle.radius = -1\n"); }, &what) == ErrorCode::Schema);
  CHECK(what.find("particle.radius") != std::string::npos);
  CHECK(what.find("line 2") != std::string::npos);
  CHECK(code_of([] { parse_config("command = single\nfoo = 1\nbar.baz = 2\n"); }, &what) == ErrorCode::Schema);
  CHECK(what.find("foo") != std::string::npos);
  CHECK(what.find("bar.baz") != std::string::npos);
  CHECK(code_of([] { parse_config("command = teleport\n"); }) == ErrorCode::Schema);
  CHECK(code_of([] { parse_config("cloud.kappa = 3\n"); }) == ErrorCode::Schema);
  CHECK(code_of([] { parse_config("placement.jitter = 0.2\n"); }) == ErrorCode::Schema);
  CHECK(code_of([] { parse_config("wave.direction = 0,1\n"); }) == ErrorCode::Schema);
  CHECK(code_of([] { parse_config("solver.max_iter = 1.5\n"); }) == ErrorCode::Schema);
  CHECK(code_of([] { parse_config("output.H = maybe\n"); }) == ErrorCode::Schema);
}

TEST_CASE("syntax errors carry the line") {
  std::string what;
  CHECK(code_of([] { parse_config("command = single\n\njust words\n"); }, &what) == ErrorCode::Parse);
  CHECK(what.find("line 3") != std::string::npos);
  CHECK(code_of([] { parse_config("wave.k = 1\nwave.k = 2\n"); }, &what) == ErrorCode::Parse);
  CHECK(what.find("duplicate") != std::string::npos);
  CHECK(code_of([] { parse_config("[wave\nk = 1\n"); }) == ErrorCode::Parse);
}

TEST_CASE("sections, comments, aliases and complex values") {
  const RunConfig c = parse_config(
      "# scene\n[wave]\nk = 2   # wavenumber\namplitude = 1+2i, -3.5e-1i, 0\n[cloud]\ngamma = 4-1e-3i\n");
  CHECK(c.real("wave.k") == 2.0);
  CHECK(c.cvec3("wave.amplitude") == CVec3(cplx(1, 2), cplx(0, -0.35), 0.0));
  CHECK(c.complex("cloud.gamma.value") == cplx(4, -1e-3));
  CHECK(parse_complex("i") == cplx(0, 1));
  CHECK(parse_complex("-i") == cplx(0, -1));
  CHECK(parse_complex("1e-3+2e+1i") == cplx(1e-3, 20));
  CHECK(parse_complex("-2") == cplx(-2, 0));
}

TEST_CASE("environment overrides") {
  CHECK(env_name("wave.k") == "SMALLSCAT_WAVE_K");
  CHECK(env_name("density.N.value") == "SMALLSCAT_DENSITY_N_VALUE");
  std::map<std::string, std::string> env{{"SMALLSCAT_WAVE_K", "3"}, {"SMALLSCAT_SEED", "7"}};
  const EnvLookup look = [&](const std::string& n) -> std::optional<std::string> {
    if (auto it = env.find(n); it != env.end()) return it->second;
    return std::nullopt;
  };
  const RunConfig c = parse_config("wave.k = 2\n", look);
  CHECK(c.real("wave.k") == 3.0);
  CHECK(c.integer("seed") == 7);
  env["SMALLSCAT_WAVE_K"] = "-3";
  CHECK(code_of([&] { parse_config("", look); }) == ErrorCode::Schema);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ErrorCode::Schema) == 2);
  CHECK(exit_code_for(ErrorCode::Parse) == 2);
  CHECK(exit_code_for(ErrorCode::Overlap) == 2);
  CHECK(exit_code_for(ErrorCode::NoConvergence) == 3);
  CHECK(exit_code_for(ErrorCode::SingularSystem) == 3);
  CHECK(exit_code_for(ErrorCode::Io) == 4);
}

TEST_CASE("single run writes one row per probe and the diagnostics") {
  const fs::path out = scratch("single");
  const RunConfig c = parse_config("command = single\nprobes.count = 7\nparticle.radius = 0.01\n");
  const auto files = run(c, out);
  CHECK(files.size() == 2);
  CHECK(read_csv(out / "field.csv").size() == 7);
  const std::string s = slurp(out / "summary.json");
  CHECK(s.find("\"ka\": 0.01") != std::string::npos);
  CHECK(s.find("\"a_over_d_min\"") != std::string::npos);
  CHECK(s.find("wall_time_s") == std::string::npos);
}

TEST_CASE("many with one particle matches single") {
  const std::string scene =
      "wave.direction = 0, 0.6, 0.8\nwave.amplitude = 1, 0.8i, -0.6i\noutput.H = true\nprobes.count = 9\n";
  const fs::path o1 = scratch("m1_single"), o2 = scratch("m1_many");
  run(parse_config(scene + "command = single\nparticle.center = 0.1,0.2,0.3\nparticle.radius = 0.005\n"
                           "particle.gamma = 25+0.5i\nparticle.kappa = 1.5\n"),
      o1);
  run(parse_config(scene + "command = many\nlattice.n = 1\nlattice.origin = 0.1,0.2,0.3\n"
                           "cloud.radius = 0.005\ncloud.gamma = 25+0.5i\ncloud.kappa = 1.5\n"),
      o2);
  const auto a = read_csv(o1 / "field.csv"), b = read_csv(o2 / "field.csv");
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].size() == 15);
    double scale = 0.0, diff = 0.0;
    for (std::size_t j = 3; j < a[i].size(); ++j) {
      scale = std::max(scale, std::abs(a[i][j]));
      diff = std::max(diff, std::abs(a[i][j] - b[i][j]));
    }
    CHECK(diff <= 1e-12 * scale);
  }
}

TEST_CASE("design then effective through files recovers n^2") {
  const std::string scene =
      "domain.lo = 0,0,0\ndomain.hi = 0.4,0.4,0.4\ngrid.n = 5,5,5\nwave.k = 2\n"
      "density.N.kind = linear\ndensity.N.value = 1\ndensity.N.gradient = 0.5,0,0\n"
      "design.n2.kind = gaussian\ndesign.n2.value = 1.2+0.01i\ndesign.n2.amplitude = 0.3\n"
      "design.n2.center = 0.2,0.2,0.2\ndesign.n2.width = 0.1\n";
  const fs::path od = scratch("design"), oe = scratch("effective");
  run(parse_config(scene + "command = design\n"), od);
  run(parse_config(scene + "command = effective\neffective.source = design\neffective.design_csv = " +
                   (od / "gamma.csv").string() + "\n"),
      oe);
  const RunConfig c = parse_config(scene);
  const FieldSpec target = c.field("design.n2");
  const auto rows = read_csv(oe / "n2.csv");
  REQUIRE(rows.size() == 125);
  for (const auto& r : rows) {
    const cplx n2(r[3], r[4]);
    CHECK(std::abs(n2 - target(Vec3(r[0], r[1], r[2]))) <= 1e-12);
  }
  CHECK(read_csv(oe / "field.csv").size() == 125);
}

TEST_CASE("identical config and seed reproduce every file bitwise") {
  const std::string cfg =
      "command = many\ncloud.layout = density\ndomain.hi = 0.3,0.3,0.3\ncloud.radius = 0.02\n"
      "placement.jitter = 0.1\nseed = 42\nprobes.kind = exterior\nprobes.count = 5\n"
      "moments.mode = midpoint\n";
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const auto fa = run(parse_config(cfg), a);
  run(parse_config(cfg), b);
  REQUIRE(fa.size() == 3);
  for (const fs::path& f : fa) CHECK(slurp(f) == slurp(b / f.filename()));
  // a different seed moves the jittered centers
  RunConfig other = parse_config(cfg);
  other.set("seed", "43");
  const fs::path e = scratch("det_e");
  run(other, e);
  CHECK(slurp(a / "moments.csv") != slurp(e / "moments.csv"));
}

TEST_CASE("failures produce error.json and exit codes") {
  const fs::path out = scratch("fail");
  std::string msg;
  // two overlapping balls
  const RunConfig overlap = parse_config("command = many\nlattice.n = 2,1,1\nlattice.spacing = 0.01\n");
  CHECK(run_guarded(overlap, out, &msg) == 2);
  CHECK(slurp(out / "error.json").find("OverlapError") != std::string::npos);
  // probe inside the near zone is a numerical failure
  const RunConfig near = parse_config("command = single\nprobes.count = 1\nprobes.start = 0.005,0,0\n");
  CHECK(run_guarded(near, out, &msg) == 3);
  CHECK(slurp(out / "error.json").find("InsideNearZone") != std::string::npos);
  // output path is a regular file
  const fs::path file = scratch("plainfile");
  fs::create_directories(file.parent_path());
  std::ofstream(file) << "x";
  CHECK(run_guarded(parse_config("command = check-dispersion\n"), file / "sub", &msg) == 4);
  CHECK(run_guarded(parse_config(""), out, &msg) == 2);
}

TEST_CASE("dispersion command classifies the analytic cases") {
  const fs::path out = scratch("disp");
  run(parse_config("command = check-dispersion\ndispersion.c0 = 2\ndispersion.power = -2\n"
                   "dispersion.omega = 0.5, 1, 2\n"),
      out);
  for (const auto& r : read_csv(out / "dispersion.csv")) CHECK(r[5] == 1.0);
  run(parse_config("command = check-dispersion\ndispersion.c0 = 2\ndispersion.power = -1\n"), out);
  for (const auto& r : read_csv(out / "dispersion.csv")) CHECK(r[5] == 0.0);
}
