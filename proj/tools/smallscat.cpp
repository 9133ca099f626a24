#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "smallscat/config.hpp"
#include "smallscat/parallel.hpp"
#include "smallscat/run.hpp"

using namespace smallscat;

int main(int argc, char** argv) {
  CLI::App app{"Small-body electromagnetic scattering and effective-medium runs"};
  std::string command, config_path, out = "out", mode, solver;
  unsigned threads = 0;
  long seed = -1;
  app.add_option("command", command, "single | many | effective | design | converge | check-dispersion");
  app.add_option("--config", config_path, "key = value configuration file")->required();
  app.add_option("--out", out, "output directory");
  app.add_option("--threads", threads, "worker threads (0 = all cores)");
  app.add_option("--mode", mode, "moment mode")->check(CLI::IsMember({"auto", "quadrature", "midpoint"}));
  app.add_option("--solver", solver, "linear solver")->check(CLI::IsMember({"auto", "direct", "iterative"}));
  app.add_option("--seed", seed, "placement seed")->check(CLI::NonNegativeNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  set_thread_count(threads);

  // precedence: file < environment < flags
  std::map<std::string, std::string> flags;
  if (!command.empty()) flags[env_name("command")] = command;
  if (!mode.empty()) flags[env_name("moments.mode")] = mode;
  if (!solver.empty()) {
    flags[env_name("solver.kind")] = solver;
    flags[env_name("effective.solver")] = solver;
  }
  if (seed >= 0) flags[env_name("seed")] = std::to_string(seed);
  const EnvLookup lookup = [&](const std::string& name) -> std::optional<std::string> {
    if (auto it = flags.find(name); it != flags.end()) return it->second;
    return process_env(name);
  };

  try {
    std::ifstream f(config_path);
    if (!f) throw Error(ErrorCode::Io, "cannot read config '" + config_path + "'");
    std::ostringstream text;
    text << f.rdbuf();
    const RunConfig cfg = parse_config(text.str(), lookup);
    std::string message;
    const int rc = run_guarded(cfg, out, &message);
    if (rc != 0) std::cerr << "smallscat: " << message << '\n';
    return rc;
  } catch (const Error& e) {
    std::cerr << "smallscat: " << to_string(e.code()) << ": " << e.what() << '\n';
    return report_error(e, out);
  }
}
