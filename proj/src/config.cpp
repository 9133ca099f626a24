#include "smallscat/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <set>
#include <sstream>

#include "smallscat/error.hpp"

namespace smallscat {

namespace {

enum class Type { Text, Enum, Real, Int, Bool, Complex, Vec3, CVec3, Triple, RealList, Path };
enum class Limit { None, Positive, NonNegative, Kappa, Jitter, AtLeast4 };

struct KeySpec {
  std::string key;
  Type type;
  std::string def;
  Limit limit = Limit::None;
  std::vector<std::string> choices = {};
};

void add_field(std::vector<KeySpec>& s, const std::string& p, const std::string& value) {
  s.push_back({p + ".kind", Type::Enum, "constant", Limit::None, {"constant", "linear", "gaussian"}});
  s.push_back({p + ".value", Type::Complex, value});
  s.push_back({p + ".gradient", Type::CVec3, "0,0,0"});
  s.push_back({p + ".amplitude", Type::Complex, "0"});
  s.push_back({p + ".center", Type::Vec3, "0,0,0"});
  s.push_back({p + ".width", Type::Real, "1", Limit::Positive});
}

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> s = [] {
    std::vector<KeySpec> v = {
        {"command", Type::Enum, "", Limit::None,
         {"", "single", "many", "effective", "design", "converge", "check-dispersion"}},
        {"seed", Type::Int, "0", Limit::NonNegative},
        {"wave.k", Type::Real, "1", Limit::Positive},
        {"wave.direction", Type::Vec3, "0,0,1"},
        {"wave.amplitude", Type::CVec3, "1,0,0"},
        {"background.epsilon", Type::Real, "1", Limit::Positive},
        {"background.mu", Type::Real, "1", Limit::Positive},
        {"particle.center", Type::Vec3, "0,0,0"},
        {"particle.radius", Type::Real, "0.01", Limit::Positive},
        {"particle.gamma", Type::Complex, "30"},
        {"particle.kappa", Type::Real, "1", Limit::Kappa},
        {"cloud.layout", Type::Enum, "lattice", Limit::None, {"lattice", "density"}},
        {"cloud.radius", Type::Real, "0.01", Limit::Positive},
        {"cloud.kappa", Type::Real, "1", Limit::Kappa},
        {"lattice.n", Type::Triple, "5,5,5"},
        {"lattice.spacing", Type::Real, "0.1", Limit::Positive},
        {"lattice.origin", Type::Vec3, "0,0,0"},
        {"domain.lo", Type::Vec3, "0,0,0"},
        {"domain.hi", Type::Vec3, "1,1,1"},
        {"placement.jitter", Type::Real, "0", Limit::Jitter},
        {"placement.mass_resolution", Type::Int, "96", Limit::AtLeast4},
        {"moments.mode", Type::Enum, "auto", Limit::None, {"auto", "quadrature", "midpoint"}},
        {"solver.kind", Type::Enum, "auto", Limit::None, {"auto", "direct", "iterative"}},
        {"solver.scheme", Type::Enum, "plain", Limit::None, {"plain", "block-jacobi"}},
        {"solver.tol", Type::Real, "1e-10", Limit::Positive},
        {"solver.max_iter", Type::Int, "500", Limit::Positive},
        {"solver.direct_limit", Type::Int, "1000", Limit::NonNegative},
        {"probes.kind", Type::Enum, "line", Limit::None, {"line", "box", "exterior"}},
        {"probes.start", Type::Vec3, "-1,-1,2"},
        {"probes.end", Type::Vec3, "2,2,2"},
        {"probes.lo", Type::Vec3, "-1,-1,-1"},
        {"probes.hi", Type::Vec3, "2,2,2"},
        {"probes.count", Type::Int, "16", Limit::Positive},
        {"probes.margin", Type::Real, "0.1", Limit::NonNegative},
        {"output.H", Type::Bool, "false"},
        {"output.timing", Type::Bool, "false"},
        {"grid.n", Type::Triple, "16,16,16"},
        {"grid.spacing", Type::Real, "0", Limit::NonNegative},
        {"effective.source", Type::Enum, "density", Limit::None, {"density", "design"}},
        {"effective.design_csv", Type::Path, ""},
        {"effective.solver", Type::Enum, "auto", Limit::None, {"auto", "direct", "iterative"}},
        {"effective.direct_limit", Type::Int, "3000", Limit::NonNegative},
        {"converge.radii", Type::RealList, "0.04,0.02"},
        {"dispersion.n0", Type::Real, "0"},
        {"dispersion.c0", Type::Real, "1"},
        {"dispersion.power", Type::Real, "0"},
        {"dispersion.omega", Type::RealList, "1"},
        {"dispersion.delta", Type::Real, "1e-5", Limit::Positive},
        {"design.passive", Type::Bool, "true"},
    };
    add_field(v, "cloud.gamma", "30");
    add_field(v, "density.N", "1");
    add_field(v, "design.n2", "1");
    return v;
  }();
  return s;
}

const KeySpec* find_spec(const std::string& key) {
  for (const KeySpec& k : schema())
    if (k.key == key) return &k;
  return nullptr;
}

// Bare field prefixes stand for their constant value.
std::string canonical(const std::string& key) {
  for (const char* p : {"cloud.gamma", "density.N", "design.n2"})
    if (key == p) return key + ".value";
  return key;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(s);
  while (std::getline(in, cell, sep)) out.push_back(trim(cell));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
  fail(ErrorCode::Schema, "key '" + key + "': " + why + " (got '" + value + "')");
}

double parse_real(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) throw std::invalid_argument("empty");
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(v)) throw std::invalid_argument(t);
  return v;
}

long parse_int(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) throw std::invalid_argument("empty");
  char* end = nullptr;
  const long v = std::strtol(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size()) throw std::invalid_argument(t);
  return v;
}

bool parse_bool(const std::string& s) {
  const std::string t = trim(s);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw std::invalid_argument(t);
}

void check_limit(const KeySpec& spec, double v, const std::string& raw) {
  switch (spec.limit) {
    case Limit::None:
      break;
    case Limit::Positive:
      if (!(v > 0.0)) bad_value(spec.key, raw, "must be > 0");
      break;
    case Limit::NonNegative:
      if (!(v >= 0.0)) bad_value(spec.key, raw, "must be >= 0");
      break;
    case Limit::Kappa:
      if (!(v > 0.0 && v < 3.0)) bad_value(spec.key, raw, "must lie in (0, 3)");
      break;
    case Limit::Jitter:
      if (!(v >= 0.0 && v <= 0.1)) bad_value(spec.key, raw, "must lie in [0, 0.1]");
      break;
    case Limit::AtLeast4:
      if (!(v >= 4.0)) bad_value(spec.key, raw, "must be >= 4");
      break;
  }
}

// Validates and normalizes one value.
std::string normalize(const KeySpec& spec, const std::string& raw) {
  const std::string v = trim(raw);
  try {
    switch (spec.type) {
      case Type::Text:
      case Type::Path:
        return v;
      case Type::Enum:
        if (std::find(spec.choices.begin(), spec.choices.end(), v) == spec.choices.end()) {
          std::string opts;
          for (const auto& c : spec.choices)
            if (!c.empty()) opts += (opts.empty() ? "" : "|") + c;
          bad_value(spec.key, raw, "expected one of " + opts);
        }
        return v;
      case Type::Real: {
        const double x = parse_real(v);
        check_limit(spec, x, raw);
        return v;
      }
      case Type::Int: {
        const long x = parse_int(v);
        check_limit(spec, static_cast<double>(x), raw);
        return v;
      }
      case Type::Bool:
        return parse_bool(v) ? "true" : "false";
      case Type::Complex:
        parse_complex(v);
        return v;
      case Type::Vec3: {
        const auto parts = split(v, ',');
        if (parts.size() != 3) bad_value(spec.key, raw, "expected three comma-separated reals");
        for (const auto& p : parts) parse_real(p);
        return v;
      }
      case Type::CVec3: {
        const auto parts = split(v, ',');
        if (parts.size() != 3) bad_value(spec.key, raw, "expected three comma-separated complex numbers");
        for (const auto& p : parts) parse_complex(p);
        return v;
      }
      case Type::Triple: {
        const auto parts = split(v, ',');
        if (parts.size() != 1 && parts.size() != 3)
          bad_value(spec.key, raw, "expected one or three positive integers");
        for (const auto& p : parts)
          if (parse_int(p) <= 0) bad_value(spec.key, raw, "entries must be > 0");
        return v;
      }
      case Type::RealList: {
        const auto parts = split(v, ',');
        if (parts.empty()) bad_value(spec.key, raw, "expected a comma-separated list");
        for (const auto& p : parts)
          if (!(parse_real(p) > 0.0)) bad_value(spec.key, raw, "entries must be > 0");
        return v;
      }
    }
  } catch (const std::invalid_argument&) {
    bad_value(spec.key, raw, "malformed value");
  } catch (const std::out_of_range&) {
    bad_value(spec.key, raw, "value out of range");
  }
  return v;
}

}  // namespace

cplx parse_complex(const std::string& s) {
  std::string t;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) t += c;
  if (t.empty()) throw std::invalid_argument("empty");
  if (t.back() != 'i' && t.back() != 'j') return parse_real(t);
  t.pop_back();
  // split at the last sign that is not an exponent sign
  std::size_t cut = std::string::npos;
  for (std::size_t i = t.size(); i-- > 1;) {
    if ((t[i] == '+' || t[i] == '-') && t[i - 1] != 'e' && t[i - 1] != 'E') {
      cut = i;
      break;
    }
  }
  const std::string re = cut == std::string::npos ? "" : t.substr(0, cut);
  std::string im = cut == std::string::npos ? t : t.substr(cut);
  if (im.empty() || im == "+") im = "1";
  if (im == "-") im = "-1";
  return {re.empty() ? 0.0 : parse_real(re), parse_real(im)};
}

std::string env_name(const std::string& key) {
  std::string out = "SMALLSCAT_";
  for (char c : key) {
    if (c == '.' || c == '-') out += '_';
    else out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

std::optional<std::string> process_env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (!v) return std::nullopt;
  return std::string(v);
}

std::vector<std::string> schema_keys() {
  std::vector<std::string> keys;
  for (const KeySpec& k : schema()) keys.push_back(k.key);
  return keys;
}

RunConfig parse_config(const std::string& text, const EnvLookup& env) {
  std::map<std::string, std::pair<std::string, int>> raw;
  std::vector<std::string> unknown;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        fail(ErrorCode::Parse, "line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2)) + ".";
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::Parse, "line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty() || key.find_first_of(" \t") != std::string::npos)
      fail(ErrorCode::Parse, "line " + std::to_string(lineno) + ": malformed key '" + key + "'");
    const std::string full = canonical(section + key);
    if (raw.count(full))
      fail(ErrorCode::Parse, "line " + std::to_string(lineno) + ": duplicate key '" + full + "'");
    if (!find_spec(full)) {
      unknown.push_back(section + key);
      continue;
    }
    raw[full] = {trim(line.substr(eq + 1)), lineno};
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& u : unknown) list += (list.empty() ? "" : ", ") + u;
    fail(ErrorCode::Schema, "unknown keys: " + list);
  }
  RunConfig cfg;
  for (const KeySpec& spec : schema()) {
    std::string value = spec.def;
    int where = 0;
    if (auto it = raw.find(spec.key); it != raw.end()) {
      value = it->second.first;
      where = it->second.second;
    }
    if (env) {
      if (auto e = env(env_name(spec.key))) {
        value = *e;
        where = 0;
      }
    }
    try {
      cfg.values_[spec.key] = normalize(spec, value);
    } catch (const Error& e) {
      if (where > 0) fail(e.code(), "line " + std::to_string(where) + ": " + e.what());
      throw;
    }
  }
  return cfg;
}

const std::string& RunConfig::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorCode::Schema, "unknown key '" + key + "'");
  return it->second;
}

double RunConfig::real(const std::string& key) const { return parse_real(text(key)); }
long RunConfig::integer(const std::string& key) const { return parse_int(text(key)); }
bool RunConfig::boolean(const std::string& key) const { return parse_bool(text(key)); }
cplx RunConfig::complex(const std::string& key) const { return parse_complex(text(key)); }

Vec3 RunConfig::vec3(const std::string& key) const {
  const auto p = split(text(key), ',');
  return Vec3(parse_real(p[0]), parse_real(p[1]), parse_real(p[2]));
}

CVec3 RunConfig::cvec3(const std::string& key) const {
  const auto p = split(text(key), ',');
  return CVec3(parse_complex(p[0]), parse_complex(p[1]), parse_complex(p[2]));
}

std::array<int, 3> RunConfig::triple(const std::string& key) const {
  const auto p = split(text(key), ',');
  if (p.size() == 1) {
    const int n = static_cast<int>(parse_int(p[0]));
    return {n, n, n};
  }
  return {static_cast<int>(parse_int(p[0])), static_cast<int>(parse_int(p[1])),
          static_cast<int>(parse_int(p[2]))};
}

std::vector<double> RunConfig::real_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& p : split(text(key), ',')) out.push_back(parse_real(p));
  return out;
}

FieldSpec RunConfig::field(const std::string& prefix) const {
  const std::string kind = text(prefix + ".kind");
  const cplx value = complex(prefix + ".value");
  if (kind == "linear") return FieldSpec::linear(value, cvec3(prefix + ".gradient"));
  if (kind == "gaussian")
    return FieldSpec::gaussian(value, complex(prefix + ".amplitude"), vec3(prefix + ".center"),
                               real(prefix + ".width"));
  return FieldSpec::constant(value);
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const std::string k = canonical(key);
  const KeySpec* spec = find_spec(k);
  if (!spec) fail(ErrorCode::Schema, "unknown keys: " + key);
  values_[k] = normalize(*spec, value);
}

}  // namespace smallscat
