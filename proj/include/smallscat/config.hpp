#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smallscat/fields.hpp"
#include "smallscat/types.hpp"

namespace smallscat {

/// Validated run configuration. Values are kept as normalized strings keyed
/// by their dotted name; every schema key is present (defaults filled).
class RunConfig {
 public:
  const std::string& command() const { return values_.at("command"); }
  const std::map<std::string, std::string>& values() const { return values_; }

  const std::string& text(const std::string& key) const;
  double real(const std::string& key) const;
  long integer(const std::string& key) const;
  bool boolean(const std::string& key) const;
  cplx complex(const std::string& key) const;
  Vec3 vec3(const std::string& key) const;
  CVec3 cvec3(const std::string& key) const;
  std::array<int, 3> triple(const std::string& key) const;
  std::vector<double> real_list(const std::string& key) const;
  /// Built-in field under `prefix` (prefix.kind, prefix.value, ...).
  FieldSpec field(const std::string& prefix) const;

  /// Replaces a value after validating it against the schema.
  void set(const std::string& key, const std::string& value);

 private:
  friend RunConfig parse_config(const std::string&, const std::function<std::optional<std::string>(const std::string&)>&);
  std::map<std::string, std::string> values_;
};

/// Environment lookup used for overrides; returns nullopt when unset.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Environment variable name overriding `key`: SMALLSCAT_ + upper case with
/// '.' and '-' mapped to '_'.
std::string env_name(const std::string& key);

/// Parses `key = value` lines ('#' comments, optional [section] headers that
/// prefix the following keys). Throws Parse with the line number on
/// malformed lines and Schema listing unknown keys or bad values.
RunConfig parse_config(const std::string& text, const EnvLookup& env = {});

/// Process environment lookup.
std::optional<std::string> process_env(const std::string& name);

/// All schema keys in order, for documentation.
std::vector<std::string> schema_keys();

cplx parse_complex(const std::string& s);

}  // namespace smallscat
