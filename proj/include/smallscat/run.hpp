#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "smallscat/config.hpp"
#include "smallscat/error.hpp"

namespace smallscat {

/// 2 for configuration errors, 3 for numerical failures, 4 for I/O.
int exit_code_for(ErrorCode code);

/// Executes the configured pipeline and writes its artifacts under `out`.
/// Returns the files written. Throws Error on failure.
std::vector<std::filesystem::path> run(const RunConfig& cfg, const std::filesystem::path& out);

/// run() with failures turned into an exit code and `out/error.json`
/// ({"error": {"code", "message", "exit_code"}}).
int run_guarded(const RunConfig& cfg, const std::filesystem::path& out, std::string* message = nullptr);

/// Writes error.json for a failure that happened before run() (e.g. parsing).
/// Returns the exit code.
int report_error(const Error& e, const std::filesystem::path& out);

}  // namespace smallscat
