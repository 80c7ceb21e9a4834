#pragma once

#include <json.hpp>

#include <string>

namespace metriplex::cli {

enum ExitCode : int {
  kOk = 0,
  kVerificationFailed = 1,
  kUsageError = 2,
  kNumericalFailure = 3,
};

constexpr const char* kSchema = "metriplex.run/1";

/// Validate a run config against the schema of its scenario and fill in
/// defaults.  Throws ConfigError naming the offending key.
nlohmann::json normalize_config(const nlohmann::json& config);

/// Execute a normalised config; returns the manifest path.
std::string execute(const nlohmann::json& config);

/// Entry point shared by the executable and the tests.
int run(int argc, char** argv);

}  // namespace metriplex::cli
