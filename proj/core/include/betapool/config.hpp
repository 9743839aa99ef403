// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "betapool/combine.hpp"
#include "betapool/fit.hpp"

namespace betapool {

/// Declarative description of one experiment, read from a JSON file. Every
/// run artifact carries the hash of the effective config (file plus CLI
/// overrides) so outputs can be traced back to their settings.
struct Config {
  std::vector<std::filesystem::path> forecast_dirs;
  std::filesystem::path truth;
  std::vector<std::string> models;     // empty: every model found on disk
  std::vector<std::string> locations;  // empty: every location present
  std::vector<int> targets = {1, 2, 3, 4};
  std::vector<Method> methods = {Method::EW_LP, Method::LP,   Method::EW_BLP,
                                 Method::BLP,   Method::EW_BMC, Method::BMC};
  std::vector<std::size_t> k_grid = {2, 3, 4, 5};
  // Explicit K for the mixture methods; 0 means "use the CV selection files".
  std::size_t k_override = 0;
  std::vector<std::string> test_seasons;
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";
  int jobs = 1;
  FitConfig optimizer;

  // Canonical JSON of the effective settings (sorted keys, full precision).
  std::string canonical_json() const;
  // FNV-1a hash of canonical_json(), formatted as 16 hex digits.
  std::string hash() const;
};

// Parses the JSON config file; unknown keys are a ConfigError so typos fail
// loudly. Relative paths are resolved against the config file's directory.
Config load_config(const std::filesystem::path& path);

/// Optional command-line overrides applied on top of the file.
struct ConfigOverrides {
  std::vector<std::string> methods;  // base method names
  std::vector<int> targets;
  std::vector<std::string> test_seasons;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<int> jobs;
};

void apply_overrides(Config& config, const ConfigOverrides& overrides);

}  // namespace betapool
