// Apache License, Version 2.0, refer to LICENSE.txt
#include "betapool/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "betapool/epiweek.hpp"

#include <json.hpp>

#include "betapool/hashing.hpp"

namespace betapool {

namespace {

using nlohmann::json;

json to_json(const Config& c) {
  json j;
  json dirs = json::array();
  for (const auto& d : c.forecast_dirs) dirs.push_back(d.string());
  j["forecast_dirs"] = dirs;
  j["truth"] = c.truth.string();
  j["models"] = c.models;
  j["locations"] = c.locations;
  j["targets"] = c.targets;
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(method_name(m));
  j["methods"] = methods;
  j["k_grid"] = c.k_grid;
  j["k_override"] = c.k_override;
  j["test_seasons"] = c.test_seasons;
  j["seed"] = c.seed;
  j["out"] = c.out.string();
  j["jobs"] = c.jobs;
  j["optimizer"] = {{"restarts", c.optimizer.restarts},
                    {"max_iterations", c.optimizer.max_iterations},
                    {"rel_tol", c.optimizer.rel_tol},
                    {"component_floor", c.optimizer.component_floor},
                    {"warm_jitter", c.optimizer.warm_jitter}};
  return j;
}

template <typename T>
void read_if_present(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    out = j.at(key).get<T>();
  }
}

}  // namespace

std::string Config::canonical_json() const {
  return to_json(*this).dump();  // nlohmann objects iterate in sorted key order
}

std::string Config::hash() const {
  const std::uint64_t h = fnv1a(canonical_json());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config '" + path.string() + "'");
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " +
                      e.what());
  }

  static const std::set<std::string> known = {
      "forecast_dirs", "truth",  "models",      "locations",
      "targets",       "methods", "k_grid",     "k_override",
      "test_seasons",  "seed",   "out",         "jobs",
      "optimizer"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  Config c;
  try {
    if (j.contains("forecast_dirs")) {
      for (const auto& d : j.at("forecast_dirs")) {
        c.forecast_dirs.emplace_back(d.get<std::string>());
      }
    }
    if (j.contains("truth")) c.truth = j.at("truth").get<std::string>();
    read_if_present(j, "models", c.models);
    read_if_present(j, "locations", c.locations);
    read_if_present(j, "targets", c.targets);
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& name : j.at("methods")) {
        c.methods.push_back(method_from_name(name.get<std::string>()));
      }
    }
    read_if_present(j, "k_grid", c.k_grid);
    read_if_present(j, "k_override", c.k_override);
    read_if_present(j, "test_seasons", c.test_seasons);
    read_if_present(j, "seed", c.seed);
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    read_if_present(j, "jobs", c.jobs);
    if (j.contains("optimizer")) {
      const json& o = j.at("optimizer");
      static const std::set<std::string> known_opt = {
          "restarts", "max_iterations", "rel_tol", "component_floor",
          "warm_jitter"};
      for (const auto& [key, _] : o.items()) {
        if (!known_opt.contains(key)) {
          throw ConfigError("unknown optimizer key '" + key + "'");
        }
      }
      read_if_present(o, "restarts", c.optimizer.restarts);
      read_if_present(o, "max_iterations", c.optimizer.max_iterations);
      read_if_present(o, "rel_tol", c.optimizer.rel_tol);
      read_if_present(o, "component_floor", c.optimizer.component_floor);
      read_if_present(o, "warm_jitter", c.optimizer.warm_jitter);
    }
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  } catch (const DomainError& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }

  // Resolve relative paths against the config file's directory.
  const auto base = path.parent_path();
  auto resolve = [&base](std::filesystem::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  for (auto& d : c.forecast_dirs) resolve(d);
  resolve(c.truth);
  resolve(c.out);

  if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (c.optimizer.restarts < 1) throw ConfigError("optimizer.restarts must be >= 1");
  for (int t : c.targets) {
    if (t < 1 || t > 4) throw ConfigError("targets must be within 1..4");
  }
  for (std::size_t k : c.k_grid) {
    if (k < 1) throw ConfigError("k_grid entries must be >= 1");
  }
  std::set<std::string> season_seen;
  for (const auto& s : c.test_seasons) {
    try {
      season_start_year(s);
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
    if (!season_seen.insert(s).second) {
      throw ConfigError("duplicate test season '" + s + "'");
    }
  }
  return c;
}

void apply_overrides(Config& config, const ConfigOverrides& overrides) {
  if (!overrides.methods.empty()) {
    config.methods.clear();
    for (const auto& name : overrides.methods) {
      try {
        config.methods.push_back(method_from_name(name));
      } catch (const DomainError& e) {
        throw ConfigError(e.what());
      }
    }
  }
  if (!overrides.targets.empty()) {
    config.targets = overrides.targets;
    for (int t : config.targets) {
      if (t < 1 || t > 4) throw ConfigError("targets must be within 1..4");
    }
  }
  if (!overrides.test_seasons.empty()) {
    config.test_seasons = overrides.test_seasons;
    for (const auto& s : config.test_seasons) {
      try {
        season_start_year(s);
      } catch (const DataError& e) {
        throw ConfigError(e.what());
      }
    }
  }
  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.out) config.out = *overrides.out;
  if (overrides.jobs) {
    config.jobs = *overrides.jobs;
    if (config.jobs < 1) throw ConfigError("jobs must be >= 1");
  }
}

}  // namespace betapool
