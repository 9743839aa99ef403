// Apache License, Version 2.0, refer to LICENSE.txt
//
// betapool CLI: ingest FluSight-format forecasts, cross-validate the beta
// mixture size, fit the combination methods, and export forecasts, scores
// and calibration diagnostics.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "betapool/pipeline.hpp"
#include "betapool/version.hpp"

namespace {

struct CliArgs {
  std::string config_path;
  betapool::ConfigOverrides overrides;
};

void add_common_flags(CLI::App* cmd, CliArgs& args,
                      std::vector<std::string>& methods,
                      std::vector<int>& targets,
                      std::vector<std::string>& seasons,
                      std::string& seed, std::string& out, int& jobs) {
  cmd->add_option("--config", args.config_path, "Path to the JSON config file")
      ->required();
  cmd->add_option("--methods", methods,
                  "Override: method list (LP, EW-LP, BLP, EW-BLP, BMC, EW-BMC)")
      ->delimiter(',');
  cmd->add_option("--targets", targets, "Override: week-ahead targets (1..4)")
      ->delimiter(',');
  cmd->add_option("--test-seasons", seasons,
                  "Override: test seasons (e.g. 2016/2017)")
      ->delimiter(',');
  cmd->add_option("--seed", seed, "Override: RNG seed");
  cmd->add_option("--out", out, "Override: output directory");
  cmd->add_option("--jobs", jobs, "Override: worker pool size");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibrated ensemble forecasts from binned component forecasts"};
  app.set_version_flag("--version", std::string("betapool ") + BETAPOOL_VERSION);
  app.require_subcommand(1);

  CliArgs args;
  std::vector<std::string> methods;
  std::vector<int> targets;
  std::vector<std::string> seasons;
  std::string seed;
  std::string out;
  int jobs = 0;

  auto* cv = app.add_subcommand(
      "cv", "Leave-one-season-out cross-validation of the mixture size K");
  auto* score = app.add_subcommand(
      "score", "Fit all methods, export forecasts and log scores");
  auto* calibrate = app.add_subcommand(
      "calibrate", "PIT values, probability-plot curves and Cramer distances");
  for (CLI::App* cmd : {cv, score, calibrate}) {
    add_common_flags(cmd, args, methods, targets, seasons, seed, out, jobs);
  }

  CLI11_PARSE(app, argc, argv);

  betapool::Config config;
  try {
    config = betapool::load_config(args.config_path);
    args.overrides.methods = methods;
    args.overrides.targets = targets;
    args.overrides.test_seasons = seasons;
    if (!seed.empty()) args.overrides.seed = std::stoull(seed);
    if (!out.empty()) args.overrides.out = out;
    if (jobs > 0) args.overrides.jobs = jobs;
    betapool::apply_overrides(config, args.overrides);
  } catch (const betapool::Error& e) {
    std::cerr << "betapool: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "betapool: " << e.what() << "\n";
    return 1;
  }

  if (cv->parsed()) return betapool::cmd_cv(config);
  if (score->parsed()) return betapool::cmd_fit_forecast_score(config);
  return betapool::cmd_calibrate(config);
}
