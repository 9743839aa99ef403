// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include "betapool/config.hpp"
#include "betapool/ingest.hpp"

namespace betapool {

/// Ingested and aligned experiment data shared by the subcommands.
struct Experiment {
  Dataset dataset;
  std::vector<std::string> excluded;
};

// Discover + parse submissions, parse truth, align. Throws DataError family
// on ingestion problems.
Experiment load_experiment(const Config& config);

// Leave-one-season-out CV over the K grid for the mixture methods; writes
// cv_table.csv (wide, one row per method/target/season), cv_folds.csv and
// selected_k.csv under <out>/cv/.
void run_cv(const Config& config);

// Fits every configured method per (target, test season), writes parameter
// files under <out>/params/, FluSight-format ensemble forecasts under
// <out>/forecasts/<method>/, per-record scores and aggregation tables under
// <out>/scores/. Throws FitError at the end when any method task failed
// (successful outputs are still written and failures flagged in
// run_summary.csv).
void run_fit_forecast_score(const Config& config);

// Recombines fitted parameters into ensembles for the training and test
// periods, draws PIT values, and writes PIT files, empirical-CDF curve files
// and Cramer distance tables under <out>/calibration/. Requires the params
// files written by run_fit_forecast_score.
void run_calibrate(const Config& config);

// Exception-to-exit-code wrappers used by the CLI: 0 success, 1 config
// error, 2 data error, 3 fit failure.
int cmd_cv(const Config& config);
int cmd_fit_forecast_score(const Config& config);
int cmd_calibrate(const Config& config);

}  // namespace betapool
