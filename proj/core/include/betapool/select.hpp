// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "betapool/fit.hpp"

namespace betapool {

struct CVFold {
  std::string held_out_season;
  std::vector<std::string> trained_seasons;
  bool failed = false;
  std::string error;
  std::size_t n_records = 0;
  double mean_logscore = 0.0;  // truncated scores on the held-out season
};

struct CVKStats {
  bool valid = false;  // false when any fold failed
  double mean_validation_logscore = 0.0;  // pooled over all validation records
  // Standard error of the per-season fold means: sample sd / sqrt(#folds).
  double se = 0.0;
  std::vector<CVFold> folds;
};

struct CVResult {
  Method method = Method::BMC;
  int target = 0;
  std::string test_season;
  std::map<std::size_t, CVKStats> per_K;
  std::size_t selected_K = 0;
  std::size_t n_seasons = 0;  // validation fold count
};

// Smallest K whose pooled mean is within one standard error of the best K's
// mean (the se of the best K). Invalid K entries are ignored; throws
// SelectionError when none are valid.
std::size_t one_se_select(const std::map<std::size_t, CVKStats>& per_K);

// Leave-one-season-out cross-validation over the seasons preceding
// `test_season`: for each K and each held-out season, fit on the remaining
// seasons and score the held-out one (scores truncated at -10, per the
// scoring convention). Requires at least 2 training seasons.
CVResult loso_cv(Method method, int target, const Dataset& data,
                 const std::string& test_season,
                 std::span<const std::size_t> k_grid, const FitConfig& config);

}  // namespace betapool
