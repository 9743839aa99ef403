// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <span>
#include <string>
#include <vector>

#include "betapool/binned.hpp"

namespace betapool {

/// One aligned observation: the M component forecasts that share its key plus
/// the located outcome. Complete-case by construction (exactly M components,
/// roster order).
struct TrainingRecord {
  std::vector<BinnedDistribution> components;
  Observation obs;
};

/// Non-owning view over aligned records used for one parameter fit. Views
/// stay valid while the owning Dataset (or test fixture) is alive.
struct TrainingSet {
  std::vector<const TrainingRecord*> records;
  std::size_t model_count = 0;
  std::vector<std::string> seasons;  // distinct labels present, ordered

  bool empty() const { return records.empty(); }
};

/// All aligned records for an experiment, spanning training and test seasons.
struct Dataset {
  std::vector<std::string> models;  // roster, defines component order
  std::vector<TrainingRecord> records;

  // Distinct season labels, ordered by start year.
  std::vector<std::string> seasons() const;
  // Records for one target whose season is strictly before `test_season`.
  TrainingSet training_for(int target, const std::string& test_season) const;
  // Records for one target restricted to the given seasons.
  TrainingSet subset(int target, std::span<const std::string> include) const;
  // Records for one target in one season (the evaluation slice).
  std::vector<const TrainingRecord*> records_for(
      int target, const std::string& season) const;
};

}  // namespace betapool
