// Apache License, Version 2.0, refer to LICENSE.txt
#include "betapool/dataset.hpp"

#include <algorithm>
#include <set>

#include "betapool/epiweek.hpp"

namespace betapool {

std::vector<std::string> Dataset::seasons() const {
  std::set<std::string> labels;
  for (const auto& r : records) {
    labels.insert(r.obs.season);
  }
  std::vector<std::string> out(labels.begin(), labels.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return season_start_year(a) < season_start_year(b);
  });
  return out;
}

TrainingSet Dataset::training_for(int target,
                                  const std::string& test_season) const {
  const int cutoff = season_start_year(test_season);
  TrainingSet ts;
  ts.model_count = models.size();
  std::set<std::string> present;
  for (const auto& r : records) {
    if (r.obs.target != target) continue;
    if (season_start_year(r.obs.season) >= cutoff) continue;
    ts.records.push_back(&r);
    present.insert(r.obs.season);
  }
  ts.seasons.assign(present.begin(), present.end());
  std::sort(ts.seasons.begin(), ts.seasons.end(), [](const auto& a, const auto& b) {
    return season_start_year(a) < season_start_year(b);
  });
  return ts;
}

TrainingSet Dataset::subset(int target,
                            std::span<const std::string> include) const {
  const std::set<std::string> wanted(include.begin(), include.end());
  TrainingSet ts;
  ts.model_count = models.size();
  std::set<std::string> present;
  for (const auto& r : records) {
    if (r.obs.target != target) continue;
    if (!wanted.contains(r.obs.season)) continue;
    ts.records.push_back(&r);
    present.insert(r.obs.season);
  }
  ts.seasons.assign(present.begin(), present.end());
  std::sort(ts.seasons.begin(), ts.seasons.end(), [](const auto& a, const auto& b) {
    return season_start_year(a) < season_start_year(b);
  });
  return ts;
}

std::vector<const TrainingRecord*> Dataset::records_for(
    int target, const std::string& season) const {
  std::vector<const TrainingRecord*> out;
  for (const auto& r : records) {
    if (r.obs.target == target && r.obs.season == season) {
      out.push_back(&r);
    }
  }
  return out;
}

}  // namespace betapool
