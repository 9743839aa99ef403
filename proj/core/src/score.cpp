// Apache License, Version 2.0, refer to LICENSE.txt
#include "betapool/score.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace betapool {

double raw_log_score(const BinnedDistribution& dist, const Observation& obs) {
  if (obs.bin_index >= dist.bin_count()) {
    throw StructureError("observation bin " + std::to_string(obs.bin_index) +
                         " outside distribution with " +
                         std::to_string(dist.bin_count()) + " bins");
  }
  return std::log(dist.probs()[obs.bin_index]);  // log(0) == -inf
}

double log_score(const BinnedDistribution& dist, const Observation& obs) {
  return std::max(raw_log_score(dist, obs), kLogScoreFloor);
}

std::vector<AggregateRow> aggregate(std::span<const ScoreRecord> scores,
                                    const std::vector<GroupField>& by) {
  const bool by_target =
      std::find(by.begin(), by.end(), GroupField::Target) != by.end();
  const bool by_season =
      std::find(by.begin(), by.end(), GroupField::Season) != by.end();
  const bool by_location =
      std::find(by.begin(), by.end(), GroupField::Location) != by.end();

  using Key = std::tuple<std::string, int, std::string, std::string>;
  struct Cell {
    double sum = 0.0;
    std::size_t n = 0;
    std::size_t truncated = 0;
  };
  std::map<Key, Cell> cells;
  for (const auto& s : scores) {
    Key key{s.method, by_target ? s.target : 0,
            by_season ? s.season : std::string("all"),
            by_location ? s.location : std::string("all")};
    auto& cell = cells[key];
    cell.sum += s.log_score;
    cell.n += 1;
    if (s.log_score <= kLogScoreFloor) cell.truncated += 1;
  }

  std::vector<AggregateRow> rows;
  rows.reserve(cells.size());
  for (const auto& [key, cell] : cells) {
    AggregateRow row;
    row.method = std::get<0>(key);
    row.target = std::get<1>(key);
    row.season = std::get<2>(key);
    row.location = std::get<3>(key);
    row.n = cell.n;
    row.mean_log_score = cell.sum / static_cast<double>(cell.n);
    row.truncated = cell.truncated;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace betapool
