// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "betapool/binned.hpp"

namespace betapool {

/// Natural-log score of one forecast at one observation, truncated at -10.
/// `raw` keeps the untruncated value (-inf for zero mass) so truncation
/// frequency can be audited downstream.
struct ScoreRecord {
  std::string method;  // display name, e.g. "BMC2"
  std::string location;
  std::string season;
  int epiweek = 0;
  int target = 0;
  double raw = 0.0;        // ln P_j, may be -infinity
  double log_score = 0.0;  // max(raw, -10)
};

// max(ln P_j, -10). Throws StructureError if the observation's bin index does
// not fit the distribution.
double log_score(const BinnedDistribution& dist, const Observation& obs);

// ln P_j without truncation; -infinity on zero mass.
double raw_log_score(const BinnedDistribution& dist, const Observation& obs);

constexpr double kLogScoreFloor = -10.0;

enum class GroupField { Target, Season, Location };

/// One aggregation cell: records are always split by method, then by the
/// requested fields. Ungrouped fields render as "all" / target 0.
struct AggregateRow {
  std::string method;
  int target = 0;          // 0 when not grouped by target
  std::string season;      // "all" when not grouped
  std::string location;    // "all" when not grouped
  std::size_t n = 0;
  double mean_log_score = 0.0;
  std::size_t truncated = 0;  // how many scores hit the -10 floor
};

// Arithmetic mean of truncated scores per group, rows sorted by key.
// Supported groupings: {}, {Target}, {Season}, {Target,Season},
// {Target,Season,Location} and any other subset; `by` order is irrelevant.
std::vector<AggregateRow> aggregate(std::span<const ScoreRecord> scores,
                                    const std::vector<GroupField>& by);

}  // namespace betapool
