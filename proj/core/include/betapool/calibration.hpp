// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "betapool/binned.hpp"

namespace betapool {

/// Randomized probability integral transform draw for one observation under
/// one ensemble: value = F(l_j) + U (F(u_j) - F(l_j)) with U the recorded
/// uniform sub-draw.
struct PITValue {
  std::string method;
  std::string location;
  std::string season;
  int epiweek = 0;
  int target = 0;
  std::string period;  // "train" or "test"
  double value = 0.0;
  double u_draw = 0.0;
};

/// Counter-based uniform source. Each record's draw is a pure function of
/// (seed, method, location, season, epiweek, target), so adding or removing
/// records never perturbs the draws of the others.
class PitRng {
 public:
  explicit PitRng(std::uint64_t seed) : seed_(seed) {}
  // U in [0, 1) for this record key.
  double draw(const std::string& method, const std::string& location,
              const std::string& season, int epiweek, int target) const;
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

// PIT value for one observation; fills method/period labels from arguments.
PITValue pit(const BinnedDistribution& dist, const Observation& obs,
             const PitRng& rng, const std::string& method,
             const std::string& period = "test");

/// Empirical CDF of a PIT sample: F_n(x) = #{z <= x} / n.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> values);  // sorts; throws on empty
  double operator()(double x) const;
  const std::vector<double>& sorted() const { return sorted_; }
  // Plot-ready (x, F_n(x)) pairs: a 0.01 grid over [0,1] merged with the jump
  // points, deduplicated and sorted.
  std::vector<std::pair<double, double>> curve() const;

 private:
  std::vector<double> sorted_;
};

// Exact integral over [0,1] of (F_n(x) - x)^2 against the uniform CDF,
// evaluated in closed form segment by segment between sorted PIT values.
double cramer_distance(std::span<const double> pit_values);

/// One group's calibration summary (plus the points of its CDF curve, left to
/// the caller to export).
struct CalibrationRow {
  std::string method;
  int target = 0;
  std::string season;  // "all" when pooled over seasons
  std::string period;  // "train" / "test"
  std::size_t n = 0;
  double cramer = 0.0;
  std::vector<std::pair<double, double>> curve;
};

// Groups PITs by (method, target, period) and (method, target, season,
// period) and computes the empirical CDF curve and Cramer distance per
// group. Groups are emitted in sorted key order; empty input yields no rows.
std::vector<CalibrationRow> calibration_report(std::span<const PITValue> pits);

}  // namespace betapool
