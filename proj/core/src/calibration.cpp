// Apache License, Version 2.0, refer to LICENSE.txt
#include "betapool/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "betapool/hashing.hpp"

namespace betapool {

double PitRng::draw(const std::string& method, const std::string& location,
                    const std::string& season, int epiweek, int target) const {
  std::uint64_t h = kFnvOffsetBasis;
  h = fnv1a_field(h, method);
  h = fnv1a_field(h, location);
  h = fnv1a_field(h, season);
  h = fnv1a_field(h, std::to_string(epiweek));
  h = fnv1a_field(h, std::to_string(target));
  std::uint64_t x = splitmix64(seed_ ^ h);
  x = splitmix64(x);
  return static_cast<double>(x >> 11) * 0x1.0p-53;  // [0, 1)
}

PITValue pit(const BinnedDistribution& dist, const Observation& obs,
             const PitRng& rng, const std::string& method,
             const std::string& period) {
  const auto cum = cumulative_at_edges(dist);
  if (obs.bin_index >= dist.bin_count()) {
    throw StructureError("observation bin outside distribution");
  }
  const double lo = cum[obs.bin_index];
  const double hi = cum[obs.bin_index + 1];
  const double u =
      rng.draw(method, obs.location, obs.season, obs.epiweek, obs.target);
  PITValue out;
  out.method = method;
  out.location = obs.location;
  out.season = obs.season;
  out.epiweek = obs.epiweek;
  out.target = obs.target;
  out.period = period;
  out.u_draw = u;
  out.value = lo + u * (hi - lo);
  return out;
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> values)
    : sorted_(std::move(values)) {
  if (sorted_.empty()) {
    throw EmptyDatasetError("empirical CDF of an empty sample");
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::operator()(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) /
         static_cast<double>(sorted_.size());
}

std::vector<std::pair<double, double>> EmpiricalCdf::curve() const {
  std::vector<double> xs;
  xs.reserve(101 + sorted_.size());
  for (int i = 0; i <= 100; ++i) {
    xs.push_back(static_cast<double>(i) / 100.0);
  }
  xs.insert(xs.end(), sorted_.begin(), sorted_.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  std::vector<std::pair<double, double>> out;
  out.reserve(xs.size());
  for (double x : xs) {
    out.emplace_back(x, (*this)(x));
  }
  return out;
}

double cramer_distance(std::span<const double> pit_values) {
  if (pit_values.empty()) {
    throw EmptyDatasetError("Cramer distance of an empty sample");
  }
  std::vector<double> z(pit_values.begin(), pit_values.end());
  std::sort(z.begin(), z.end());
  const auto n = static_cast<double>(z.size());

  // On [z_i, z_{i+1}) the empirical CDF is the constant c = i/n, so each
  // segment contributes [(c-a)^3 - (c-b)^3] / 3 for a=z_i, b=z_{i+1}.
  auto segment = [](double c, double a, double b) {
    const double da = c - a;
    const double db = c - b;
    return (da * da * da - db * db * db) / 3.0;
  };

  double total = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double x = std::clamp(z[i], 0.0, 1.0);
    total += segment(static_cast<double>(i) / n, prev, x);
    prev = x;
  }
  total += segment(1.0, prev, 1.0);
  return total;
}

std::vector<CalibrationRow> calibration_report(
    std::span<const PITValue> pits) {
  using Key = std::tuple<std::string, int, std::string, std::string>;
  std::map<Key, std::vector<double>> groups;
  for (const auto& p : pits) {
    groups[{p.method, p.target, std::string("all"), p.period}].push_back(p.value);
    groups[{p.method, p.target, p.season, p.period}].push_back(p.value);
  }

  std::vector<CalibrationRow> rows;
  rows.reserve(groups.size());
  for (auto& [key, values] : groups) {
    CalibrationRow row;
    row.method = std::get<0>(key);
    row.target = std::get<1>(key);
    row.season = std::get<2>(key);
    row.period = std::get<3>(key);
    row.n = values.size();
    row.cramer = cramer_distance(values);
    row.curve = EmpiricalCdf(std::move(values)).curve();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace betapool
