// Apache License, Version 2.0, refer to LICENSE.txt
#include "betapool/binned.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace betapool {

namespace {

constexpr double kNegativeMassReject = -1e-9;
constexpr double kSumTolerance = 1e-6;

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

BinStructure::BinStructure(std::vector<double> edges) : edges_(std::move(edges)) {
  if (edges_.size() < 2) {
    throw DomainError("bin structure needs at least 2 edges, got " +
                      std::to_string(edges_.size()));
  }
  for (std::size_t i = 0; i + 1 < edges_.size(); ++i) {
    if (!(edges_[i] < edges_[i + 1])) {
      throw DomainError("bin edges must be strictly increasing; edge[" +
                        std::to_string(i) + "]=" + format_double(edges_[i]) +
                        " >= edge[" + std::to_string(i + 1) +
                        "]=" + format_double(edges_[i + 1]));
    }
    if (!std::isfinite(edges_[i])) {
      throw DomainError("bin edges must be finite");
    }
  }
  if (!std::isfinite(edges_.back())) {
    throw DomainError("bin edges must be finite");
  }
}

std::size_t locate_bin(const BinStructure& structure, double value) {
  const auto& edges = structure.edges();
  if (value == edges.back()) {
    return structure.bin_count() - 1;  // last bin closed on both sides
  }
  if (value < edges.front() || value > edges.back()) {
    throw OutOfSupportError("value " + format_double(value) +
                            " outside covered range [" +
                            format_double(edges.front()) + ", " +
                            format_double(edges.back()) + "]");
  }
  auto it = std::upper_bound(edges.begin(), edges.end(), value);
  return static_cast<std::size_t>(it - edges.begin()) - 1;
}

BinnedDistribution BinnedDistribution::validated(BinStructurePtr structure,
                                                 std::vector<double> probs) {
  if (!structure) {
    throw SchemaError("distribution requires a bin structure");
  }
  if (probs.size() != structure->bin_count()) {
    throw SchemaError("expected " + std::to_string(structure->bin_count()) +
                      " bin masses, got " + std::to_string(probs.size()));
  }
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!std::isfinite(probs[i])) {
      throw InvalidForecastError("non-finite mass in bin " + std::to_string(i));
    }
    if (probs[i] < kNegativeMassReject) {
      throw InvalidForecastError("negative mass " + format_double(probs[i]) +
                                 " in bin " + std::to_string(i));
    }
    if (probs[i] < 0.0) {
      probs[i] = 0.0;
    }
  }
  double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw InvalidForecastError("mass sum " + format_double(total) +
                               " outside [1-1e-6, 1+1e-6]");
  }
  for (double& p : probs) {
    p /= total;
  }
  // Nudge the largest mass so the left-to-right sum is exactly 1.
  for (int pass = 0; pass < 4; ++pass) {
    double s = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (s == 1.0) break;
    auto mx = std::max_element(probs.begin(), probs.end());
    *mx += 1.0 - s;
    if (*mx < 0.0) *mx = 0.0;  // cannot happen for valid inputs
  }
  return BinnedDistribution(std::move(structure), std::move(probs));
}

std::vector<double> cumulative_at_edges(const BinnedDistribution& dist) {
  const auto& p = dist.probs();
  std::vector<double> cum(p.size() + 1);
  cum[0] = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cum[i + 1] = cum[i] + p[i];
  }
  const double total = cum.back();
  if (total != 1.0 && total > 0.0) {
    for (std::size_t i = 1; i + 1 < cum.size(); ++i) {
      cum[i] /= total;
    }
  }
  cum.back() = 1.0;
  return cum;
}

}  // namespace betapool
