// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "betapool/errors.hpp"

namespace betapool {

/// Ordered, disjoint, contiguous half-open bins [edge[i], edge[i+1]) covering
/// the outcome range. The last bin additionally contains its upper edge so a
/// value exactly on the final boundary is still in support.
class BinStructure {
 public:
  // Throws DomainError unless edges are strictly increasing with >= 2 entries.
  explicit BinStructure(std::vector<double> edges);

  std::size_t bin_count() const { return edges_.size() - 1; }
  const std::vector<double>& edges() const { return edges_; }
  double lower(std::size_t bin) const { return edges_[bin]; }
  double upper(std::size_t bin) const { return edges_[bin + 1]; }

  bool operator==(const BinStructure& other) const = default;

 private:
  std::vector<double> edges_;
};

using BinStructurePtr = std::shared_ptr<const BinStructure>;

// Index of the bin containing `value`. Throws OutOfSupportError for values
// below the first edge or above the last.
std::size_t locate_bin(const BinStructure& structure, double value);

/// Probability mass per bin. Construct through `validated`, which enforces the
/// distribution invariants; instances are immutable afterwards.
class BinnedDistribution {
 public:
  // Validation rules:
  //   * probs.size() must equal structure->bin_count()    -> SchemaError
  //   * masses below -1e-9 are rejected                    -> InvalidForecastError
  //   * tiny negatives (>= -1e-9) are clamped to 0
  //   * total mass must lie within 1e-6 of 1               -> InvalidForecastError
  //   * masses are then renormalized to sum to 1 exactly
  static BinnedDistribution validated(BinStructurePtr structure,
                                      std::vector<double> probs);

  const BinStructure& structure() const { return *structure_; }
  const BinStructurePtr& structure_ptr() const { return structure_; }
  const std::vector<double>& probs() const { return probs_; }
  std::size_t bin_count() const { return probs_.size(); }

 private:
  BinnedDistribution(BinStructurePtr structure, std::vector<double> probs)
      : structure_(std::move(structure)), probs_(std::move(probs)) {}

  BinStructurePtr structure_;
  std::vector<double> probs_;
};

// CDF at bin edges as partial sums: [0, P_1, P_1+P_2, ..., 1]. The final
// entry is pinned to exactly 1.
std::vector<double> cumulative_at_edges(const BinnedDistribution& dist);

/// One forecast from one model, keyed the way submission archives key them.
struct ForecastRecord {
  std::string model_id;
  std::string location;
  std::string season;   // e.g. "2016/2017"
  int epiweek = 0;      // YYYYWW
  int target = 0;       // horizon in weeks ahead, 1..4
  BinnedDistribution dist;
};

/// An observed outcome matched to forecast keys, with its bin located.
struct Observation {
  std::string location;
  std::string season;
  int epiweek = 0;
  int target = 0;
  double value = 0.0;       // observed wILI
  std::size_t bin_index = 0;
};

}  // namespace betapool
