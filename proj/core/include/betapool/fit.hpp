// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "betapool/combine.hpp"
#include "betapool/dataset.hpp"

namespace betapool {

struct FitConfig {
  // Total number of starts is max(restarts, mandatory warm starts + 1); the
  // first start is always the equal-weight alpha=beta=1 point and nested
  // methods contribute their fitted optima as additional warm starts, which
  // is what makes the likelihood-dominance chain hold by construction.
  int restarts = 5;
  std::uint64_t seed = 0;
  int max_iterations = 500;
  double rel_tol = 1e-8;
  // Component bin masses are floored at this value (then renormalized) before
  // cumulative sums inside the optimizer; a zero ensemble mass has no
  // gradient, and the -10 truncation is a scoring convention, not an
  // estimation rule. Reported likelihoods are computed without the floor.
  double component_floor = 1e-10;
  double warm_jitter = 0.1;  // sd of the perturbation on unconstrained coords

  // Deterministic per-task seed so concurrent (target, season) fits never
  // share random streams.
  FitConfig derived(int target, const std::string& test_season) const;
};

struct FitResult {
  EnsembleParams params;
  // Mean binned log-likelihood of `params` on the training set, recomputed
  // independently of the optimizer path (materialized ensembles, no floor).
  double train_mean_logscore = 0.0;
  bool converged = false;
  int restarts_used = 0;
  std::vector<double> objective_trace;  // winning restart, accepted steps
};

// Modified binned log-likelihood of one observation: log[F(u_j) - F(l_j)]
// where F is the transformed ensemble CDF evaluated at the component edge
// cumulative sums. Returns -infinity when the ensemble mass in the bin is 0.
double binned_loglik(const EnsembleParams& params,
                     std::span<const BinnedDistribution> components,
                     std::size_t obs_bin);

/// Maximum-likelihood fitting over one training set. Nested methods are
/// fitted on demand and memoized, so a full six-method run shares the LP and
/// BLP fits that seed the richer methods.
class Fitter {
 public:
  Fitter(const TrainingSet& training, FitConfig config);

  // K is the beta-component count for BMC/EW-BMC and must be 1 otherwise.
  const FitResult& fit(Method method, std::size_t K = 1);

  const FitConfig& config() const { return config_; }

 private:
  FitResult run(Method method, std::size_t K);

  const TrainingSet& training_;
  FitConfig config_;
  std::map<std::pair<Method, std::size_t>, FitResult> cache_;
};

// One-shot convenience wrapper around Fitter.
FitResult fit(Method method, std::size_t K, const TrainingSet& training,
              const FitConfig& config);

struct TargetFits {
  std::map<int, FitResult> fits;
  std::map<int, std::string> failures;  // per-target error messages
};

// Independent fit per target horizon using all seasons preceding
// `test_season`. Targets with no training data are recorded as failures and
// do not stop the others.
TargetFits fit_all_targets(Method method, std::size_t K, const Dataset& data,
                           const std::string& test_season,
                           std::span<const int> targets,
                           const FitConfig& config);

// Unconstrained reparameterization used by the optimizer, exposed for
// property tests. Layout: [theta (K entries, centered log, present when K>1)]
// [omega row per component (M entries each, centered log, absent for EW)]
// [log alpha_k, log beta_k per component (absent for LP-family)].
std::vector<double> pack_params(const EnsembleParams& params);
EnsembleParams unpack_params(Method method, std::size_t K, std::size_t M,
                             std::span<const double> x);

}  // namespace betapool
