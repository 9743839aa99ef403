// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "betapool/beta_fn.hpp"
#include "betapool/binned.hpp"

namespace betapool {

enum class Method { LP, EW_LP, BLP, EW_BLP, BMC, EW_BMC };

bool is_equal_weight(Method m);
bool is_mixture(Method m);  // BMC / EW_BMC
// Base name as used in configs and serialized artifacts ("EW-BMC").
std::string method_base_name(Method m);
// Display label; mixture methods get K appended ("BMC2").
std::string method_name(Method m, std::size_t k = 1);
// Inverse of method_base_name.
Method method_from_name(const std::string& name);

/// Full parameter set of a combination ensemble:
///   theta  - K mixture weights over beta components
///   betas  - K beta transforms (alpha_k, beta_k)
///   omega  - K rows of M model weights, each row on the simplex
/// LP-family methods are the K=1, alpha=beta=1 corner of the same layout.
struct EnsembleParams {
  Method method = Method::EW_LP;
  std::size_t K = 1;
  std::vector<double> theta;
  std::vector<BetaParams> betas;
  std::vector<std::vector<double>> omega;

  std::size_t model_count() const { return omega.empty() ? 0 : omega[0].size(); }

  // Enforces the invariants (simplex rows, EW rows fixed at 1/M, LP-family
  // K=1 with unit betas) and renormalizes theta and each omega row so their
  // left-to-right sums are exactly 1. Throws DomainError.
  void validate();

  // Equal-weight LP over M models.
  static EnsembleParams ew_lp(std::size_t M);
  // Weighted LP with the given simplex weights.
  static EnsembleParams lp(std::vector<double> weights);
  static EnsembleParams ew_blp(std::size_t M, BetaParams bp);
  static EnsembleParams blp(std::vector<double> weights, BetaParams bp);
  static EnsembleParams bmc(Method method, std::vector<double> theta,
                            std::vector<BetaParams> betas,
                            std::vector<std::vector<double>> omega);
};

// Linear pool: bin mass = sum_m weights[m] * P_{m,j}.
BinnedDistribution combine_lp(std::span<const BinnedDistribution> components,
                              std::span<const double> weights);

// Beta mixture combination evaluated on the component grid: bin j receives
// F(u_j) - F(l_j) where F is the transformed CDF sum_k theta_k *
// B_{alpha_k,beta_k}(sum_m omega_km F_m(.)). Tiny negative masses from
// cancellation are clamped at 1e-12 and the result renormalized.
// LP-family params reduce to combine_lp output exactly.
BinnedDistribution combine_bmc(std::span<const BinnedDistribution> components,
                               const EnsembleParams& params);

// Transformed ensemble CDF at one bin edge (edge_index in 0..I).
double ensemble_cdf_at(std::span<const BinnedDistribution> components,
                       const EnsembleParams& params, std::size_t edge_index);

namespace detail {
// Shared precondition: all components on one grid, at least one component.
void check_components(std::span<const BinnedDistribution> components);
// Transformed CDF evaluated from per-component edge cumulatives
// (edge_cums[m][e]); used by combine and by the likelihood evaluation.
double transformed_cdf(const EnsembleParams& params,
                       const std::vector<std::vector<double>>& edge_cums,
                       std::size_t edge_index);
}  // namespace detail

}  // namespace betapool
