// Apache License, Version 2.0, refer to LICENSE.txt
#include "betapool/combine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace betapool {

namespace {

constexpr double kClampThreshold = 1e-12;

double checked_total(const std::vector<double>& v, const char* what) {
  double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw DomainError(std::string(what) + " must have positive finite total");
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw DomainError(std::string(what) + " must sum to 1, got " +
                      std::to_string(total));
  }
  return total;
}

// Renormalize a nonnegative vector so its left-to-right sum is exactly 1.
void exact_simplex(std::vector<double>& v, const char* what) {
  const double total = checked_total(v, what);
  for (double& x : v) x /= total;
  for (int pass = 0; pass < 4; ++pass) {
    double s = std::accumulate(v.begin(), v.end(), 0.0);
    if (s == 1.0) break;
    *std::max_element(v.begin(), v.end()) += 1.0 - s;
  }
}

}  // namespace

bool is_equal_weight(Method m) {
  return m == Method::EW_LP || m == Method::EW_BLP || m == Method::EW_BMC;
}

bool is_mixture(Method m) { return m == Method::BMC || m == Method::EW_BMC; }

std::string method_name(Method m, std::size_t k) {
  switch (m) {
    case Method::LP: return "LP";
    case Method::EW_LP: return "EW-LP";
    case Method::BLP: return "BLP";
    case Method::EW_BLP: return "EW-BLP";
    case Method::BMC: return "BMC" + std::to_string(k);
    case Method::EW_BMC: return "EW-BMC" + std::to_string(k);
  }
  throw DomainError("unknown method");
}

Method method_from_name(const std::string& name) {
  if (name == "LP") return Method::LP;
  if (name == "EW-LP") return Method::EW_LP;
  if (name == "BLP") return Method::BLP;
  if (name == "EW-BLP") return Method::EW_BLP;
  if (name == "BMC") return Method::BMC;
  if (name == "EW-BMC") return Method::EW_BMC;
  throw DomainError("unknown method name '" + name + "'");
}

void EnsembleParams::validate() {
  if (K == 0 || theta.size() != K || betas.size() != K || omega.size() != K) {
    throw DomainError("ensemble params: theta/betas/omega must all have K=" +
                      std::to_string(K) + " entries");
  }
  const std::size_t M = omega[0].size();
  if (M == 0) {
    throw DomainError("ensemble params: at least one model required");
  }
  for (const auto& row : omega) {
    if (row.size() != M) {
      throw DomainError("ensemble params: ragged omega rows");
    }
    for (double w : row) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw DomainError("ensemble params: model weights must be >= 0");
      }
    }
  }
  for (double t : theta) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
      throw DomainError("ensemble params: theta must be >= 0");
    }
  }
  for (const auto& bp : betas) bp.check();

  if (!is_mixture(method) && K != 1) {
    throw DomainError("LP/BLP-family methods require K=1");
  }
  if (method == Method::LP || method == Method::EW_LP) {
    if (betas[0] != BetaParams{1.0, 1.0}) {
      throw DomainError("LP methods fix alpha=beta=1");
    }
  }
  exact_simplex(theta, "theta");
  if (is_equal_weight(method)) {
    // Keep EW rows exactly 1/M; renormalizing would perturb them.
    const double ew = 1.0 / static_cast<double>(M);
    for (auto& row : omega) {
      for (double w : row) {
        if (w != ew) {
          throw DomainError("EW methods require every model weight == 1/M");
        }
      }
      checked_total(row, "omega row");
    }
  } else {
    for (auto& row : omega) exact_simplex(row, "omega row");
  }
}

EnsembleParams EnsembleParams::ew_lp(std::size_t M) {
  EnsembleParams p;
  p.method = Method::EW_LP;
  p.K = 1;
  p.theta = {1.0};
  p.betas = {BetaParams{1.0, 1.0}};
  p.omega = {std::vector<double>(M, 1.0 / static_cast<double>(M))};
  p.validate();
  return p;
}

EnsembleParams EnsembleParams::lp(std::vector<double> weights) {
  EnsembleParams p;
  p.method = Method::LP;
  p.K = 1;
  p.theta = {1.0};
  p.betas = {BetaParams{1.0, 1.0}};
  p.omega = {std::move(weights)};
  p.validate();
  return p;
}

EnsembleParams EnsembleParams::ew_blp(std::size_t M, BetaParams bp) {
  EnsembleParams p;
  p.method = Method::EW_BLP;
  p.K = 1;
  p.theta = {1.0};
  p.betas = {bp};
  p.omega = {std::vector<double>(M, 1.0 / static_cast<double>(M))};
  p.validate();
  return p;
}

EnsembleParams EnsembleParams::blp(std::vector<double> weights, BetaParams bp) {
  EnsembleParams p;
  p.method = Method::BLP;
  p.K = 1;
  p.theta = {1.0};
  p.betas = {bp};
  p.omega = {std::move(weights)};
  p.validate();
  return p;
}

EnsembleParams EnsembleParams::bmc(Method method, std::vector<double> theta,
                                   std::vector<BetaParams> betas,
                                   std::vector<std::vector<double>> omega) {
  EnsembleParams p;
  p.method = method;
  p.K = theta.size();
  p.theta = std::move(theta);
  p.betas = std::move(betas);
  p.omega = std::move(omega);
  p.validate();
  return p;
}

namespace detail {

void check_components(std::span<const BinnedDistribution> components) {
  if (components.empty()) {
    throw StructureError("no component distributions");
  }
  const BinStructure& s0 = components[0].structure();
  for (std::size_t m = 1; m < components.size(); ++m) {
    if (components[m].structure() != s0) {
      throw StructureError("component " + std::to_string(m) +
                           " is on a different bin grid");
    }
  }
}

double transformed_cdf(const EnsembleParams& params,
                       const std::vector<std::vector<double>>& edge_cums,
                       std::size_t edge_index) {
  double out = 0.0;
  for (std::size_t k = 0; k < params.K; ++k) {
    double pooled = 0.0;
    for (std::size_t m = 0; m < edge_cums.size(); ++m) {
      pooled += params.omega[k][m] * edge_cums[m][edge_index];
    }
    out += params.theta[k] * beta_cdf(params.betas[k], pooled);
  }
  return out;
}

}  // namespace detail

BinnedDistribution combine_lp(std::span<const BinnedDistribution> components,
                              std::span<const double> weights) {
  detail::check_components(components);
  if (weights.size() != components.size()) {
    throw DomainError("weight count does not match component count");
  }
  std::vector<double> w(weights.begin(), weights.end());
  exact_simplex(w, "weights");

  const std::size_t bins = components[0].bin_count();
  std::vector<double> mass(bins, 0.0);
  for (std::size_t m = 0; m < components.size(); ++m) {
    const auto& p = components[m].probs();
    for (std::size_t j = 0; j < bins; ++j) {
      mass[j] += w[m] * p[j];
    }
  }
  return BinnedDistribution::validated(components[0].structure_ptr(),
                                       std::move(mass));
}

BinnedDistribution combine_bmc(std::span<const BinnedDistribution> components,
                               const EnsembleParams& params) {
  detail::check_components(components);
  EnsembleParams checked = params;
  checked.validate();
  if (checked.model_count() != components.size()) {
    throw DomainError("params expect " + std::to_string(checked.model_count()) +
                      " models, got " + std::to_string(components.size()));
  }

  std::vector<std::vector<double>> edge_cums;
  edge_cums.reserve(components.size());
  for (const auto& c : components) {
    edge_cums.push_back(cumulative_at_edges(c));
  }

  const std::size_t bins = components[0].bin_count();
  std::vector<double> mass(bins);
  double prev = detail::transformed_cdf(checked, edge_cums, 0);
  for (std::size_t j = 0; j < bins; ++j) {
    const double next = detail::transformed_cdf(checked, edge_cums, j + 1);
    double m = next - prev;
    if (m < 0.0) {
      if (m < -kClampThreshold) {
        throw DomainError("transformed CDF decreased by " + std::to_string(-m) +
                          " across bin " + std::to_string(j));
      }
      m = 0.0;
    }
    mass[j] = m;
    prev = next;
  }
  return BinnedDistribution::validated(components[0].structure_ptr(),
                                       std::move(mass));
}

double ensemble_cdf_at(std::span<const BinnedDistribution> components,
                       const EnsembleParams& params, std::size_t edge_index) {
  detail::check_components(components);
  EnsembleParams checked = params;
  checked.validate();
  if (edge_index > components[0].bin_count()) {
    throw DomainError("edge index " + std::to_string(edge_index) +
                      " out of range");
  }
  std::vector<std::vector<double>> edge_cums;
  edge_cums.reserve(components.size());
  for (const auto& c : components) {
    edge_cums.push_back(cumulative_at_edges(c));
  }
  return detail::transformed_cdf(checked, edge_cums, edge_index);
}

}  // namespace betapool
