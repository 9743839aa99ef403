// Apache License, Version 2.0, refer to LICENSE.txt
#include "betapool/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "betapool/hashing.hpp"
#include "betapool/lbfgs.hpp"

namespace betapool {

namespace {

constexpr double kLogFloor = 1e-300;   // keeps log(mass) ordered, never -inf
constexpr double kGradMassFloor = 1e-30;  // bounds 1/mass in gradients
constexpr double kPdfCap = 1e12;       // bounds density factors at bin edges
constexpr double kFdStep = 1e-5;       // central differences on log(alpha/beta)

// Which parameter blocks are free for a given method.
struct Layout {
  Method method = Method::EW_LP;
  std::size_t K = 1;
  std::size_t M = 1;
  bool has_theta = false;
  bool has_omega = false;
  bool has_betas = false;

  static Layout make(Method method, std::size_t K, std::size_t M) {
    Layout l;
    l.method = method;
    l.K = K;
    l.M = M;
    l.has_theta = K > 1;
    l.has_omega = !is_equal_weight(method) && M > 1;
    l.has_betas = method != Method::LP && method != Method::EW_LP;
    return l;
  }

  std::size_t dim() const {
    std::size_t d = 0;
    if (has_theta) d += K;
    if (has_omega) d += K * M;
    if (has_betas) d += 2 * K;
    return d;
  }
};

void softmax_into(std::span<const double> x, std::vector<double>& out) {
  const double mx = *std::max_element(x.begin(), x.end());
  double total = 0.0;
  out.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - mx);
    total += out[i];
  }
  for (double& v : out) v /= total;
}

std::vector<double> centered_log(std::span<const double> v) {
  std::vector<double> x(v.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    x[i] = std::log(std::max(v[i], 1e-300));
    mean += x[i];
  }
  mean /= static_cast<double>(v.size());
  for (double& xi : x) xi -= mean;
  return x;
}

EnsembleParams unpack_layout(const Layout& l, std::span<const double> x) {
  EnsembleParams p;
  p.method = l.method;
  p.K = l.K;
  std::size_t at = 0;

  if (l.has_theta) {
    softmax_into(x.subspan(at, l.K), p.theta);
    at += l.K;
  } else {
    p.theta.assign(l.K, 1.0);  // K == 1
  }

  if (l.has_omega) {
    p.omega.resize(l.K);
    for (std::size_t k = 0; k < l.K; ++k) {
      softmax_into(x.subspan(at, l.M), p.omega[k]);
      at += l.M;
    }
  } else {
    p.omega.assign(l.K, std::vector<double>(l.M, 1.0 / static_cast<double>(l.M)));
  }

  if (l.has_betas) {
    p.betas.resize(l.K);
    for (std::size_t k = 0; k < l.K; ++k) {
      p.betas[k] = BetaParams{std::exp(x[at]), std::exp(x[at + 1])};
      at += 2;
    }
  } else {
    p.betas.assign(l.K, BetaParams{1.0, 1.0});
  }
  return p;
}

std::vector<double> pack_layout(const Layout& l, const EnsembleParams& p) {
  std::vector<double> x;
  x.reserve(l.dim());
  if (l.has_theta) {
    auto t = centered_log(p.theta);
    x.insert(x.end(), t.begin(), t.end());
  }
  if (l.has_omega) {
    for (const auto& row : p.omega) {
      auto r = centered_log(row);
      x.insert(x.end(), r.begin(), r.end());
    }
  }
  if (l.has_betas) {
    for (const auto& bp : p.betas) {
      x.push_back(std::log(bp.alpha));
      x.push_back(std::log(bp.beta));
    }
  }
  return x;
}

double capped_pdf(const BetaParams& bp, double s) {
  const double v = beta_pdf(bp, std::clamp(s, 0.0, 1.0));
  return std::min(v, kPdfCap);
}

// Mean modified binned log-likelihood with component masses floored before
// the cumulative sums. Precomputes, per record and model, the floored CDF at
// the observed bin's lower and upper edges; that pair is all the likelihood
// ever reads.
class FlooredObjective {
 public:
  FlooredObjective(const TrainingSet& training, double floor, Layout layout)
      : layout_(layout),
        n_(training.records.size()),
        m_(training.model_count) {
    fl_.resize(n_ * m_);
    fu_.resize(n_ * m_);
    for (std::size_t r = 0; r < n_; ++r) {
      const TrainingRecord& rec = *training.records[r];
      if (rec.components.size() != m_) {
        throw EmptyDatasetError("record has " +
                                std::to_string(rec.components.size()) +
                                " components, expected " + std::to_string(m_));
      }
      const std::size_t j = rec.obs.bin_index;
      for (std::size_t m = 0; m < m_; ++m) {
        const auto& probs = rec.components[m].probs();
        if (j >= probs.size()) {
          throw StructureError("observation bin outside component grid");
        }
        double total = 0.0;
        double below = 0.0;
        double upto = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
          const double p = std::max(probs[i], floor);
          total += p;
          if (i < j) below += p;
          if (i <= j) upto += p;
        }
        fl_[r * m_ + m] = j == 0 ? 0.0 : below / total;
        fu_[r * m_ + m] = j + 1 == probs.size() ? 1.0 : upto / total;
      }
    }
  }

  std::size_t record_count() const { return n_; }

  double operator()(const std::vector<double>& x, std::vector<double>* grad) const {
    return grad ? value_grad(x, *grad) : value(x);
  }

  double value(const std::vector<double>& x) const {
    const EnsembleParams p = unpack_layout(layout_, x);
    double total = 0.0;
    for (std::size_t r = 0; r < n_; ++r) {
      double mass = 0.0;
      for (std::size_t k = 0; k < layout_.K; ++k) {
        const auto [sl, su] = pooled(p, r, k);
        mass += p.theta[k] * (beta_cdf(p.betas[k], su) - beta_cdf(p.betas[k], sl));
      }
      total += std::log(std::max(mass, kLogFloor));
    }
    return total / static_cast<double>(n_);
  }

  double value_grad(const std::vector<double>& x, std::vector<double>& grad) const;

 private:
  std::pair<double, double> pooled(const EnsembleParams& p, std::size_t r,
                                   std::size_t k) const {
    double sl = 0.0;
    double su = 0.0;
    const double* fl = &fl_[r * m_];
    const double* fu = &fu_[r * m_];
    for (std::size_t m = 0; m < m_; ++m) {
      sl += p.omega[k][m] * fl[m];
      su += p.omega[k][m] * fu[m];
    }
    return {sl, su};
  }

  Layout layout_;
  std::size_t n_;
  std::size_t m_;
  std::vector<double> fl_;  // n x m, floored CDF at observed bin lower edge
  std::vector<double> fu_;  // n x m, floored CDF at observed bin upper edge
};

double FlooredObjective::value_grad(const std::vector<double>& x,
                                    std::vector<double>& grad) const {
  const EnsembleParams p = unpack_layout(layout_, x);
  const std::size_t K = layout_.K;
  const std::size_t M = m_;

  grad.assign(layout_.dim(), 0.0);
  std::vector<double> dtheta_raw(K, 0.0);  // chained through softmax at the end
  double* domega = nullptr;                // chained per record, x-space
  double* dlog_ab = nullptr;               // (dlog alpha_k, dlog beta_k)
  {
    std::size_t at = layout_.has_theta ? K : 0;
    if (layout_.has_omega) {
      domega = grad.data() + at;
      at += K * M;
    }
    if (layout_.has_betas) {
      dlog_ab = grad.data() + at;
    }
  }

  std::vector<double> sl(K), su(K), Bl(K), Bu(K);
  double total = 0.0;
  for (std::size_t r = 0; r < n_; ++r) {
    double mass = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      std::tie(sl[k], su[k]) = pooled(p, r, k);
      Bl[k] = beta_cdf(p.betas[k], sl[k]);
      Bu[k] = beta_cdf(p.betas[k], su[k]);
      mass += p.theta[k] * (Bu[k] - Bl[k]);
    }
    total += std::log(std::max(mass, kLogFloor));
    const double inv = 1.0 / std::max(mass, kGradMassFloor);

    for (std::size_t k = 0; k < K; ++k) {
      if (layout_.has_theta) {
        dtheta_raw[k] += (Bu[k] - Bl[k]) * inv;
      }
      if (layout_.has_omega) {
        // d/dx_i of B(sum) through the softmax row in one step: the pooled
        // value moves by omega_i (F_i - s), which vanishes exactly when all
        // components sit on the same edge value.
        const double cu = p.theta[k] * inv * capped_pdf(p.betas[k], su[k]);
        const double cl = p.theta[k] * inv * capped_pdf(p.betas[k], sl[k]);
        const double* flr = &fl_[r * M];
        const double* fur = &fu_[r * M];
        double* gk = domega + k * M;
        for (std::size_t m = 0; m < M; ++m) {
          const double du = fur[m] - su[k];
          const double dl = flr[m] - sl[k];
          gk[m] += p.omega[k][m] * (cu * du - cl * dl);
        }
      }
      if (layout_.has_betas) {
        const double th_inv = p.theta[k] * inv / (2.0 * kFdStep);
        const BetaParams bk = p.betas[k];
        const BetaParams a_hi{bk.alpha * std::exp(kFdStep), bk.beta};
        const BetaParams a_lo{bk.alpha * std::exp(-kFdStep), bk.beta};
        dlog_ab[2 * k] += th_inv * ((beta_cdf(a_hi, su[k]) - beta_cdf(a_hi, sl[k])) -
                                    (beta_cdf(a_lo, su[k]) - beta_cdf(a_lo, sl[k])));
        const BetaParams b_hi{bk.alpha, bk.beta * std::exp(kFdStep)};
        const BetaParams b_lo{bk.alpha, bk.beta * std::exp(-kFdStep)};
        dlog_ab[2 * k + 1] +=
            th_inv * ((beta_cdf(b_hi, su[k]) - beta_cdf(b_hi, sl[k])) -
                      (beta_cdf(b_lo, su[k]) - beta_cdf(b_lo, sl[k])));
      }
    }
  }

  const double scale = 1.0 / static_cast<double>(n_);
  if (layout_.has_theta) {
    double avg = 0.0;
    for (std::size_t k = 0; k < K; ++k) avg += p.theta[k] * dtheta_raw[k];
    for (std::size_t k = 0; k < K; ++k) {
      grad[k] = p.theta[k] * (dtheta_raw[k] - avg) * scale;
    }
  }
  {
    std::size_t begin = layout_.has_theta ? K : 0;
    for (std::size_t i = begin; i < layout_.dim(); ++i) {
      grad[i] *= scale;
    }
  }
  return total * scale;
}

// Canonical nested start: equal weights, uniform theta, alpha=beta=1.
EnsembleParams lp_point(Method method, std::size_t K, std::size_t M) {
  EnsembleParams p;
  p.method = method;
  p.K = K;
  p.theta.assign(K, 1.0 / static_cast<double>(K));
  p.betas.assign(K, BetaParams{1.0, 1.0});
  p.omega.assign(K, std::vector<double>(M, 1.0 / static_cast<double>(M)));
  return p;
}

// A K=1 fit duplicated across K mixture components.
EnsembleParams duplicate_across(const EnsembleParams& base, Method method,
                                std::size_t K) {
  EnsembleParams p;
  p.method = method;
  p.K = K;
  p.theta.assign(K, 1.0 / static_cast<double>(K));
  p.betas.assign(K, base.betas[0]);
  p.omega.assign(K, base.omega[0]);
  return p;
}

}  // namespace

FitConfig FitConfig::derived(int target, const std::string& test_season) const {
  FitConfig out = *this;
  std::uint64_t h = kFnvOffsetBasis;
  h = fnv1a_field(h, std::to_string(target));
  h = fnv1a_field(h, test_season);
  out.seed = splitmix64(seed ^ h);
  return out;
}

double binned_loglik(const EnsembleParams& params,
                     std::span<const BinnedDistribution> components,
                     std::size_t obs_bin) {
  detail::check_components(components);
  EnsembleParams checked = params;
  checked.validate();
  if (obs_bin >= components[0].bin_count()) {
    throw StructureError("observation bin outside component grid");
  }
  std::vector<std::vector<double>> edge_cums;
  edge_cums.reserve(components.size());
  for (const auto& c : components) {
    edge_cums.push_back(cumulative_at_edges(c));
  }
  const double mass = detail::transformed_cdf(checked, edge_cums, obs_bin + 1) -
                      detail::transformed_cdf(checked, edge_cums, obs_bin);
  if (mass <= 0.0) {
    return -std::numeric_limits<double>::infinity();
  }
  return std::log(mass);
}

Fitter::Fitter(const TrainingSet& training, FitConfig config)
    : training_(training), config_(config) {
  if (training.empty()) {
    throw EmptyDatasetError("cannot fit on an empty training set");
  }
  if (training.model_count == 0) {
    throw EmptyDatasetError("training set has no component models");
  }
}

const FitResult& Fitter::fit(Method method, std::size_t K) {
  if (!is_mixture(method)) {
    if (K != 1) {
      throw DomainError("method " + method_name(method) + " requires K=1");
    }
  } else if (K == 0) {
    throw DomainError("mixture methods require K >= 1");
  }
  const auto key = std::make_pair(method, K);
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    it = cache_.emplace(key, run(method, K)).first;
  }
  return it->second;
}

FitResult Fitter::run(Method method, std::size_t K) {
  const std::size_t M = training_.model_count;
  const Layout layout = Layout::make(method, K, M);
  const FlooredObjective objective(training_, config_.component_floor, layout);

  FitResult result;
  if (layout.dim() == 0) {
    // EW-LP, or LP with a single model: nothing to optimize.
    result.params = lp_point(method, K, M);
    result.params.validate();
    result.converged = true;
    result.restarts_used = 0;
    result.objective_trace = {objective.value({})};
  } else {
    std::vector<std::vector<double>> starts;
    starts.push_back(pack_layout(layout, lp_point(method, K, M)));

    std::mt19937_64 rng(splitmix64(
        config_.seed ^ fnv1a(method_name(method, K))));

    // Nested optima as warm starts; ascent from them is what guarantees the
    // likelihood-dominance chain across methods.
    if (method == Method::BLP) {
      const FitResult& lp = fit(Method::LP, 1);
      EnsembleParams s = lp.params;
      s.method = Method::BLP;
      starts.push_back(pack_layout(layout, s));
      const FitResult& ewblp = fit(Method::EW_BLP, 1);
      EnsembleParams e = lp_point(Method::BLP, 1, M);
      e.betas = ewblp.params.betas;
      starts.push_back(pack_layout(layout, e));
    } else if (is_mixture(method)) {
      const Method base = method == Method::BMC ? Method::BLP : Method::EW_BLP;
      const FitResult& blp = fit(base, 1);
      const EnsembleParams dup = duplicate_across(blp.params, method, K);
      starts.push_back(pack_layout(layout, dup));
      if (K > 1) {
        // Jittered copy breaks the lockstep symmetry between identical
        // components so the extra capacity can actually be explored.
        std::normal_distribution<double> jitter(0.0, config_.warm_jitter);
        std::vector<double> x = starts.back();
        for (double& xi : x) xi += jitter(rng);
        starts.push_back(std::move(x));
        if (method == Method::BMC) {
          const FitResult& ew = fit(Method::EW_BMC, K);
          EnsembleParams s = ew.params;  // equal rows are a valid BMC start
          s.method = Method::BMC;
          starts.push_back(pack_layout(layout, s));
        }
      }
    }

    const std::size_t total_starts =
        std::max<std::size_t>(static_cast<std::size_t>(config_.restarts),
                              starts.size() + 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    while (starts.size() < total_starts) {
      EnsembleParams p;
      p.method = method;
      p.K = K;
      p.theta.resize(K);
      p.omega.assign(K, std::vector<double>(M));
      p.betas.resize(K);
      auto dirichlet1 = [&](std::vector<double>& v) {
        double total = 0.0;
        for (double& vi : v) {
          vi = -std::log(1.0 - unif(rng));
          total += vi;
        }
        for (double& vi : v) vi /= total;
      };
      dirichlet1(p.theta);
      for (auto& row : p.omega) dirichlet1(row);
      const double lo = std::log(0.5);
      const double hi = std::log(2.0);
      for (auto& bp : p.betas) {
        bp.alpha = std::exp(lo + (hi - lo) * unif(rng));
        bp.beta = std::exp(lo + (hi - lo) * unif(rng));
      }
      starts.push_back(pack_layout(layout, p));
    }

    LbfgsOptions opts;
    opts.max_iterations = config_.max_iterations;
    opts.rel_tol = config_.rel_tol;
    std::size_t best = 0;
    std::vector<LbfgsResult> runs;
    runs.reserve(starts.size());
    for (std::size_t i = 0; i < starts.size(); ++i) {
      runs.push_back(lbfgs_maximize(
          [&objective](const std::vector<double>& x, std::vector<double>* g) {
            return objective(x, g);
          },
          starts[i], opts));
      if (runs[i].value > runs[best].value) best = i;
    }

    result.params = unpack_layout(layout, runs[best].x);
    result.params.validate();
    result.converged = runs[best].converged;
    result.restarts_used = static_cast<int>(starts.size());
    result.objective_trace = std::move(runs[best].trace);
  }

  // Independent recomputation of the training score: materialize each
  // ensemble on its grid (no floor) and take the observed bin's log mass.
  double total = 0.0;
  for (const TrainingRecord* rec : training_.records) {
    const BinnedDistribution ens = combine_bmc(rec->components, result.params);
    total += std::log(ens.probs()[rec->obs.bin_index]);
  }
  result.train_mean_logscore =
      total / static_cast<double>(training_.records.size());
  return result;
}

FitResult fit(Method method, std::size_t K, const TrainingSet& training,
              const FitConfig& config) {
  Fitter fitter(training, config);
  return fitter.fit(method, K);
}

TargetFits fit_all_targets(Method method, std::size_t K, const Dataset& data,
                           const std::string& test_season,
                           std::span<const int> targets,
                           const FitConfig& config) {
  TargetFits out;
  for (int target : targets) {
    const TrainingSet ts = data.training_for(target, test_season);
    if (ts.empty()) {
      out.failures[target] = "no training records before " + test_season;
      continue;
    }
    try {
      Fitter fitter(ts, config.derived(target, test_season));
      out.fits.emplace(target, fitter.fit(method, K));
    } catch (const Error& e) {
      out.failures[target] = e.what();
    }
  }
  return out;
}

std::vector<double> pack_params(const EnsembleParams& params) {
  const Layout layout =
      Layout::make(params.method, params.K, params.model_count());
  return pack_layout(layout, params);
}

EnsembleParams unpack_params(Method method, std::size_t K, std::size_t M,
                             std::span<const double> x) {
  const Layout layout = Layout::make(method, K, M);
  if (x.size() != layout.dim()) {
    throw DomainError("unconstrained vector has " + std::to_string(x.size()) +
                      " entries, layout needs " + std::to_string(layout.dim()));
  }
  EnsembleParams p = unpack_layout(layout, x);
  p.validate();
  return p;
}

}  // namespace betapool
