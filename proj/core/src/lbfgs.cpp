// Apache License, Version 2.0, refer to LICENSE.txt
#include "betapool/lbfgs.hpp"

#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>

namespace betapool {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

struct Correction {
  std::vector<double> s;  // x_{k+1} - x_k
  std::vector<double> y;  // g_{k+1} - g_k
  double rho;             // 1 / (y . s)
};

// Two-loop recursion; returns an ascent direction H * g.
std::vector<double> apply_inverse_hessian(const std::deque<Correction>& hist,
                                          const std::vector<double>& grad) {
  std::vector<double> q = grad;
  std::vector<double> alpha(hist.size());
  for (std::size_t i = hist.size(); i-- > 0;) {
    alpha[i] = hist[i].rho * dot(hist[i].s, q);
    for (std::size_t j = 0; j < q.size(); ++j) {
      q[j] -= alpha[i] * hist[i].y[j];
    }
  }
  if (!hist.empty()) {
    const auto& last = hist.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& qj : q) qj *= gamma;
  }
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const double beta = hist[i].rho * dot(hist[i].y, q);
    for (std::size_t j = 0; j < q.size(); ++j) {
      q[j] += (alpha[i] - beta) * hist[i].s[j];
    }
  }
  return q;
}

}  // namespace

LbfgsResult lbfgs_maximize(const ObjectiveFn& fn, std::vector<double> x0,
                           const LbfgsOptions& opts) {
  LbfgsResult res;
  res.x = std::move(x0);
  const std::size_t n = res.x.size();

  std::vector<double> grad(n, 0.0);
  double f = fn(res.x, &grad);
  res.value = f;
  res.trace.push_back(f);
  if (n == 0 || !std::isfinite(f)) {
    res.converged = n == 0;
    return res;
  }

  std::deque<Correction> history;
  std::vector<double> direction(n);
  std::vector<double> x_new(n);
  std::vector<double> grad_new(n);

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    if (max_abs(grad) <= opts.grad_tol) {
      res.converged = true;
      break;
    }

    direction = apply_inverse_hessian(history, grad);
    double slope = dot(direction, grad);
    if (!(slope > 0.0) || !all_finite(direction)) {
      // Stale curvature; retry with plain steepest ascent.
      history.clear();
      direction = grad;
      slope = dot(grad, grad);
    }

    // First iteration: scale so the initial trial step has unit max norm.
    double step = 1.0;
    if (history.empty()) {
      const double dmax = max_abs(direction);
      if (dmax > 1.0) step = 1.0 / dmax;
    }

    bool accepted = false;
    double f_new = f;
    for (int bt = 0; bt < opts.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < n; ++i) {
        x_new[i] = res.x[i] + step * direction[i];
      }
      f_new = fn(x_new, nullptr);
      if (std::isfinite(f_new) &&
          f_new >= f + opts.armijo_c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= opts.backtrack_factor;
    }
    if (!accepted) {
      // No improving step along the ascent direction: declare convergence at
      // line-search resolution.
      res.converged = true;
      break;
    }
    f_new = fn(x_new, &grad_new);

    Correction corr;
    corr.s.resize(n);
    corr.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      corr.s[i] = x_new[i] - res.x[i];
      corr.y[i] = grad_new[i] - grad[i];
    }
    const double ys = dot(corr.y, corr.s);
    // Maximizing: curvature pairs are kept when y.s < 0 (concave locally);
    // store with flipped sign so the two-loop recursion sees a descent-style
    // positive-definite update.
    if (ys < -1e-12 * dot(corr.s, corr.s) && all_finite(corr.y)) {
      for (double& yi : corr.y) yi = -yi;
      corr.rho = 1.0 / dot(corr.y, corr.s);
      history.push_back(std::move(corr));
      if (static_cast<int>(history.size()) > opts.history) {
        history.pop_front();
      }
    }

    const double improvement = f_new - f;
    res.x = x_new;
    grad = grad_new;
    f = f_new;
    res.value = f;
    res.trace.push_back(f);
    res.iterations = iter + 1;

    if (improvement <= opts.rel_tol * (std::fabs(f) + 1.0)) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace betapool
