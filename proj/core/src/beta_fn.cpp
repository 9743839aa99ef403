// Apache License, Version 2.0, refer to LICENSE.txt
#include "betapool/beta_fn.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace betapool {

namespace {

constexpr double kXSlack = 1e-12;
constexpr int kMaxIterations = 500;

// Continued fraction for I_x(a,b), modified Lentz's method. Factored out of
// beta_cdf so the symmetry switch can call it with swapped arguments.
double beta_cont_frac(double a, double b, double x) {
  const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
  const double eps = std::numeric_limits<double>::epsilon();

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;

  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;

  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    // even step
    double coeff = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + coeff * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + coeff / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    // odd step
    coeff = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + coeff * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + coeff / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 2.0 * eps) {
      return h;
    }
  }
  // Convergence failures would need a,b far beyond anything the estimators
  // reach; return the partial value rather than aborting a long fit.
  return h;
}

}  // namespace

void BetaParams::check() const {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw DomainError("beta parameters must be positive and finite, got alpha=" +
                      std::to_string(alpha) + " beta=" + std::to_string(beta));
  }
}

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double beta_cdf(const BetaParams& p, double x) {
  p.check();
  if (x < 0.0) {
    if (x < -kXSlack) {
      throw DomainError("beta_cdf argument " + std::to_string(x) + " below 0");
    }
    x = 0.0;
  } else if (x > 1.0) {
    if (x > 1.0 + kXSlack) {
      throw DomainError("beta_cdf argument " + std::to_string(x) + " above 1");
    }
    x = 1.0;
  }
  const double a = p.alpha;
  const double b = p.beta;
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  if (a == 1.0 && b == 1.0) return x;  // uniform fast path keeps LP exact

  const double log_front =
      a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cont_frac(a, b, x) / a;
  }
  return 1.0 - front * beta_cont_frac(b, a, 1.0 - x) / b;
}

double beta_pdf(const BetaParams& p, double x) {
  p.check();
  if (x < 0.0 || x > 1.0) {
    throw DomainError("beta_pdf argument " + std::to_string(x) + " outside [0,1]");
  }
  const double a = p.alpha;
  const double b = p.beta;
  if (x == 0.0) {
    if (a < 1.0) return std::numeric_limits<double>::infinity();
    if (a == 1.0) return std::exp(-log_beta(a, b));
    return 0.0;
  }
  if (x == 1.0) {
    if (b < 1.0) return std::numeric_limits<double>::infinity();
    if (b == 1.0) return std::exp(-log_beta(a, b));
    return 0.0;
  }
  return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) -
                  log_beta(a, b));
}

}  // namespace betapool
