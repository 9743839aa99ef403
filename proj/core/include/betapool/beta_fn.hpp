// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include "betapool/errors.hpp"

namespace betapool {

/// Parameters of a beta distribution; both must be strictly positive.
struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;

  // Throws DomainError on nonpositive or non-finite parameters.
  void check() const;

  bool operator==(const BetaParams&) const = default;
};

// ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a+b)
double log_beta(double a, double b);

// Regularized incomplete beta I_x(alpha, beta), i.e. the beta CDF.
//
// Continued-fraction evaluation (modified Lentz) with the usual symmetry
// switch at x > (alpha+1)/(alpha+beta+2) so the fraction converges fast on
// both flanks. Absolute accuracy ~1e-14 for the parameter ranges exercised
// here; the binned likelihood differences nearby CDF values, so tail accuracy
// matters more than speed.
//
// x is accepted in [0, 1] with a 1e-12 slack for accumulated rounding in the
// callers' weighted sums; anything further outside is a DomainError.
double beta_cdf(const BetaParams& p, double x);

// Beta density at x in [0, 1]. Endpoints return the pointwise limit, which is
// +infinity when the corresponding shape parameter is below 1.
double beta_pdf(const BetaParams& p, double x);

}  // namespace betapool
