// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <functional>
#include <vector>

namespace betapool {

/// Objective for maximization. Returns the value at x; when `grad` is
/// non-null, also fills it (same length as x). Line-search trials pass null,
/// so gradient work is only spent on accepted points. Must be deterministic.
using ObjectiveFn =
    std::function<double(const std::vector<double>& x, std::vector<double>* grad)>;

struct LbfgsOptions {
  int max_iterations = 500;
  double rel_tol = 1e-8;       // stop when |f' - f| <= rel_tol * (|f| + 1)
  double grad_tol = 1e-9;      // stop when max |g_i| <= grad_tol
  int history = 8;             // L-BFGS memory
  double armijo_c1 = 1e-4;
  double backtrack_factor = 0.5;
  int max_backtracks = 50;
};

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> trace;  // objective at x0 and after each accepted step
};

// Limited-memory BFGS ascent with Armijo backtracking. The line search only
// accepts improving steps, so `trace` is nondecreasing. Non-finite trial
// values are treated as rejected steps; if no improving step exists the
// current point is returned.
LbfgsResult lbfgs_maximize(const ObjectiveFn& fn, std::vector<double> x0,
                           const LbfgsOptions& opts = {});

}  // namespace betapool
