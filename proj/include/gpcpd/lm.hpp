#pragma once

#include "gpcpd/tensor.hpp"

#include <cstdint>
#include <functional>

namespace gpcpd {

struct LMOptions {
  int max_iters = 200;
  /// Initial damping, relative to the largest diagonal entry of J^H J.
  double damping_init = 1e-3;
  double damping_up = 10.0;
  double damping_down = 0.1;
  /// Stop when |dx| <= step_tol * (|x| + step_tol).
  double step_tol = 1e-12;
  /// Stop when |r| <= residual_tol * residual_scale.
  double residual_tol = 1e-13;
  double residual_scale = 1.0;
  /// Stop when |r|^2 fell by less than a factor (1 - stall_tol) over the last
  /// stall_window iterations (0 disables).
  int stall_window = 10;
  double stall_tol = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class LMStop { ResidualZero, SmallStep, MaxIters, Stalled };

struct LMOutcome {
  Vec x_final;
  double residual_norm = 0.0;
  int iterations = 0;
  LMStop converged_reason = LMStop::MaxIters;
};

/// Holomorphic residual system: r(x) in C^m and its complex Jacobian dr/dx.
/// Callbacks may throw DomainGuardViolation for points outside their domain.
struct ResidualSystem {
  std::function<Vec(const Vec&)> residual;
  std::function<Mat(const Vec&)> jacobian;
};

/// Levenberg-Marquardt on (J^H J + lambda I) dx = -J^H r. Trial points that
/// violate a domain guard count as rejected steps; a violation at x0
/// propagates to the caller.
LMOutcome lm_minimize(const ResidualSystem& sys, const Vec& x0, const LMOptions& opts = {});

/// Compares the analytic Jacobian with central differences along the real and
/// imaginary direction of every coordinate (step h * (1 + |x_i|)). Returns the
/// largest entrywise discrepancy divided by the largest Jacobian entry.
double finite_difference_check(const ResidualSystem& sys, const Vec& x, double h = 1e-6);

} // namespace gpcpd
