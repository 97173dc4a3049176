#include "gpcpd/lm.hpp"

#include "gpcpd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace gpcpd {

void LMOptions::validate() const {
  if (max_iters <= 0 || !(damping_init > 0.0) || !(step_tol > 0.0) || !(residual_tol > 0.0) ||
      !(residual_scale > 0.0))
    throw StructuralError("LMOptions: values must be positive");
  if (stall_window < 0 || !(stall_tol > 0.0) || !(stall_tol < 1.0))
    throw StructuralError("LMOptions: need stall_window >= 0 and 0 < stall_tol < 1");
  if (!(damping_up > 1.0) || !(damping_down > 0.0) || !(damping_down < 1.0))
    throw StructuralError("LMOptions: need damping_up > 1 > damping_down > 0");
}

namespace {

bool finite(const Vec& v) { return v.allFinite(); }
bool finite(const Mat& m) { return m.allFinite(); }

std::optional<Vec> try_residual(const ResidualSystem& sys, const Vec& x) {
  try {
    Vec r = sys.residual(x);
    if (!finite(r))
      return std::nullopt;
    return r;
  } catch (const DomainGuardViolation&) {
    return std::nullopt;
  }
}

} // namespace

LMOutcome lm_minimize(const ResidualSystem& sys, const Vec& x0, const LMOptions& opts) {
  opts.validate();
  LMOutcome out;
  Vec x = x0;
  Vec r = sys.residual(x);
  if (!finite(r))
    throw NonFiniteError("lm_minimize: residual is not finite at the initial point");
  double cost = r.squaredNorm();
  const double target = opts.residual_tol * opts.residual_scale;

  auto finish = [&](LMStop why, int iters) {
    out.x_final = x;
    out.residual_norm = std::sqrt(cost);
    out.iterations = iters;
    out.converged_reason = why;
    return out;
  };

  if (std::sqrt(cost) <= target || x.size() == 0)
    return finish(LMStop::ResidualZero, 0);

  double lambda = -1.0;
  std::vector<double> history{cost};
  for (int it = 1; it <= opts.max_iters; ++it) {
    const Mat J = sys.jacobian(x);
    if (!finite(J))
      throw NonFiniteError("lm_minimize: Jacobian is not finite");
    const Mat JhJ = J.adjoint() * J;
    const Vec g = J.adjoint() * r;
    if (lambda < 0.0)
      lambda = opts.damping_init * std::max(JhJ.diagonal().real().maxCoeff(), 1e-300);

    // Inner loop: raise damping until a step lowers the objective.
    bool accepted = false;
    while (!accepted) {
      Mat A = JhJ;
      A.diagonal().array() += lambda;
      const Vec dx = -A.ldlt().solve(g);
      if (!finite(dx))
        throw NonFiniteError("lm_minimize: step is not finite");
      if (dx.norm() <= opts.step_tol * (x.norm() + opts.step_tol))
        return finish(LMStop::SmallStep, it);
      const Vec xt = x + dx;
      if (auto rt = try_residual(sys, xt); rt && rt->squaredNorm() < cost) {
        x = xt;
        r = std::move(*rt);
        cost = r.squaredNorm();
        lambda = std::max(lambda * opts.damping_down, 1e-300);
        accepted = true;
      } else {
        lambda *= opts.damping_up;
        if (!std::isfinite(lambda) || lambda > 1e300)
          return finish(LMStop::SmallStep, it);
      }
    }
    if (std::sqrt(cost) <= target)
      return finish(LMStop::ResidualZero, it);
    history.push_back(cost);
    const auto w = static_cast<std::size_t>(opts.stall_window);
    if (w > 0 && history.size() > w && cost > (1.0 - opts.stall_tol) * history[history.size() - 1 - w])
      return finish(LMStop::Stalled, it);
  }
  return finish(LMStop::MaxIters, opts.max_iters);
}

double finite_difference_check(const ResidualSystem& sys, const Vec& x, double h) {
  const Mat J = sys.jacobian(x);
  double worst = 0.0;
  const double scale = std::max(J.size() > 0 ? J.cwiseAbs().maxCoeff() : 0.0, 1e-300);
  for (Index i = 0; i < x.size(); ++i) {
    const double step = h * (1.0 + std::abs(x(i)));
    for (const cplx dir : {cplx(1.0, 0.0), cplx(0.0, 1.0)}) {
      Vec xp = x, xm = x;
      xp(i) += step * dir;
      xm(i) -= step * dir;
      const Vec fd = (sys.residual(xp) - sys.residual(xm)) / (2.0 * step * dir);
      worst = std::max(worst, (fd - J.col(i)).cwiseAbs().maxCoeff() / scale);
    }
  }
  return worst;
}

} // namespace gpcpd
