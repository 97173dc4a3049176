#include "gpcpd/als.hpp"

#include "gpcpd/errors.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace gpcpd {

void AlsOptions::validate() const {
  if (max_sweeps < 1 || !(rel_change_tol > 0.0) || !(init_scale > 0.0) || time_limit < 0.0)
    throw StructuralError("AlsOptions: invalid value");
}

namespace {

struct RankDeficient {};

// Least-squares update of one factor given the other two.
Mat update(const Mat& a, const Mat& b, const Mat& flat) {
  const Mat kr = khatri_rao(a, b);
  // Normal equations in Hadamard form: (a^H a .* b^H b) X^T = kr^H flat^T.
  const Mat gram = ((a.adjoint() * a).array() * (b.adjoint() * b).array()).matrix();
  const Eigen::VectorXd sv = singular_values(gram);
  if (!(sv(sv.size() - 1) > 1e-13 * sv(0)))
    throw RankDeficient{};
  const Mat rhs = kr.adjoint() * flat.transpose();
  return gram.ldlt().solve(rhs).transpose();
}

} // namespace

AlsResult als_decompose(const Tensor3& f, Index r, const AlsOptions& opts) {
  opts.validate();
  if (r < 1)
    throw UnsupportedRankError("als_decompose: rank must be at least 1");
  const double fnorm = f.frobenius_norm();
  if (fnorm == 0.0)
    throw DegenerateInputError("als_decompose: tensor is zero");
  const auto t0 = std::chrono::steady_clock::now();
  const bool real = f.is_real();
  const Mat F1 = mode_k_flatten(f, 1), F2 = mode_k_flatten(f, 2), F3 = mode_k_flatten(f, 3);

  Rng rng(opts.seed);
  AlsResult out;
  for (int restart = 0; restart <= 3; ++restart) {
    auto init = [&](Index n) {
      return Mat(opts.init_scale * (real ? Mat(rng.real_gaussian(n, r)) : rng.complex_gaussian(n, r)));
    };
    FactorTriple u{init(f.dim(0)), init(f.dim(1)), init(f.dim(2))};
    std::vector<double> trace;
    try {
      double prev = std::numeric_limits<double>::infinity();
      for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        u.U1 = update(u.U2, u.U3, F1);
        u.U2 = update(u.U1, u.U3, F2);
        u.U3 = update(u.U1, u.U2, F3);
        const double err = (F1 - u.U1 * khatri_rao(u.U2, u.U3).transpose()).norm() / fnorm;
        trace.push_back(err);
        if (!std::isfinite(err))
          throw RankDeficient{};
        if ((std::isfinite(prev) && std::abs(prev - err) <= opts.rel_change_tol * prev) || err < 1e-15)
          break;
        prev = err;
        if (opts.time_limit > 0.0 &&
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() > opts.time_limit)
          break;
      }
    } catch (const RankDeficient&) {
      out.restarts = restart + 1;
      continue;
    }
    out.factors = std::move(u);
    out.err_trace = std::move(trace);
    out.restarts = restart;
    return out;
  }
  throw DegenerateInputError("als_decompose: Khatri-Rao product stayed rank deficient after restarts");
}

} // namespace gpcpd
