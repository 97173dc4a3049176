#include "gpcpd/stage2.hpp"

#include "gpcpd/errors.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <string>

namespace gpcpd {

Mat PkSet::generating_matrix(const ReducedTensor& rt, Index k) const {
  const Index r = rt.T.dim(0), n2 = rt.n2();
  Mat M(r, r);
  M.leftCols(n2) = rt.slice(k);
  M.rightCols(r - n2) = P[static_cast<std::size_t>(k - 1)];
  return M;
}

double max_commutator_rel(const PkSet& pk, const ReducedTensor& rt) {
  double worst = 0.0;
  const Index n3 = rt.n3();
  std::vector<Mat> M;
  for (Index k = 1; k < n3; ++k)
    M.push_back(pk.generating_matrix(rt, k));
  for (std::size_t i = 0; i < M.size(); ++i)
    for (std::size_t j = i + 1; j < M.size(); ++j) {
      const double denom = M[i].norm() * M[j].norm();
      const double c = (M[i] * M[j] - M[j] * M[i]).norm();
      worst = std::max(worst, denom > 0.0 ? c / denom : c);
    }
  return worst;
}

LinearBlock build_commuting_linear_system(const ReducedTensor& rt) {
  if (rt.low_rank)
    throw StructuralError("build_commuting_linear_system: requires a middle-rank reduced tensor");
  const Index r = rt.T.dim(0), n2 = rt.n2(), n3 = rt.n3();
  const Index m = r - n2;
  const Index nslices = n3 - 1; // unknown blocks P_2..P_n3
  const Index npairs = nslices * (nslices - 1) / 2;
  const Index block = r * m;
  LinearBlock out;
  out.A = Mat::Zero(npairs * r * n2, nslices * block);
  out.b = Vec::Zero(npairs * r * n2);

  const Mat I_r = Mat::Identity(r, r);
  Index row = 0;
  for (Index i = 1; i < n3; ++i) {
    for (Index j = i + 1; j < n3; ++j) {
      const Mat Ti = rt.slice(i), Tj = rt.slice(j);
      // vec(P_i Bot_j) = kron(Bot_j^T, I_r) vec(P_i)
      const Mat botI = Ti.bottomRows(m), botJ = Tj.bottomRows(m);
      out.A.block(row, (i - 1) * block, r * n2, block) = kronecker(botJ.transpose(), I_r);
      out.A.block(row, (j - 1) * block, r * n2, block) = -kronecker(botI.transpose(), I_r);
      out.b.segment(row, r * n2) = vec(Tj * Ti.topRows(n2) - Ti * Tj.topRows(n2));
      row += r * n2;
    }
  }
  return out;
}

LinearBlock build_partial_eig_system(const ReducedTensor& rt, const EigRowSet& found) {
  const Index r = rt.T.dim(0), n2 = rt.n2(), n3 = rt.n3();
  const Index m = r - n2;
  const Index p = found.size();
  const Index block = r * m;
  LinearBlock out;
  out.A = Mat::Zero((n3 - 1) * m * p, (n3 - 1) * block);
  out.b = Vec::Zero((n3 - 1) * m * p);
  if (p == 0)
    return out;
  const Mat Sp = found.stacked();
  const Mat lambdas = found.lambda_matrix();
  const Mat kronS = kronecker(Mat::Identity(m, m), Sp);
  for (Index k = 1; k < n3; ++k) {
    const Index row = (k - 1) * m * p;
    out.A.block(row, (k - 1) * block, m * p, block) = kronS;
    const Mat rhs = lambdas.col(k - 1).asDiagonal() * Sp.rightCols(m);
    out.b.segment(row, m * p) = vec(rhs);
  }
  return out;
}

PkSet Stage2System::pk_at(const Vec& x) const {
  PkSet pk;
  const Index m = r - n2;
  for (Index k = 2; k <= n3; ++k) {
    Vec v = vec(P0[static_cast<std::size_t>(k - 2)]);
    if (d() > 0)
      v += N_k(k) * x;
    pk.P.push_back(unvec(v, r, m));
  }
  return pk;
}

Stage2System assemble_stage2(const ReducedTensor& rt, const EigRowSet& found, const Tolerances& tol) {
  const LinearBlock lin = build_commuting_linear_system(rt);
  const LinearBlock eig = build_partial_eig_system(rt, found);

  Stage2System sys;
  sys.r = rt.T.dim(0);
  sys.n2 = rt.n2();
  sys.n3 = rt.n3();
  sys.p = found.size();
  const Index m = sys.r - sys.n2;
  sys.d1 = sys.r * sys.n2 * (sys.n3 - 1) * (sys.n3 - 2) / 2;
  sys.d2 = sys.r * m * (sys.n3 - 1);
  sys.eig_rows = m * (sys.n3 - 1) * sys.p;
  if (lin.A.rows() != sys.d1 || eig.A.rows() != sys.eig_rows || lin.A.cols() != sys.d2 || eig.A.cols() != sys.d2)
    throw StructuralError("assemble_stage2: block dimensions disagree with d1/d2");

  sys.A_hat.resize(sys.d1 + sys.eig_rows, sys.d2);
  sys.A_hat << lin.A, eig.A;
  sys.b_hat.resize(sys.d1 + sys.eig_rows);
  sys.b_hat << lin.b, eig.b;

  // Eigenrow constraints first, one slice at a time: P_k = X_k + W Y_k with
  // W an orthonormal basis of null(S^p). The commuting rows then become
  //   W (Y_i Bot_j - Y_j Bot_i) = R_ij,
  // a much smaller system in the Y_k.
  const Index r = sys.r, nk = sys.n3 - 1;
  const Mat Sp = found.stacked();
  const Mat W = sys.p == 0 ? Mat(Mat::Identity(r, r)) : null_space_basis(Sp, tol);
  const Index q = W.cols();
  std::vector<Mat> X(static_cast<std::size_t>(nk), Mat::Zero(r, m));
  if (sys.p > 0) {
    const Mat lambdas = found.lambda_matrix();
    const Eigen::CompleteOrthogonalDecomposition<Mat> cod(Sp);
    for (Index k = 0; k < nk; ++k)
      X[static_cast<std::size_t>(k)] = cod.solve(Mat(lambdas.col(k).asDiagonal() * Sp.rightCols(m)));
  }

  const Index npairs = nk * (nk - 1) / 2;
  const Index yblock = q * m;
  Mat B = Mat::Zero(npairs * r * sys.n2, nk * yblock);
  Vec c = Vec::Zero(npairs * r * sys.n2);
  Index row = 0;
  for (Index i = 0; i < nk; ++i)
    for (Index j = i + 1; j < nk; ++j) {
      const Mat Ti = rt.slice(i + 1), Tj = rt.slice(j + 1);
      const Mat botI = Ti.bottomRows(m), botJ = Tj.bottomRows(m);
      const Index h = r * sys.n2;
      B.block(row, i * yblock, h, yblock) = kronecker(botJ.transpose(), W);
      B.block(row, j * yblock, h, yblock) = -kronecker(botI.transpose(), W);
      const Mat R = Tj * Ti.topRows(sys.n2) - Ti * Tj.topRows(sys.n2) - X[static_cast<std::size_t>(i)] * botJ +
                    X[static_cast<std::size_t>(j)] * botI;
      c.segment(row, h) = vec(R);
      row += h;
    }

  Vec y0 = Vec::Zero(nk * yblock);
  Mat Ny = Mat::Identity(nk * yblock, nk * yblock);
  if (B.rows() > 0 && B.cols() > 0) {
    Eigen::BDCSVD<Mat> svd(B, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    Index rank = 0;
    for (Index t = 0; t < sv.size(); ++t)
      if (sv(t) > tol.rank_rel_tol * smax)
        ++rank;
    const Vec ub = svd.matrixU().leftCols(rank).adjoint() * c;
    y0 = svd.matrixV().leftCols(rank) * ub.cwiseQuotient(sv.head(rank).cast<cplx>());
    Ny = svd.matrixV().rightCols(nk * yblock - rank);
  }

  // Lift back: vec(W Y) = kron(I_m, W) vec(Y), an isometry, so N stays orthonormal.
  const Mat lift = kronecker(Mat::Identity(m, m), W);
  Vec z0(sys.d2);
  sys.N.resize(sys.d2, Ny.cols());
  for (Index k = 0; k < nk; ++k) {
    z0.segment(k * r * m, r * m) = vec(X[static_cast<std::size_t>(k)]) + lift * y0.segment(k * yblock, yblock);
    sys.N.middleRows(k * r * m, r * m) = lift * Ny.middleRows(k * yblock, yblock);
  }
  const double nb = sys.b_hat.norm();
  const double res = (sys.A_hat * z0 - sys.b_hat).norm();
  sys.lls_residual = nb > 0.0 ? res / nb : res;
  if (!(sys.lls_residual <= tol.residual_zero_tol))
    throw InconsistentRowsError("assemble_stage2: combined linear system is inconsistent (relative residual " +
                                std::to_string(sys.lls_residual) + ")");
  for (Index k = 0; k < sys.n3 - 1; ++k)
    sys.P0.push_back(unvec(z0.segment(k * sys.r * m, sys.r * m), sys.r, m));
  return sys;
}

namespace {

struct G2Cache {
  std::vector<Mat> T; // slices 2..n3
  explicit G2Cache(const ReducedTensor& rt) {
    for (Index k = 1; k < rt.n3(); ++k)
      T.push_back(rt.slice(k));
  }
};

std::vector<Mat> generating_matrices(const G2Cache& c, const PkSet& pk) {
  std::vector<Mat> M;
  for (std::size_t k = 0; k < c.T.size(); ++k) {
    Mat m(c.T[k].rows(), c.T[k].rows());
    m << c.T[k], pk.P[k];
    M.push_back(std::move(m));
  }
  return M;
}

Vec g_cached(const Vec& x, const Stage2System& sys, const G2Cache& c) {
  const PkSet pk = sys.pk_at(x);
  const auto M = generating_matrices(c, pk);
  const Index nk = static_cast<Index>(M.size());
  const Index blk = sys.block_size();
  Vec g(nk * (nk - 1) / 2 * blk);
  Index row = 0;
  for (Index i = 0; i < nk; ++i)
    for (Index j = i + 1; j < nk; ++j) {
      const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
      g.segment(row, blk) = vec(M[ui] * pk.P[uj] - M[uj] * pk.P[ui]);
      row += blk;
    }
  return g;
}

// out += sign * (-kron(I_m, M) + kron(B^T, I_r)) * Nk.
// Column-major storage lets an (r*m) x d block be viewed as r x (m*d), with
// column t*m + c holding rows c*r..c*r+r-1 of column t.
void add_partial(Eigen::Ref<Mat> out, const Mat& M, const Mat& B, const Mat& Nk, Index r, Index m, double sign) {
  const Index d = Nk.cols();
  Mat acc = -(M * Eigen::Map<const Mat>(Nk.data(), r, m * d));
  for (Index t = 0; t < d; ++t)
    acc.middleCols(t * m, m).noalias() += Eigen::Map<const Mat>(Nk.data() + t * r * m, r, m) * B;
  for (Index t = 0; t < d; ++t)
    out.col(t) += sign * Eigen::Map<const Vec>(acc.data() + t * r * m, r * m);
}

Mat jac_g_cached(const Vec& x, const Stage2System& sys, const G2Cache& c) {
  const PkSet pk = sys.pk_at(x);
  const auto M = generating_matrices(c, pk);
  const Index nk = static_cast<Index>(M.size());
  const Index blk = sys.block_size();
  const Index r = sys.r, m = sys.r - sys.n2;
  Mat J = Mat::Zero(nk * (nk - 1) / 2 * blk, sys.d());
  if (sys.d() == 0)
    return J;
  std::vector<Mat> Nk;
  for (Index k = 0; k < nk; ++k)
    Nk.push_back(sys.N_k(k + 2));
  Index row = 0;
  for (Index i = 0; i < nk; ++i)
    for (Index j = i + 1; j < nk; ++j) {
      const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
      auto block = J.middleRows(row, blk);
      // d/dP_i: -kron(I, M_j) + kron((P_j^2)^T, I_r)
      add_partial(block, M[uj], pk.P[uj].bottomRows(m), Nk[ui], r, m, 1.0);
      // d/dP_j: kron(I, M_i) - kron((P_i^2)^T, I_r)
      add_partial(block, M[ui], pk.P[ui].bottomRows(m), Nk[uj], r, m, -1.0);
      row += blk;
    }
  return J;
}

} // namespace

Vec eval_g(const Vec& x, const Stage2System& sys, const ReducedTensor& rt) {
  return g_cached(x, sys, G2Cache(rt));
}

Mat jac_g(const Vec& x, const Stage2System& sys, const ReducedTensor& rt) {
  return jac_g_cached(x, sys, G2Cache(rt));
}

ResidualSystem g_system(const Stage2System& sys, const ReducedTensor& rt) {
  auto cache = std::make_shared<const G2Cache>(rt);
  auto s = std::make_shared<const Stage2System>(sys);
  return {[cache, s](const Vec& x) { return g_cached(x, *s, *cache); },
          [cache, s](const Vec& x) { return jac_g_cached(x, *s, *cache); }};
}

Stage2Solution run_stage2(const ReducedTensor& rt, const EigRowSet& found, const Stage2Options& opts) {
  // Drop eigenrows last-in-first-out while the combined system is inconsistent.
  EigRowSet rows = found;
  std::unique_ptr<Stage2System> sys;
  while (!sys) {
    try {
      sys = std::make_unique<Stage2System>(assemble_stage2(rt, rows, opts.tol));
    } catch (const InconsistentRowsError&) {
      if (rows.rows.empty())
        throw Stage2Failure("run_stage2: commuting linear system is inconsistent even without eigenrows");
      rows.rows.pop_back();
    }
  }

  const double tnorm = rt.norm();
  const double target = opts.tol.residual_zero_tol * tnorm * tnorm;
  auto finish = [&](const Vec& x) {
    Stage2Solution sol;
    sol.pk = sys->pk_at(x);
    Vec z(sys->d2);
    for (std::size_t k = 0; k < sol.pk.P.size(); ++k)
      z.segment(static_cast<Index>(k) * sys->block_size(), sys->block_size()) = vec(sol.pk.P[k]);
    const double nb = sys->b_hat.norm();
    const double res = (sys->A_hat * z - sys->b_hat).norm();
    sol.diagnostics.linear_residual_rel = nb > 0.0 ? res / nb : res;
    sol.diagnostics.max_commutator_rel = max_commutator_rel(sol.pk, rt);
    sol.diagnostics.eigenrows_used = sys->p;
    return sol;
  };

  if (sys->d() == 0) {
    const Vec x = Vec::Zero(0);
    if (eval_g(x, *sys, rt).norm() <= target)
      return finish(x);
    throw Stage2Failure("run_stage2: fully determined system does not satisfy the commutation equations");
  }

  const ResidualSystem gsys = g_system(*sys, rt);
  LMOptions lm = opts.lm;
  lm.residual_scale = tnorm * tnorm;
  // Zeros of g tend to sit far from the minimum-norm point z0, so the start
  // scale cycles through 1, rho and 5 rho with rho = |z0| / sqrt(d).
  double z0norm = 0.0;
  for (const Mat& P : sys->P0)
    z0norm += P.squaredNorm();
  const double rho = std::max(std::sqrt(z0norm / static_cast<double>(sys->d())), 1.0);
  const std::array<double, 3> scales{1.0, rho, 5.0 * rho};
  for (int start = 0; start < opts.starts; ++start) {
    Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(start)));
    const Vec x0 = scales[static_cast<std::size_t>(start) % scales.size()] * rng.complex_gaussian(sys->d(), 1);
    LMOutcome res;
    try {
      res = lm_minimize(gsys, x0, lm);
    } catch (const NonFiniteError&) {
      continue;
    }
    if (res.residual_norm <= target)
      return finish(res.x_final);
  }
  throw Stage2Failure("run_stage2: no start reached a zero of g");
}

} // namespace gpcpd
