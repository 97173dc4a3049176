#include "gpcpd/assembly.hpp"

#include "gpcpd/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

namespace gpcpd {

void SolveOptions::validate() const {
  tol.validate();
  lm.validate();
  if (max_retries < 0 || !(success_tol > 0.0) || stage1_starts < 1 || stage2_starts < 1 || time_limit < 0.0)
    throw StructuralError("SolveOptions: invalid value");
}

U1Recovery recover_U1_lls(const Mat& U2, const Mat& U3, const Tensor3& f, const Tolerances& tol) {
  if (U2.rows() != f.dim(1) || U3.rows() != f.dim(2) || U2.cols() != U3.cols())
    throw StructuralError("recover_U1_lls: factor shapes do not match the tensor");
  const Mat A = khatri_rao(U2, U3);
  const Eigen::VectorXd sv = singular_values(A);
  if (sv.size() < A.cols() || !(sv(sv.size() - 1) > tol.rank_rel_tol * sv(0)))
    throw AssemblyFailure("recover_U1_lls: Khatri-Rao product is rank deficient");
  const LeastSquaresResult ls = least_squares_min_norm(A, mode_k_flatten(f, 1).transpose(), tol);
  return {ls.x.transpose(), ls.residual_rel};
}

FactorTriple decomposition_from_eigmatrix(const EigRowSet& rows, const Tensor3& f, const ReducedTensor& rt,
                                          const Tolerances& tol) {
  if (!rows.complete())
    throw StructuralError("decomposition_from_eigmatrix: eigenrow set is incomplete");
  const Mat S = rows.stacked();
  const Eigen::VectorXd sv = singular_values(S);
  if (!(sv(sv.size() - 1) > tol.rank_rel_tol * sv(0)))
    throw AssemblyFailure("decomposition_from_eigmatrix: eigenmatrix is singular");
  const Index r = S.rows(), n2 = rt.n2(), n3 = rt.n3();
  FactorTriple out;
  out.U2 = S.leftCols(n2).transpose();
  out.U3.resize(n3, r);
  out.U3.row(0).setOnes();
  if (n3 > 1)
    out.U3.bottomRows(n3 - 1) = rows.lambda_matrix().transpose();
  out.U1 = recover_U1_lls(out.U2, out.U3, f, tol).U1;
  return out;
}

namespace {

struct Diagonalization {
  Mat S;
  std::vector<Vec> diagonals; // per matrix, the diagonal of S M S^{-1}
};

// Left eigenbasis of `source`, accepted when it diagonalizes every matrix in `mats`.
std::optional<Diagonalization> try_common_basis(const Mat& source, const std::vector<Mat>& mats,
                                                const Tolerances& tol) {
  const LeftEigen le = left_eigendecomposition(source);
  if (le.ill_conditioned)
    return std::nullopt;
  Mat Sinv;
  try {
    Sinv = matrix_inverse(le.S, tol);
  } catch (const SingularityError&) {
    return std::nullopt;
  }
  Diagonalization out;
  out.S = le.S;
  for (const Mat& m : mats) {
    const Mat E = le.S * m * Sinv;
    const Vec d = E.diagonal();
    const double off = (E - Mat(d.asDiagonal())).norm();
    if (!(off <= tol.offdiag_tol * std::max(E.norm(), 1e-300)))
      return std::nullopt;
    out.diagonals.push_back(d);
  }
  return out;
}

std::optional<Diagonalization> common_basis(const std::vector<Mat>& mats, const Tolerances& tol,
                                            std::uint64_t seed, bool first_alone) {
  if (first_alone)
    if (auto d = try_common_basis(mats.front(), mats, tol))
      return d;
  Rng rng(seed);
  for (int attempt = 0; attempt < 4; ++attempt) {
    Mat comb = Mat::Zero(mats.front().rows(), mats.front().cols());
    for (const Mat& m : mats)
      comb += rng.complex_normal() * m;
    if (auto d = try_common_basis(comb, mats, tol))
      return d;
  }
  return std::nullopt;
}

} // namespace

EigRowSet eigmatrix_from_pkset(const PkSet& pk, const ReducedTensor& rt, const Tolerances& tol,
                               std::uint64_t seed) {
  std::vector<Mat> M;
  for (Index k = 1; k < rt.n3(); ++k)
    M.push_back(pk.generating_matrix(rt, k));
  if (M.empty())
    throw StructuralError("eigmatrix_from_pkset: no generating matrices");
  const auto diag = common_basis(M, tol, seed, true);
  if (!diag)
    throw Stage2Failure("eigmatrix_from_pkset: generating matrices are not simultaneously diagonalizable");
  EigRowSet set;
  set.r = rt.T.dim(0);
  for (Index i = 0; i < set.r; ++i) {
    CommonEigRow row;
    row.s = diag->S.row(i).transpose();
    row.lambdas.resize(static_cast<Index>(M.size()));
    for (std::size_t k = 0; k < M.size(); ++k)
      row.lambdas(static_cast<Index>(k)) = diag->diagonals[k](i);
    row.residual = eigenrow_residual(row.s, row.lambdas, rt);
    set.rows.push_back(std::move(row));
  }
  return set;
}

FactorTriple gevd_lowrank_decompose(const Tensor3& f, Index r, const Tolerances& tol, std::uint64_t seed) {
  const ReducedTensor rt = build_reduced_tensor_lowrank(f, r, tol);
  const Index n3 = rt.n3();
  Mat S = Mat::Identity(r, r);
  Mat lambdas = Mat::Zero(r, std::max<Index>(n3 - 1, 0));
  if (n3 > 1) {
    std::vector<Mat> slices;
    for (Index k = 1; k < n3; ++k)
      slices.push_back(rt.slice(k));
    const auto diag = common_basis(slices, tol, seed, false);
    if (!diag)
      throw AssemblyFailure("gevd_lowrank_decompose: reduced slices are not simultaneously diagonalizable");
    S = diag->S;
    for (Index k = 0; k < n3 - 1; ++k)
      lambdas.col(k) = diag->diagonals[static_cast<std::size_t>(k)];
  }
  FactorTriple out;
  out.U3.resize(n3, r);
  out.U3.row(0).setOnes();
  if (n3 > 1)
    out.U3.bottomRows(n3 - 1) = lambdas.transpose();
  // Leading r columns of mode 2 carry U2(0:r,:) = S^T.
  const Tensor3 lead = f.sub(0, f.dim(0), 0, r);
  out.U1 = recover_U1_lls(S.transpose(), out.U3, lead, tol).U1;
  // Remaining rows of U2 from the full mode-2 flattening.
  const Mat A = khatri_rao(out.U1, out.U3);
  const Eigen::VectorXd sv = singular_values(A);
  if (!(sv(sv.size() - 1) > tol.rank_rel_tol * sv(0)))
    throw AssemblyFailure("gevd_lowrank_decompose: mode-2 system is rank deficient");
  out.U2 = least_squares_min_norm(A, mode_k_flatten(f, 2).transpose(), tol).x.transpose();
  return out;
}

Tensor3 permute_modes(const Tensor3& f, const std::array<int, 3>& perm) {
  const auto& n = f.dims();
  Tensor3 out(n[static_cast<std::size_t>(perm[0])], n[static_cast<std::size_t>(perm[1])],
              n[static_cast<std::size_t>(perm[2])]);
  std::array<Index, 3> src{};
  for (Index a = 0; a < out.dim(0); ++a)
    for (Index b = 0; b < out.dim(1); ++b)
      for (Index c = 0; c < out.dim(2); ++c) {
        src[static_cast<std::size_t>(perm[0])] = a;
        src[static_cast<std::size_t>(perm[1])] = b;
        src[static_cast<std::size_t>(perm[2])] = c;
        out(a, b, c) = f(src[0], src[1], src[2]);
      }
  return out;
}

namespace {

enum class Seeds : std::uint64_t { Preprocess = 1, Stage1 = 2, Stage2 = 3, Mixing = 4, Eigen = 5 };

std::uint64_t stream(std::uint64_t base, Seeds s, int attempt) {
  return derive_seed(derive_seed(base, static_cast<std::uint64_t>(s)), static_cast<std::uint64_t>(attempt));
}

struct AttemptResult {
  FactorTriple factors; // in the sorted mode order, unmixed
  StageUsed stage = StageUsed::None;
  std::optional<Stage2Diagnostics> stage2;
};

AttemptResult run_middle_rank(const Tensor3& work, Index r, const SolveOptions& opts, int attempt) {
  // Retry order: stage-1 frames and stage-2 starts first, then a new C.
  PreprocessOptions pre;
  pre.tol = opts.tol;
  const ReducedTensor rt = build_reduced_tensor(work, r, stream(opts.seed, Seeds::Preprocess, attempt >= 2 ? attempt : 0), pre);

  Stage1Options s1;
  s1.tol = opts.tol;
  s1.lm = opts.lm;
  s1.starts = opts.stage1_starts;
  s1.max_rows = opts.stage1_max_rows;
  s1.seed = stream(opts.seed, Seeds::Stage1, attempt);
  const EigRowSet rows = run_stage1(rt, s1);

  AttemptResult out;
  if (rows.complete()) {
    out.factors = decomposition_from_eigmatrix(rows, work, rt, opts.tol);
    out.stage = StageUsed::Stage1;
    return out;
  }
  Stage2Options s2;
  s2.tol = opts.tol;
  s2.lm = opts.lm;
  s2.starts = opts.stage2_starts;
  s2.seed = stream(opts.seed, Seeds::Stage2, attempt);
  const Stage2Solution sol = run_stage2(rt, rows, s2);
  const EigRowSet full = eigmatrix_from_pkset(sol.pk, rt, opts.tol, stream(opts.seed, Seeds::Eigen, attempt));
  out.factors = decomposition_from_eigmatrix(full, work, rt, opts.tol);
  out.stage = StageUsed::Stage2;
  out.stage2 = sol.diagnostics;
  return out;
}

} // namespace

DecomposeResult decompose(const Tensor3& f, Index r, const SolveOptions& opts) {
  opts.validate();
  const auto t0 = std::chrono::steady_clock::now();
  if (r < 1)
    throw UnsupportedRankError("decompose: rank must be at least 1");
  if (!f.all_finite())
    throw DegenerateInputError("decompose: tensor has non-finite entries");
  if (f.frobenius_norm() == 0.0)
    throw DegenerateInputError("decompose: tensor is zero");

  std::array<int, 3> perm{0, 1, 2};
  std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) { return f.dim(a) > f.dim(b); });
  const Tensor3 sorted = permute_modes(f, perm);
  const Index n1 = sorted.dim(0), n2 = sorted.dim(1);
  if (r > n1)
    throw UnsupportedRankError("decompose: rank " + std::to_string(r) + " exceeds the largest dimension " +
                               std::to_string(n1));

  DecomposeResult best;
  best.report.err_rel = std::numeric_limits<double>::infinity();
  best.report.seed = opts.seed;
  bool force_mixing = false;
  int attempt = 0;
  for (; attempt <= opts.max_retries; ++attempt) {
    if (opts.time_limit > 0.0 && attempt > 0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() > opts.time_limit)
      break;
    const bool mix = opts.mixing == MixingPolicy::Always ||
                     (opts.mixing == MixingPolicy::OnRetry && (attempt >= 3 || force_mixing));
    MixedTensor mixed;
    if (mix) {
      mixed = random_mode_mixing(sorted, {1, 3}, stream(opts.seed, Seeds::Mixing, attempt));
    } else {
      mixed.g = sorted;
      mixed.W1 = Mat::Identity(sorted.dim(0), sorted.dim(0));
      mixed.V3 = Mat::Identity(sorted.dim(2), sorted.dim(2));
    }

    AttemptResult res;
    try {
      if (r <= n2) {
        res.factors = gevd_lowrank_decompose(mixed.g, r, opts.tol, stream(opts.seed, Seeds::Eigen, attempt));
        res.stage = StageUsed::LowRankGevd;
      } else {
        res = run_middle_rank(mixed.g, r, opts, attempt);
      }
    } catch (const GenericityError&) {
      force_mixing = true;
      continue;
    } catch (const ConditioningError&) {
      force_mixing = true;
      continue;
    } catch (const AssemblyFailure&) {
      continue;
    } catch (const Stage2Failure&) {
      continue;
    } catch (const SingularityError&) {
      continue;
    }

    const FactorTriple unmixed = mixed.unmix(res.factors);
    FactorTriple out;
    for (int m = 0; m < 3; ++m) {
      const Mat& src = m == 0 ? unmixed.U1 : (m == 1 ? unmixed.U2 : unmixed.U3);
      Mat& dst = perm[static_cast<std::size_t>(m)] == 0 ? out.U1 : (perm[static_cast<std::size_t>(m)] == 1 ? out.U2 : out.U3);
      dst = src;
    }
    if (!out.U1.allFinite() || !out.U2.allFinite() || !out.U3.allFinite())
      continue;
    const double err = relative_error(f, out);
    if (res.stage2)
      best.report.stage2.push_back(*res.stage2);
    if (err < best.report.err_rel) {
      best.factors = out;
      best.report.err_rel = err;
      best.report.stage_used = res.stage;
    }
    if (err <= opts.success_tol)
      break;
  }
  best.report.retries = std::min(attempt, opts.max_retries);
  best.report.success = best.report.err_rel <= opts.success_tol;
  best.report.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return best;
}

} // namespace gpcpd
