#pragma once

#include "gpcpd/lm.hpp"
#include "gpcpd/preprocess.hpp"
#include "gpcpd/stage1.hpp"
#include "gpcpd/stage2.hpp"
#include "gpcpd/tensor.hpp"

#include <cstdint>

namespace gpcpd {

enum class MixingPolicy { Off, OnRetry, Always };

struct SolveOptions {
  int max_retries = 5;
  /// Success threshold on err-rel.
  double success_tol = 1e-6;
  Tolerances tol;
  LMOptions lm;
  int stage1_starts = 12;
  int stage2_starts = 12;
  /// Cap on stage-1 rows (-1: none). Forces stage 2 when below r.
  Index stage1_max_rows = -1;
  std::uint64_t seed = 0;
  MixingPolicy mixing = MixingPolicy::OnRetry;
  /// Wall-clock budget in seconds for all attempts (0: unlimited).
  double time_limit = 0.0;

  void validate() const;
};

struct U1Recovery {
  Mat U1;
  double residual_rel = 0.0;
};

/// U1 = X^T where X solves khatri_rao(U2, U3) X = Flatten(f,1)^T in least
/// squares. Throws AssemblyFailure when the Khatri-Rao product is rank deficient.
U1Recovery recover_U1_lls(const Mat& U2, const Mat& U3, const Tensor3& f, const Tolerances& tol = {});

/// Builds a decomposition of f from a complete set of generalized left common
/// eigenvectors of the reduced slices: U2 = S(:,0:n2)^T, U3 = [1; lambdas^T],
/// U1 by least squares. Throws AssemblyFailure when S is singular.
FactorTriple decomposition_from_eigmatrix(const EigRowSet& rows, const Tensor3& f, const ReducedTensor& rt,
                                          const Tolerances& tol = {});

/// Common left eigenbasis of the commuting M_k = [T_k P_k]. Uses M_2 first and
/// falls back to random combinations of all M_k. Throws Stage2Failure when
/// no basis diagonalizes every M_k.
EigRowSet eigmatrix_from_pkset(const PkSet& pk, const ReducedTensor& rt, const Tolerances& tol = {},
                               std::uint64_t seed = 0);

/// Low-rank path (r <= n2): eigenbasis of a random combination of the square
/// reduced slices, U1 from the leading r columns of mode 2, U2 from mode-2
/// least squares.
FactorTriple gevd_lowrank_decompose(const Tensor3& f, Index r, const Tolerances& tol = {},
                                    std::uint64_t seed = 0);

struct DecomposeResult {
  FactorTriple factors;
  DecompReport report;
};

/// Full pipeline. Dimensions are sorted descending internally and factors are
/// returned in the input's mode order. Throws UnsupportedRankError when r
/// exceeds the largest dimension. On failure the best attempt is returned
/// with report.success == false.
DecomposeResult decompose(const Tensor3& f, Index r, const SolveOptions& opts = {});

/// Tensor whose mode m is mode perm[m] of f.
Tensor3 permute_modes(const Tensor3& f, const std::array<int, 3>& perm);

} // namespace gpcpd
