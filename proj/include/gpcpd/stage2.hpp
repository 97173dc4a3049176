#pragma once

#include "gpcpd/lm.hpp"
#include "gpcpd/preprocess.hpp"
#include "gpcpd/stage1.hpp"

#include <cstdint>
#include <vector>

namespace gpcpd {

/// Unknown tails P_k (r x (r-n2)) of the generating matrices M_k = [T_k P_k],
/// k = 2..n3, stored in that order (P[0] is P_2).
struct PkSet {
  std::vector<Mat> P;

  /// M for slice index k (0-based slice index, k >= 1).
  Mat generating_matrix(const ReducedTensor& rt, Index k) const;
};

/// max over pairs of |M_i M_j - M_j M_i|_F / (|M_i|_F |M_j|_F).
double max_commutator_rel(const PkSet& pk, const ReducedTensor& rt);

struct LinearBlock {
  Mat A;
  Vec b;
};

/// Unknowns are z = [vec(P_2); ...; vec(P_n3)]. For every pair 2 <= i < j <= n3
/// (lexicographic), the block encodes
///   P_i Bot_j - P_j Bot_i = T_j Top_i - T_i Top_j,
/// where Top_k / Bot_k are the first n2 / last r-n2 rows of T_k.
/// Empty (zero rows) when n3 < 3.
LinearBlock build_commuting_linear_system(const ReducedTensor& rt);

/// S^p P_k = D_k S^p(:, n2:r) for every k, with D_k the eigenvalues of the found rows.
LinearBlock build_partial_eig_system(const ReducedTensor& rt, const EigRowSet& found);

struct Stage2System {
  Mat A_hat;
  Vec b_hat;
  std::vector<Mat> P0; // particular solution, one r x (r-n2) matrix per k = 2..n3
  Mat N;               // d2 x d orthonormal null-space basis of A_hat
  double lls_residual = 0.0; // |A_hat z0 - b_hat| / |b_hat|
  Index d1 = 0, d2 = 0, eig_rows = 0, p = 0;
  Index r = 0, n2 = 0, n3 = 0;

  Index d() const { return N.cols(); }
  Index block_size() const { return r * (r - n2); }
  /// Rows of N belonging to vec(P_k); k counts from 2.
  Mat N_k(Index k) const { return N.middleRows((k - 2) * block_size(), block_size()); }
  PkSet pk_at(const Vec& x) const;
};

/// Stacks both blocks, solves for the minimum-norm particular solution and the
/// null-space basis. Throws InconsistentRowsError when the least-squares
/// residual exceeds tol.residual_zero_tol.
Stage2System assemble_stage2(const ReducedTensor& rt, const EigRowSet& found, const Tolerances& tol = {});

/// Stacked commutator residuals vec([T_i P_i(x)] P_j(x) - [T_j P_j(x)] P_i(x)) over pairs i < j.
Vec eval_g(const Vec& x, const Stage2System& sys, const ReducedTensor& rt);
Mat jac_g(const Vec& x, const Stage2System& sys, const ReducedTensor& rt);
ResidualSystem g_system(const Stage2System& sys, const ReducedTensor& rt);

struct Stage2Options {
  Tolerances tol;
  LMOptions lm;
  int starts = 12;
  std::uint64_t seed = 0;
};

struct Stage2Solution {
  PkSet pk;
  Stage2Diagnostics diagnostics;
};

/// Assembles the system (dropping trailing eigenrows while it is inconsistent)
/// and minimizes |g|^2 from multiple starts. Throws Stage2Failure when no start
/// reaches |g| <= residual_zero_tol * |T|_F^2.
Stage2Solution run_stage2(const ReducedTensor& rt, const EigRowSet& found, const Stage2Options& opts = {});

} // namespace gpcpd
