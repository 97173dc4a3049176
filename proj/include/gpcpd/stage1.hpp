#pragma once

#include "gpcpd/lm.hpp"
#include "gpcpd/preprocess.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace gpcpd {

/// One generalized left common eigenvector s of the reduced slices:
/// s^T T_k = lambda_k s(0:n2) for every k. `lambdas` holds k = 2..n3
/// (lambda for the first slice is 1).
struct CommonEigRow {
  Vec s;
  Vec lambdas;
  double residual = 0.0; // max_k |s^T T_k - lambda_k s(0:n2)| for unit-norm s
};

struct EigRowSet {
  std::vector<CommonEigRow> rows;
  Index r = 0;

  Index size() const { return static_cast<Index>(rows.size()); }
  bool complete() const { return size() == r; }
  /// Rows stacked into a p x r matrix.
  Mat stacked() const;
  /// p x (n3-1) matrix of eigenvalues for slices 2..n3.
  Mat lambda_matrix() const;
};

/// Deflation frame: x_bar = Q [x; 1].
struct SearchFrame {
  Mat Q;
  int attempt = 0;
  std::uint64_t seed = 0;
};

struct Stage1Options {
  Tolerances tol;
  LMOptions lm;
  int starts = 12;
  /// Guard on the bilinear square: |y^T y| >= iso_eps * |y|^2, y = x_bar(0:n2).
  double iso_eps = 1e-8;
  /// A new row is rejected when sigma_min/sigma_max of the stacked unit rows
  /// drops below this.
  double independence_tol = 1e-6;
  /// Stop after this many rows (-1: no limit). Used to force the second stage.
  Index max_rows = -1;
  std::uint64_t seed = 0;
};

/// f_Q(x) = vec(Z (x_bar^T x_1 T)) with Z = I - y y^T / (y^T y), y = x_bar(0:n2).
/// Column k of x_bar^T x_1 T is T_k^T x_bar. Throws DomainGuardViolation
/// outside the guarded domain.
Vec eval_fQ(const Vec& x, const SearchFrame& frame, const ReducedTensor& rt, double iso_eps = 1e-8);

/// Analytic Jacobian of eval_fQ with respect to x, (n2*n3) x (r-1).
Mat jac_fQ(const Vec& x, const SearchFrame& frame, const ReducedTensor& rt, double iso_eps = 1e-8);

ResidualSystem fQ_system(const SearchFrame& frame, const ReducedTensor& rt, double iso_eps = 1e-8);

/// lambda_k = y^T (T_k^T s) / (y^T y) for k = 2..n3.
Vec extract_eigenvalues(const Vec& s, const ReducedTensor& rt);

/// max_k |s^T T_k - lambda_k s(0:n2)| after scaling s to unit norm.
double eigenrow_residual(const Vec& s, const Vec& lambdas, const ReducedTensor& rt);

/// Deflation frame for the next search: a random unitary when nothing has
/// been found, otherwise the QR frame of the found rows with its trailing
/// columns rotated by a random unitary.
SearchFrame make_frame(const ReducedTensor& rt, const EigRowSet& found, std::uint64_t seed, int attempt);

/// Multi-start search for the next generalized left common eigenvector.
std::optional<CommonEigRow> find_next_row(const ReducedTensor& rt, const EigRowSet& found,
                                          const Stage1Options& opts);

/// Sequential deflated search (stops at the first row that cannot be found).
EigRowSet run_stage1(const ReducedTensor& rt, const Stage1Options& opts);

} // namespace gpcpd
