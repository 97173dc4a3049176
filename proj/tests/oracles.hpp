#pragma once

// Test-only reference computations. Nothing here calls into the library
// routines it is used to check.

#include "gpcpd/fixtures.hpp"
#include "gpcpd/preprocess.hpp"
#include "gpcpd/tensor.hpp"

#include <Eigen/SVD>

#include <random>
#include <vector>

namespace oracle {

using gpcpd::cplx;
using gpcpd::Index;
using gpcpd::Mat;
using gpcpd::Tensor3;
using gpcpd::Vec;

inline Tensor3 triple_loop_cpd(const Mat& a, const Mat& b, const Mat& c) {
  Tensor3 t(a.rows(), b.rows(), c.rows());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.rows(); ++j)
      for (Index k = 0; k < c.rows(); ++k) {
        cplx s = 0.0;
        for (Index q = 0; q < a.cols(); ++q)
          s += a(i, q) * b(j, q) * c(k, q);
        t(i, j, k) = s;
      }
  return t;
}

/// Flattening straight from the index formula: the two remaining modes in
/// ascending order, the lower one varying fastest.
inline Mat formula_flatten(const Tensor3& t, int mode) {
  const auto& n = t.dims();
  const int m = mode - 1;
  const int lo = m == 0 ? 1 : 0;
  const int hi = m == 2 ? 1 : 2;
  Mat out(n[static_cast<std::size_t>(m)], n[static_cast<std::size_t>(lo)] * n[static_cast<std::size_t>(hi)]);
  std::array<Index, 3> idx{};
  for (idx[0] = 0; idx[0] < n[0]; ++idx[0])
    for (idx[1] = 0; idx[1] < n[1]; ++idx[1])
      for (idx[2] = 0; idx[2] < n[2]; ++idx[2]) {
        const Index col = idx[static_cast<std::size_t>(lo)] +
                          idx[static_cast<std::size_t>(hi)] * n[static_cast<std::size_t>(lo)];
        out(idx[static_cast<std::size_t>(m)], col) = t(idx[0], idx[1], idx[2]);
      }
  return out;
}

inline Vec column_kron(const Vec& b, const Vec& a) {
  Vec out(b.size() * a.size());
  for (Index i = 0; i < b.size(); ++i)
    for (Index j = 0; j < a.size(); ++j)
      out(i * a.size() + j) = b(i) * a(j);
  return out;
}

inline Index numerical_rank(const Mat& m, double rel = 1e-10) {
  if (m.size() == 0)
    return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > rel * s(0))
      ++r;
  return r;
}

inline Mat gaussian(Index rows, Index cols, std::uint64_t seed, bool complex_entries = true) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> nd;
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      m(i, j) = complex_entries ? cplx(nd(eng), nd(eng)) : cplx(nd(eng), 0.0);
  return m;
}

struct Planted {
  gpcpd::FactorTriple factors;
  Tensor3 tensor;
};

inline Planted planted(Index n1, Index n2, Index n3, Index r, std::uint64_t seed, bool complex_entries = false) {
  Planted p;
  p.factors.U1 = gaussian(n1, r, seed * 3 + 1, complex_entries);
  p.factors.U2 = gaussian(n2, r, seed * 3 + 2, complex_entries);
  p.factors.U3 = gaussian(n3, r, seed * 3 + 3, complex_entries);
  p.tensor = triple_loop_cpd(p.factors.U1, p.factors.U2, p.factors.U3);
  return p;
}

/// Generating matrices of the reduced tensor built from the planted factors:
/// with A = P * U1(0:r,:) and D_k = diag(U3(k,:) ./ U3(0,:)), M_k = A D_k A^{-1}.
/// Index k runs over slices 1..n3-1 (0-based); element 0 belongs to slice 1.
inline std::vector<Mat> planted_generating_matrices(const gpcpd::ReducedTensor& rt, const gpcpd::FactorTriple& f) {
  const Index r = rt.rank;
  const Mat A = rt.P * f.U1.topRows(r);
  const Mat Ainv = A.inverse();
  std::vector<Mat> out;
  for (Index k = 1; k < f.U3.rows(); ++k) {
    Vec d(r);
    for (Index q = 0; q < r; ++q)
      d(q) = f.U3(k, q) / f.U3(0, q);
    out.push_back(A * d.asDiagonal() * Ainv);
  }
  return out;
}

/// Rows of S = A^{-1}: the exact generalized left common eigenvectors.
inline Mat planted_eigmatrix(const gpcpd::ReducedTensor& rt, const gpcpd::FactorTriple& f) {
  return (rt.P * f.U1.topRows(rt.rank)).inverse();
}

/// Eigenvalue ratios U3(k,q)/U3(0,q) as an r x (n3-1) matrix.
inline Mat planted_ratios(const gpcpd::FactorTriple& f) {
  Mat out(f.U3.cols(), f.U3.rows() - 1);
  for (Index q = 0; q < f.U3.cols(); ++q)
    for (Index k = 1; k < f.U3.rows(); ++k)
      out(q, k - 1) = f.U3(k, q) / f.U3(0, q);
  return out;
}

inline double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

} // namespace oracle
