#include "gpcpd/tensor.hpp"

#include "gpcpd/errors.hpp"

#include <cmath>
#include <string>

namespace gpcpd {

Tensor3::Tensor3(Index n1, Index n2, Index n3)
    : dims_{n1, n2, n3}, data_(static_cast<std::size_t>(n1 * n2 * n3), cplx(0.0, 0.0)) {
  if (n1 <= 0 || n2 <= 0 || n3 <= 0)
    throw StructuralError("Tensor3: dimensions must be positive");
}

Tensor3::Tensor3(Index n1, Index n2, Index n3, std::vector<cplx> data)
    : dims_{n1, n2, n3}, data_(std::move(data)) {
  if (n1 <= 0 || n2 <= 0 || n3 <= 0)
    throw StructuralError("Tensor3: dimensions must be positive");
  if (static_cast<Index>(data_.size()) != n1 * n2 * n3)
    throw StructuralError("Tensor3: expected " + std::to_string(n1 * n2 * n3) + " entries, got " +
                          std::to_string(data_.size()));
}

Mat Tensor3::slice(Index k) const {
  Mat m(dims_[0], dims_[1]);
  for (Index i = 0; i < dims_[0]; ++i)
    for (Index j = 0; j < dims_[1]; ++j)
      m(i, j) = (*this)(i, j, k);
  return m;
}

void Tensor3::set_slice(Index k, const Mat& m) {
  if (m.rows() != dims_[0] || m.cols() != dims_[1])
    throw StructuralError("Tensor3::set_slice: shape mismatch");
  for (Index i = 0; i < dims_[0]; ++i)
    for (Index j = 0; j < dims_[1]; ++j)
      (*this)(i, j, k) = m(i, j);
}

Tensor3 Tensor3::sub(Index r0, Index rows, Index c0, Index cols) const {
  if (r0 < 0 || c0 < 0 || r0 + rows > dims_[0] || c0 + cols > dims_[1])
    throw StructuralError("Tensor3::sub: range out of bounds");
  Tensor3 out(rows, cols, dims_[2]);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      for (Index k = 0; k < dims_[2]; ++k)
        out(i, j, k) = (*this)(r0 + i, c0 + j, k);
  return out;
}

double Tensor3::frobenius_norm() const {
  double s = 0.0;
  for (const auto& z : data_)
    s += std::norm(z);
  return std::sqrt(s);
}

bool Tensor3::all_finite() const {
  for (const auto& z : data_)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      return false;
  return true;
}

bool Tensor3::is_real(double tol) const {
  for (const auto& z : data_)
    if (std::abs(z.imag()) > tol)
      return false;
  return true;
}

void FactorTriple::validate() const {
  const Index r = U1.cols();
  if (U2.cols() != r || U3.cols() != r)
    throw StructuralError("FactorTriple: factor column counts differ");
  for (const Mat* u : {&U1, &U2, &U3})
    for (Index j = 0; j < r; ++j)
      if (u->col(j).squaredNorm() == 0.0)
        throw StructuralError("FactorTriple: column " + std::to_string(j) + " is zero");
}

std::string to_string(StageUsed s) {
  switch (s) {
  case StageUsed::LowRankGevd: return "lowrank-gevd";
  case StageUsed::Stage1: return "stage1";
  case StageUsed::Stage2: return "stage2";
  case StageUsed::None: return "none";
  }
  return "none";
}

Tensor3 cpd_to_tensor(const FactorTriple& f) {
  const Index r = f.U1.cols();
  if (f.U2.cols() != r || f.U3.cols() != r)
    throw StructuralError("cpd_to_tensor: factor column counts differ");
  const Index n1 = f.U1.rows(), n2 = f.U2.rows(), n3 = f.U3.rows();
  // Flatten(F,1) = U1 * khatri_rao(U2,U3)^T
  const Mat flat = f.U1 * khatri_rao(f.U2, f.U3).transpose();
  return mode_k_unflatten(flat, 1, {n1, n2, n3});
}

namespace {

// Column of the mode-k flattening holding entry (i1,i2,i3).
Index flat_column(int k, const std::array<Index, 3>& idx, const std::array<Index, 3>& n) {
  Index j = 0;
  Index stride = 1;
  for (int l = 0; l < 3; ++l) {
    if (l == k - 1)
      continue;
    j += idx[static_cast<std::size_t>(l)] * stride;
    stride *= n[static_cast<std::size_t>(l)];
  }
  return j;
}

void check_mode(int k) {
  if (k < 1 || k > 3)
    throw StructuralError("mode index must be 1, 2 or 3");
}

} // namespace

Mat mode_k_flatten(const Tensor3& t, int k) {
  check_mode(k);
  const auto& n = t.dims();
  const Index nk = n[static_cast<std::size_t>(k - 1)];
  Mat m(nk, t.size() / nk);
  for (Index a = 0; a < n[0]; ++a)
    for (Index b = 0; b < n[1]; ++b)
      for (Index c = 0; c < n[2]; ++c) {
        const std::array<Index, 3> idx{a, b, c};
        m(idx[static_cast<std::size_t>(k - 1)], flat_column(k, idx, n)) = t(a, b, c);
      }
  return m;
}

Tensor3 mode_k_unflatten(const Mat& m, int k, const std::array<Index, 3>& n) {
  check_mode(k);
  Tensor3 t(n[0], n[1], n[2]);
  if (m.rows() != n[static_cast<std::size_t>(k - 1)] || m.size() != t.size())
    throw StructuralError("mode_k_unflatten: shape mismatch");
  for (Index a = 0; a < n[0]; ++a)
    for (Index b = 0; b < n[1]; ++b)
      for (Index c = 0; c < n[2]; ++c) {
        const std::array<Index, 3> idx{a, b, c};
        t(a, b, c) = m(idx[static_cast<std::size_t>(k - 1)], flat_column(k, idx, n));
      }
  return t;
}

Tensor3 mode_product(const Mat& v, const Tensor3& t, int mode) {
  check_mode(mode);
  if (v.cols() != t.dim(mode - 1))
    throw StructuralError("mode_product: matrix has " + std::to_string(v.cols()) +
                          " columns, tensor mode has " + std::to_string(t.dim(mode - 1)));
  auto dims = t.dims();
  dims[static_cast<std::size_t>(mode - 1)] = v.rows();
  const Mat flat = v * mode_k_flatten(t, mode);
  return mode_k_unflatten(flat, mode, dims);
}

Mat khatri_rao(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols())
    throw StructuralError("khatri_rao: column counts differ");
  const Index m = a.rows(), p = b.rows();
  Mat out(m * p, a.cols());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < p; ++i)
      out.col(j).segment(i * m, m) = b(i, j) * a.col(j);
  return out;
}

Mat kronecker(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double relative_error(const Tensor3& t, const FactorTriple& f) {
  if (f.U1.rows() != t.dim(0) || f.U2.rows() != t.dim(1) || f.U3.rows() != t.dim(2))
    throw StructuralError("relative_error: factor dimensions do not match the tensor");
  const double nt = t.frobenius_norm();
  if (nt == 0.0)
    throw DegenerateInputError("relative_error: tensor has zero norm");
  const Tensor3 approx = cpd_to_tensor(f);
  double s = 0.0;
  for (Index i = 0; i < t.size(); ++i)
    s += std::norm(t.data()[static_cast<std::size_t>(i)] - approx.data()[static_cast<std::size_t>(i)]);
  return std::sqrt(s) / nt;
}

Vec vec(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

Mat unvec(const Vec& v, Index rows, Index cols) {
  if (v.size() != rows * cols)
    throw StructuralError("unvec: length mismatch");
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

} // namespace gpcpd
