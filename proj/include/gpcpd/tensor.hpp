#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace gpcpd {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Dense order-3 complex tensor.
///
/// Entries are stored with the third index running fastest and the first
/// index slowest, i.e. entry (i1,i2,i3) lives at `(i1*n2 + i2)*n3 + i3`
/// (0-based). All index arguments of the public API are 0-based; the
/// documentation of individual operations uses the same convention.
class Tensor3 {
public:
  Tensor3() = default;
  Tensor3(Index n1, Index n2, Index n3);
  Tensor3(Index n1, Index n2, Index n3, std::vector<cplx> data);

  static Tensor3 zeros(Index n1, Index n2, Index n3) { return Tensor3(n1, n2, n3); }

  Index dim(int mode) const { return dims_[static_cast<std::size_t>(mode)]; }
  const std::array<Index, 3>& dims() const { return dims_; }
  Index size() const { return static_cast<Index>(data_.size()); }

  cplx& operator()(Index i1, Index i2, Index i3) { return data_[offset(i1, i2, i3)]; }
  const cplx& operator()(Index i1, Index i2, Index i3) const { return data_[offset(i1, i2, i3)]; }

  const std::vector<cplx>& data() const { return data_; }

  /// Frontal slice F(:,:,k) as an n1 x n2 matrix.
  Mat slice(Index k) const;
  void set_slice(Index k, const Mat& m);

  /// Sub-tensor F(r0:r0+rows, c0:c0+cols, :).
  Tensor3 sub(Index r0, Index rows, Index c0, Index cols) const;

  double frobenius_norm() const;
  bool all_finite() const;
  bool is_real(double tol = 0.0) const;

private:
  std::size_t offset(Index i1, Index i2, Index i3) const {
    return static_cast<std::size_t>((i1 * dims_[1] + i2) * dims_[2] + i3);
  }

  std::array<Index, 3> dims_{0, 0, 0};
  std::vector<cplx> data_;
};

/// A rank-r CP decomposition U1 o U2 o U3.
struct FactorTriple {
  Mat U1;
  Mat U2;
  Mat U3;

  Index rank() const { return U1.cols(); }
  /// Throws StructuralError if column counts disagree or a column is zero.
  void validate() const;
};

enum class StageUsed { LowRankGevd, Stage1, Stage2, None };
std::string to_string(StageUsed s);

struct Stage2Diagnostics {
  double max_commutator_rel = 0.0; // max_{i<j} |[M_i,M_j]| / (|M_i||M_j|)
  double linear_residual_rel = 0.0; // |A_hat vec(P) - b_hat| / |b_hat|
  Index eigenrows_used = 0;
};

struct DecompReport {
  double err_rel = 0.0;
  StageUsed stage_used = StageUsed::None;
  int retries = 0;
  double elapsed = 0.0;
  std::uint64_t seed = 0;
  bool success = false;
  std::vector<Stage2Diagnostics> stage2; // one per successful stage-2 solve
};

/// sum_j U1(:,j) (x) U2(:,j) (x) U3(:,j)
Tensor3 cpd_to_tensor(const FactorTriple& f);

/// Mode-k flattening (k in {1,2,3}). Column index of entry (i1,i2,i3) is
/// sum over the two remaining modes l (ascending) of i_l * J_l, where J_l is
/// the product of the remaining-mode dimensions preceding l.
Mat mode_k_flatten(const Tensor3& t, int k);

/// Inverse of mode_k_flatten for a tensor of the given dimensions.
Tensor3 mode_k_unflatten(const Mat& m, int k, const std::array<Index, 3>& dims);

/// V x_mode t: every mode-`mode` fiber is multiplied by V.
Tensor3 mode_product(const Mat& v, const Tensor3& t, int mode);

/// Reverse-order Khatri-Rao product: column j is kron(b(:,j), a(:,j)).
Mat khatri_rao(const Mat& a, const Mat& b);

Mat kronecker(const Mat& a, const Mat& b);

/// |t - cpd_to_tensor(f)|_F / |t|_F.
double relative_error(const Tensor3& t, const FactorTriple& f);

/// Column-major vec().
Vec vec(const Mat& m);
Mat unvec(const Vec& v, Index rows, Index cols);

} // namespace gpcpd
