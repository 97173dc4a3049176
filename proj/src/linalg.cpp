#include "gpcpd/linalg.hpp"

#include "gpcpd/errors.hpp"

#include <cmath>
#include <limits>

namespace gpcpd {

void Tolerances::validate() const {
  if (!(rank_rel_tol > 0.0) || !(residual_zero_tol > 0.0) || !(offdiag_tol > 0.0))
    throw StructuralError("Tolerances: all thresholds must be positive");
}

cplx Rng::complex_normal() {
  constexpr double s = 0.70710678118654752440;
  const double re = normal_(engine_);
  const double im = normal_(engine_);
  return {s * re, s * im};
}

Mat Rng::complex_gaussian(Index rows, Index cols) {
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      m(i, j) = complex_normal();
  return m;
}

Mat Rng::real_gaussian(Index rows, Index cols, double mean) {
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      m(i, j) = cplx(mean + normal_(engine_), 0.0);
  return m;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

QrResult qr_full(const Mat& a) {
  if (a.rows() < 1)
    throw StructuralError("qr_full: matrix must have at least one row");
  Eigen::HouseholderQR<Mat> qr(a);
  QrResult out;
  out.Q = qr.householderQ() * Mat::Identity(a.rows(), a.rows());
  out.R = qr.matrixQR().triangularView<Eigen::Upper>();
  return out;
}

Eigen::VectorXd singular_values(const Mat& a) {
  if (a.size() == 0)
    return Eigen::VectorXd();
  Eigen::BDCSVD<Mat> svd(a);
  return svd.singularValues();
}

Mat null_space_basis(const Mat& a, const Tolerances& tol) {
  const Index n = a.cols();
  if (a.rows() == 0)
    return Mat::Identity(n, n);
  Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol.rank_rel_tol * smax)
      ++rank;
  return svd.matrixV().rightCols(n - rank);
}

LeastSquaresResult least_squares_min_norm(const Mat& a, const Mat& b, const Tolerances& tol) {
  if (a.rows() != b.rows())
    throw StructuralError("least_squares_min_norm: row counts differ");
  LeastSquaresResult out;
  if (a.size() == 0 || a.norm() == 0.0) {
    out.x = Mat::Zero(a.cols(), b.cols());
  } else {
    Eigen::CompleteOrthogonalDecomposition<Mat> cod;
    cod.setThreshold(tol.rank_rel_tol);
    cod.compute(a);
    out.x = cod.solve(b);
  }
  out.residual = (a * out.x - b).norm();
  const double nb = b.norm();
  out.residual_rel = nb > 0.0 ? out.residual / nb : out.residual;
  return out;
}

LeftEigen left_eigendecomposition(const Mat& m) {
  if (m.rows() != m.cols())
    throw StructuralError("left_eigendecomposition: matrix must be square");
  // Left eigenvectors of m are the (plain-transposed) right eigenvectors of m^T.
  Eigen::ComplexEigenSolver<Mat> es(m.transpose());
  LeftEigen out;
  out.values = es.eigenvalues();
  out.S = es.eigenvectors().transpose();
  for (Index i = 0; i < out.S.rows(); ++i) {
    const double nrm = out.S.row(i).norm();
    if (nrm > 0.0)
      out.S.row(i) /= nrm;
  }
  const Eigen::VectorXd sv = singular_values(out.S);
  out.sigma_min = sv.size() > 0 ? sv(sv.size() - 1) : 0.0;
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  out.ill_conditioned = !(out.sigma_min > std::sqrt(std::numeric_limits<double>::epsilon()) * smax);
  return out;
}

Mat random_unitary(Index r, Rng& rng) {
  if (r < 1)
    throw StructuralError("random_unitary: size must be positive");
  const Mat g = rng.complex_gaussian(r, r);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(r, r);
  const Mat& packed = qr.matrixQR();
  for (Index j = 0; j < r; ++j) {
    const cplx d = packed(j, j);
    const double ad = std::abs(d);
    q.col(j) *= ad > 0.0 ? d / ad : cplx(1.0, 0.0);
  }
  return q;
}

Mat random_unitary(Index r, std::uint64_t seed) {
  Rng rng(seed);
  return random_unitary(r, rng);
}

double condition_estimate(const Mat& a) {
  const Eigen::VectorXd sv = singular_values(a);
  if (sv.size() == 0)
    return 1.0;
  const double smin = sv(sv.size() - 1);
  return smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
}

Mat matrix_inverse(const Mat& a, const Tolerances& tol) {
  if (a.rows() != a.cols())
    throw StructuralError("matrix_inverse: matrix must be square");
  Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smin > tol.rank_rel_tol * smax))
    throw SingularityError("matrix_inverse: matrix is numerically singular (sigma_min/sigma_max = " +
                           std::to_string(smax > 0.0 ? smin / smax : 0.0) + ")");
  return Eigen::PartialPivLU<Mat>(a).inverse();
}

} // namespace gpcpd
