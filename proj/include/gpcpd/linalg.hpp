#pragma once

#include "gpcpd/tensor.hpp"

#include <cstdint>
#include <random>

namespace gpcpd {

/// Numerical thresholds shared by all stages.
struct Tolerances {
  /// Singular values below rank_rel_tol * sigma_max count as zero.
  double rank_rel_tol = 1e-10;
  /// Scale-relative threshold for declaring a residual zero.
  double residual_zero_tol = 1e-8;
  /// Commutation / diagonality checks.
  double offdiag_tol = 1e-6;

  void validate() const;
};

/// Seeded random source. Complex normals have unit expected modulus squared.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  cplx complex_normal();
  Mat complex_gaussian(Index rows, Index cols);
  Mat real_gaussian(Index rows, Index cols, double mean = 0.0);
  std::uint64_t next_seed() { return engine_(); }

private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// splitmix64-style mixing of a base seed with a stream tag.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

struct QrResult {
  Mat Q; // m x m unitary
  Mat R; // m x k upper triangular
};
QrResult qr_full(const Mat& a);

/// Orthonormal basis of null(a); columns count n - numerical rank.
Mat null_space_basis(const Mat& a, const Tolerances& tol = {});

struct LeastSquaresResult {
  Mat x;
  double residual = 0.0;     // |a x - b|_F
  double residual_rel = 0.0; // residual / |b|_F (absolute when b = 0)
};
/// Minimum-norm least-squares solution of a x = b.
LeastSquaresResult least_squares_min_norm(const Mat& a, const Mat& b, const Tolerances& tol = {});

struct LeftEigen {
  Mat S;          // rows are unit-norm left eigenvectors: S.row(i) * m = d(i) * S.row(i)
  Vec values;
  double sigma_min = 0.0; // smallest singular value of S
  bool ill_conditioned = false;
};
LeftEigen left_eigendecomposition(const Mat& m);

/// Haar-distributed unitary matrix (QR of a complex Gaussian, phases fixed by R's diagonal).
Mat random_unitary(Index r, std::uint64_t seed);
Mat random_unitary(Index r, Rng& rng);

/// Throws SingularityError when sigma_min <= rank_rel_tol * sigma_max.
Mat matrix_inverse(const Mat& a, const Tolerances& tol = {});
/// sigma_max / sigma_min (infinity for singular input).
double condition_estimate(const Mat& a);

Eigen::VectorXd singular_values(const Mat& a);

} // namespace gpcpd
