#pragma once

#include "gpcpd/linalg.hpp"
#include "gpcpd/tensor.hpp"

#include <cstdint>
#include <vector>

namespace gpcpd {

/// The reduced tensor T = P x_1 F(0:r,:,:) together with the quantities used
/// to build it.
///
/// Middle rank (r > n2): T has dims (r, n2, n3), its first slice equals the
/// first n2 columns of I_r, P is the inverse of [F(0:r,:,0) C] and C holds the
/// r - n2 augmentation columns.
///
/// Low rank (r <= n2): T = F(0:r,0:r,0)^{-1} x_1 F(0:r,0:r,:) has square
/// slices and T_1 = I_r; C is empty.
struct ReducedTensor {
  Tensor3 T;
  Mat P;
  Mat C;
  std::array<Index, 3> source_dims{0, 0, 0};
  Index rank = 0;
  double cond_Fhat = 1.0;
  bool low_rank = false;

  Index n2() const { return T.dim(1); }
  Index n3() const { return T.dim(2); }
  Mat slice(Index k) const { return T.slice(k); }
  double norm() const { return T.frobenius_norm(); }
};

struct PreprocessOptions {
  Tolerances tol;
  /// Upper bound accepted for cond([F(0:r,:,0) C]).
  double max_cond = 1e8;
  int max_redraws = 10;
};

/// Middle-rank reduction (n2 < r <= n1). Throws GenericityError when
/// F(0:r,:,0) is rank deficient, ConditioningError when no draw of C gives an
/// acceptably conditioned augmented slice.
ReducedTensor build_reduced_tensor(const Tensor3& f, Index r, std::uint64_t seed,
                                   const PreprocessOptions& opts = {});

/// Low-rank reduction (r <= n2). Throws GenericityError when the leading
/// r x r block of the first slice is singular.
ReducedTensor build_reduced_tensor_lowrank(const Tensor3& f, Index r, const Tolerances& tol = {});

struct MixedTensor {
  Tensor3 g;
  Mat W1; // n1 x n1 unitary (identity when mode 1 is not mixed)
  Mat V3; // n3 x n3 unitary (identity when mode 3 is not mixed)

  /// Maps factors of g back to factors of the original tensor:
  /// U1 = W1^{-1} U1', U3 = V3^{-1} U3'.
  FactorTriple unmix(const FactorTriple& mixed) const;
};

/// g = W1 x_1 (V3 x_3 f) for random unitaries on the selected modes (subset of {1,3}).
MixedTensor random_mode_mixing(const Tensor3& f, const std::vector<int>& modes, std::uint64_t seed);

} // namespace gpcpd
