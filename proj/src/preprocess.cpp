#include "gpcpd/preprocess.hpp"

#include "gpcpd/errors.hpp"

#include <cmath>
#include <string>

namespace gpcpd {

ReducedTensor build_reduced_tensor(const Tensor3& f, Index r, std::uint64_t seed,
                                   const PreprocessOptions& opts) {
  const Index n1 = f.dim(0), n2 = f.dim(1);
  if (!(n2 < r && r <= n1))
    throw UnsupportedRankError("build_reduced_tensor: need n2 < r <= n1, got r = " + std::to_string(r));

  const Mat F1 = f.slice(0).topRows(r); // r x n2
  const Eigen::VectorXd sv = singular_values(F1);
  if (!(sv(sv.size() - 1) > opts.tol.rank_rel_tol * sv(0)))
    throw GenericityError("build_reduced_tensor: first slice block F(0:r,:,0) is rank deficient");

  // Augmentation columns at the RMS scale of F1 so the conditioning gate
  // measures geometry rather than a scale mismatch.
  const double scale = F1.norm() / std::sqrt(static_cast<double>(F1.size()));
  Rng rng(seed);
  ReducedTensor out;
  out.low_rank = false;
  out.rank = r;
  out.source_dims = f.dims();
  Mat Fhat(r, r);
  Fhat.leftCols(n2) = F1;
  bool ok = false;
  for (int attempt = 0; attempt < opts.max_redraws; ++attempt) {
    out.C = scale * rng.complex_gaussian(r, r - n2);
    Fhat.rightCols(r - n2) = out.C;
    out.cond_Fhat = condition_estimate(Fhat);
    if (out.cond_Fhat <= opts.max_cond) {
      ok = true;
      break;
    }
  }
  if (!ok)
    throw ConditioningError("build_reduced_tensor: augmented first slice stays ill-conditioned (cond = " +
                            std::to_string(out.cond_Fhat) + ")");

  out.P = matrix_inverse(Fhat, opts.tol);
  out.T = mode_product(out.P, f.sub(0, r, 0, n2), 1);
  return out;
}

ReducedTensor build_reduced_tensor_lowrank(const Tensor3& f, Index r, const Tolerances& tol) {
  const Index n2 = f.dim(1);
  if (!(r >= 1 && r <= n2))
    throw UnsupportedRankError("build_reduced_tensor_lowrank: need 1 <= r <= n2");
  const Mat lead = f.slice(0).topLeftCorner(r, r);
  ReducedTensor out;
  out.low_rank = true;
  out.rank = r;
  out.source_dims = f.dims();
  try {
    out.P = matrix_inverse(lead, tol);
  } catch (const SingularityError&) {
    throw GenericityError("build_reduced_tensor_lowrank: leading block of the first slice is singular");
  }
  out.cond_Fhat = condition_estimate(lead);
  out.T = mode_product(out.P, f.sub(0, r, 0, r), 1);
  return out;
}

FactorTriple MixedTensor::unmix(const FactorTriple& mixed) const {
  return {W1.adjoint() * mixed.U1, mixed.U2, V3.adjoint() * mixed.U3};
}

MixedTensor random_mode_mixing(const Tensor3& f, const std::vector<int>& modes, std::uint64_t seed) {
  Rng rng(seed);
  MixedTensor out;
  out.W1 = Mat::Identity(f.dim(0), f.dim(0));
  out.V3 = Mat::Identity(f.dim(2), f.dim(2));
  for (int m : modes) {
    if (m == 1)
      out.W1 = random_unitary(f.dim(0), rng);
    else if (m == 3)
      out.V3 = random_unitary(f.dim(2), rng);
    else
      throw StructuralError("random_mode_mixing: only modes 1 and 3 can be mixed");
  }
  out.g = mode_product(out.W1, mode_product(out.V3, f, 3), 1);
  return out;
}

} // namespace gpcpd
