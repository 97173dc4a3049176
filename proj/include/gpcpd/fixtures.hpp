#pragma once

#include "gpcpd/tensor.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace gpcpd {

struct Fixture {
  Tensor3 tensor;
  FactorTriple factors;
};

/// Integer 5x3x3 rank-5 tensor with six essentially distinct decompositions;
/// `factors` is the reference one. Throws AssemblyFailure if the embedded
/// data fails its checksum or the factors do not reproduce the tensor.
Fixture fixture_example41();

/// 8x5x3 tensor F(i1,i2,i3) = (i1 - 7/2)^(0.8 i2 + i3 - 1.8) (1-based indices,
/// principal branch) with its rank-8 decomposition.
Fixture fixture_example42();

/// Sum of the integer entries of the 5x3x3 fixture weighted by their 1-based
/// storage position; used to detect transcription errors.
long long example41_checksum(const Tensor3& t);

enum class Distribution {
  /// i.i.d. real standard normal factor entries.
  StandardNormal,
  /// Real normal factors with unit variance and means 1, 2, 3 for U1, U2, U3.
  FactorMeans,
  /// Real normal factors with unit variance; column j of every factor has
  /// mean 1 + (j mod 3).
  ColumnMeans,
  ComplexNormal,
};

std::string to_string(Distribution d);
Distribution distribution_from_string(const std::string& s);

struct PlantedInstance {
  Tensor3 tensor;
  std::optional<FactorTriple> factors;
  std::string recipe;
};

/// Random planted instance of rank r. Deterministic in the seed.
PlantedInstance gen_random_rank_r(Index n1, Index n2, Index n3, Index r,
                                  Distribution dist = Distribution::StandardNormal, std::uint64_t seed = 0);

} // namespace gpcpd
