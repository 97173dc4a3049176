#pragma once

#include "gpcpd/tensor.hpp"

#include <vector>

namespace gpcpd {

/// Column correspondence between two factor triples up to permutation and
/// per-column scaling.
struct FactorMatch {
  std::vector<Index> perm; // perm[i] = column of b matched to column i of a (-1: none)
  std::vector<double> score;
  double min_score = 0.0;
};

/// |a^H b| / (|a| |b|), zero when either vector vanishes.
double column_correlation(const Vec& a, const Vec& b);

/// Greedy assignment on the score min over modes of column_correlation.
FactorMatch match_factors(const FactorTriple& a, const FactorTriple& b);

/// Same rank and every matched column scores at least 1 - tol.
bool equivalent_decompositions(const FactorTriple& a, const FactorTriple& b, double tol = 1e-6);

} // namespace gpcpd
