#include "gpcpd/factor_match.hpp"

#include <algorithm>
#include <tuple>

namespace gpcpd {

double column_correlation(const Vec& a, const Vec& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0)
    return 0.0;
  return std::abs(a.dot(b)) / (na * nb);
}

FactorMatch match_factors(const FactorTriple& a, const FactorTriple& b) {
  const Index ra = a.rank(), rb = b.rank();
  std::vector<std::tuple<double, Index, Index>> pairs;
  for (Index i = 0; i < ra; ++i)
    for (Index j = 0; j < rb; ++j) {
      const double s = std::min({column_correlation(a.U1.col(i), b.U1.col(j)),
                                 column_correlation(a.U2.col(i), b.U2.col(j)),
                                 column_correlation(a.U3.col(i), b.U3.col(j))});
      pairs.emplace_back(s, i, j);
    }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& x, const auto& y) { return std::get<0>(x) > std::get<0>(y); });

  FactorMatch m;
  m.perm.assign(static_cast<std::size_t>(ra), -1);
  m.score.assign(static_cast<std::size_t>(ra), 0.0);
  std::vector<bool> taken(static_cast<std::size_t>(rb), false);
  for (const auto& [s, i, j] : pairs) {
    if (m.perm[static_cast<std::size_t>(i)] >= 0 || taken[static_cast<std::size_t>(j)])
      continue;
    m.perm[static_cast<std::size_t>(i)] = j;
    m.score[static_cast<std::size_t>(i)] = s;
    taken[static_cast<std::size_t>(j)] = true;
  }
  m.min_score = m.score.empty() ? 0.0 : *std::min_element(m.score.begin(), m.score.end());
  return m;
}

bool equivalent_decompositions(const FactorTriple& a, const FactorTriple& b, double tol) {
  if (a.rank() != b.rank() || a.U1.rows() != b.U1.rows() || a.U2.rows() != b.U2.rows() ||
      a.U3.rows() != b.U3.rows())
    return false;
  return match_factors(a, b).min_score >= 1.0 - tol;
}

} // namespace gpcpd
