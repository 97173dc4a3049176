#include "gpcpd/fixtures.hpp"

#include "gpcpd/errors.hpp"
#include "gpcpd/linalg.hpp"

#include <cmath>
#include <sstream>

namespace gpcpd {

namespace {

// Frontal slices F(:,:,k), rows i1, columns i2.
constexpr int kEx41[3][5][3] = {
    {{-38, 56, 82}, {42, 152, 42}, {78, 109, -48}, {102, -13, -105}, {18, 35, 0}},
    {{-55, 126, 92}, {17, 352, 38}, {93, 226, -63}, {144, -163, -123}, {27, -18, 15}},
    {{31, 180, -14}, {-77, 434, 88}, {-85, 136, 71}, {10, -313, 43}, {37, -96, 1}},
};
constexpr long long kEx41Checksum = 16085;

constexpr int kEx41U1[5][5] = {
    {3, 2, -3, 4, 1}, {5, 6, 1, 8, 3}, {9, 2, 4, -1, 2}, {-3, -5, 5, 1, -2}, {3, -2, 0, 1, -2}};
constexpr int kEx41U2[3][5] = {{1, -2, 3, 4, 1}, {5, 6, 1, 9, 2}, {1, 1, -3, 4, -2}};
constexpr int kEx41U3[3][5] = {{2, 1, 6, 1, -2}, {3, 5, 7, 1, 3}, {1, 9, -5, 1, 3}};

template <int R, int C>
Mat int_matrix(const int (&a)[R][C]) {
  Mat m(R, C);
  for (int i = 0; i < R; ++i)
    for (int j = 0; j < C; ++j)
      m(i, j) = a[i][j];
  return m;
}

} // namespace

long long example41_checksum(const Tensor3& t) {
  long long sum = 0;
  for (Index i = 0; i < t.size(); ++i)
    sum += (i + 1) * std::llround(t.data()[static_cast<std::size_t>(i)].real());
  return sum;
}

Fixture fixture_example41() {
  Fixture fx;
  fx.tensor = Tensor3(5, 3, 3);
  for (Index k = 0; k < 3; ++k)
    for (Index i = 0; i < 5; ++i)
      for (Index j = 0; j < 3; ++j)
        fx.tensor(i, j, k) = kEx41[k][i][j];
  fx.factors = {int_matrix(kEx41U1), int_matrix(kEx41U2), int_matrix(kEx41U3)};
  if (example41_checksum(fx.tensor) != kEx41Checksum)
    throw AssemblyFailure("fixture_example41: checksum mismatch");
  if (relative_error(fx.tensor, fx.factors) > 1e-12)
    throw AssemblyFailure("fixture_example41: factors do not reproduce the tensor");
  return fx;
}

Fixture fixture_example42() {
  Fixture fx;
  fx.tensor = Tensor3(8, 5, 3);
  for (Index i1 = 1; i1 <= 8; ++i1)
    for (Index i2 = 1; i2 <= 5; ++i2)
      for (Index i3 = 1; i3 <= 3; ++i3)
        fx.tensor(i1 - 1, i2 - 1, i3 - 1) =
            std::pow(cplx(static_cast<double>(i1) - 3.5, +0.0), 0.8 * static_cast<double>(i2) + static_cast<double>(i3) - 1.8);
  fx.factors.U1 = Mat::Identity(8, 8);
  fx.factors.U2.resize(5, 8);
  fx.factors.U3.resize(3, 8);
  for (Index s = 0; s < 8; ++s) {
    const cplx base(static_cast<double>(s + 1) - 3.5, +0.0);
    for (Index i = 0; i < 5; ++i)
      fx.factors.U2(i, s) = std::pow(base, 0.8 * static_cast<double>(i));
    for (Index i = 0; i < 3; ++i)
      fx.factors.U3(i, s) = std::pow(base, static_cast<double>(i));
  }
  if (relative_error(fx.tensor, fx.factors) > 1e-10)
    throw AssemblyFailure("fixture_example42: factors do not reproduce the tensor");
  return fx;
}

std::string to_string(Distribution d) {
  switch (d) {
  case Distribution::StandardNormal: return "normal";
  case Distribution::FactorMeans: return "factor-means";
  case Distribution::ColumnMeans: return "column-means";
  case Distribution::ComplexNormal: return "complex-normal";
  }
  return "normal";
}

Distribution distribution_from_string(const std::string& s) {
  for (Distribution d : {Distribution::StandardNormal, Distribution::FactorMeans, Distribution::ColumnMeans,
                         Distribution::ComplexNormal})
    if (to_string(d) == s)
      return d;
  throw ParseError("unknown distribution '" + s + "'");
}

PlantedInstance gen_random_rank_r(Index n1, Index n2, Index n3, Index r, Distribution dist, std::uint64_t seed) {
  if (n1 < 1 || n2 < 1 || n3 < 1 || r < 1)
    throw StructuralError("gen_random_rank_r: dimensions and rank must be positive");
  if (r > std::min(n1, n2 * n3))
    throw UnsupportedRankError("gen_random_rank_r: rank exceeds min(n1, n2*n3)");
  Rng rng(seed);
  auto draw = [&](Index n, double factor_mean) -> Mat {
    switch (dist) {
    case Distribution::StandardNormal: return rng.real_gaussian(n, r);
    case Distribution::FactorMeans: return rng.real_gaussian(n, r, factor_mean);
    case Distribution::ColumnMeans: {
      Mat m = rng.real_gaussian(n, r);
      for (Index j = 0; j < r; ++j)
        m.col(j).array() += static_cast<double>(1 + j % 3);
      return m;
    }
    case Distribution::ComplexNormal: return rng.complex_gaussian(n, r);
    }
    return rng.real_gaussian(n, r);
  };
  PlantedInstance inst;
  FactorTriple f;
  f.U1 = draw(n1, 1.0);
  f.U2 = draw(n2, 2.0);
  f.U3 = draw(n3, 3.0);
  inst.tensor = cpd_to_tensor(f);
  inst.factors = std::move(f);
  std::ostringstream os;
  os << "factors iid " << to_string(dist) << ", seed " << seed << ", tensor = sum of " << r << " rank-1 terms";
  inst.recipe = os.str();
  return inst;
}

} // namespace gpcpd
