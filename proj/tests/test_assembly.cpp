#include "gpcpd/assembly.hpp"
#include "gpcpd/errors.hpp"
#include "gpcpd/factor_match.hpp"
#include "gpcpd/fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace gpcpd;

namespace {

FactorTriple permuted_and_scaled(const FactorTriple& f, std::uint64_t seed) {
  const Index r = f.rank();
  std::vector<Index> perm(static_cast<std::size_t>(r));
  for (Index i = 0; i < r; ++i)
    perm[static_cast<std::size_t>(i)] = (i * 3 + static_cast<Index>(seed)) % r;
  FactorTriple g{Mat(f.U1.rows(), r), Mat(f.U2.rows(), r), Mat(f.U3.rows(), r)};
  const Mat c = oracle::gaussian(2, r, seed);
  for (Index j = 0; j < r; ++j) {
    const Index src = perm[static_cast<std::size_t>(j)];
    g.U1.col(j) = f.U1.col(src) * c(0, j);
    g.U2.col(j) = f.U2.col(src) * c(1, j);
    g.U3.col(j) = f.U3.col(src) / (c(0, j) * c(1, j));
  }
  return g;
}

} // namespace

TEST(FactorMatch, PermutationAndScalingAreEquivalent) {
  const oracle::Planted p = oracle::planted(6, 4, 3, 5, 1, true);
  const FactorTriple g = permuted_and_scaled(p.factors, 2);
  EXPECT_LE(relative_error(p.tensor, g), 1e-12);
  const FactorMatch m = match_factors(p.factors, g);
  EXPECT_GE(m.min_score, 1.0 - 1e-12);
  EXPECT_TRUE(equivalent_decompositions(p.factors, g));
  for (Index i = 0; i < 5; ++i)
    EXPECT_LE((g.U1.col(m.perm[static_cast<std::size_t>(i)]).normalized().cwiseAbs() -
               p.factors.U1.col(i).normalized().cwiseAbs())
                  .norm(),
              1e-12);
}

TEST(FactorMatch, DifferentFactorsAreNot) {
  const oracle::Planted a = oracle::planted(6, 4, 3, 5, 1);
  const oracle::Planted b = oracle::planted(6, 4, 3, 5, 2);
  EXPECT_FALSE(equivalent_decompositions(a.factors, b.factors));
  const oracle::Planted c = oracle::planted(6, 4, 3, 4, 1);
  EXPECT_FALSE(equivalent_decompositions(a.factors, c.factors));
}

TEST(FactorMatch, ColumnCorrelation) {
  Vec a(2), b(2);
  a << 1.0, 0.0;
  b << 0.0, 1.0;
  EXPECT_DOUBLE_EQ(column_correlation(a, b), 0.0);
  EXPECT_NEAR(column_correlation(a, cplx(0.0, 3.0) * a), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(column_correlation(a, Vec::Zero(2)), 0.0);
}

TEST(RecoverU1, ExactFromPlantedModes) {
  const oracle::Planted p = oracle::planted(7, 3, 3, 5, 3, true);
  const U1Recovery rec = recover_U1_lls(p.factors.U2, p.factors.U3, p.tensor);
  EXPECT_LE((rec.U1 - p.factors.U1).norm(), 1e-10 * p.factors.U1.norm());
  EXPECT_LE(rec.residual_rel, 1e-12);
}

TEST(RecoverU1, RankDeficientKhatriRaoFails) {
  oracle::Planted p = oracle::planted(7, 3, 3, 5, 4);
  Mat u2 = p.factors.U2, u3 = p.factors.U3;
  u2.col(1) = u2.col(0);
  u3.col(1) = u3.col(0);
  EXPECT_THROW(recover_U1_lls(u2, u3, p.tensor), AssemblyFailure);
}

TEST(Assembly, PlantedEigenbasisReproducesTensor) {
  const oracle::Planted p = oracle::planted(9, 4, 4, 9, 5);
  const ReducedTensor rt = build_reduced_tensor(p.tensor, 9, 5);
  const Mat S = oracle::planted_eigmatrix(rt, p.factors);
  const Mat ratios = oracle::planted_ratios(p.factors);
  EigRowSet rows{{}, 9};
  for (Index q = 0; q < 9; ++q)
    rows.rows.push_back(CommonEigRow{S.row(q).transpose(), ratios.row(q).transpose(), 0.0});
  const FactorTriple f = decomposition_from_eigmatrix(rows, p.tensor, rt);
  EXPECT_LE(relative_error(p.tensor, f), 1e-10);
  EXPECT_TRUE(equivalent_decompositions(f, p.factors, 1e-8));
}

TEST(Assembly, EigenbasisFromPlantedTails) {
  const oracle::Planted p = oracle::planted(6, 4, 3, 5, 6, true);
  const ReducedTensor rt = build_reduced_tensor(p.tensor, 5, 6);
  PkSet pk;
  for (const Mat& m : oracle::planted_generating_matrices(rt, p.factors))
    pk.P.push_back(m.rightCols(1));
  const EigRowSet rows = eigmatrix_from_pkset(pk, rt);
  ASSERT_TRUE(rows.complete());
  EXPECT_LE(relative_error(p.tensor, decomposition_from_eigmatrix(rows, p.tensor, rt)), 1e-10);
}

TEST(Assembly, NonCommutingTailsFail) {
  const oracle::Planted p = oracle::planted(9, 4, 4, 9, 7);
  const ReducedTensor rt = build_reduced_tensor(p.tensor, 9, 7);
  PkSet pk;
  for (int k = 0; k < 3; ++k)
    pk.P.push_back(oracle::gaussian(9, 5, 70 + static_cast<std::uint64_t>(k)));
  EXPECT_THROW(eigmatrix_from_pkset(pk, rt), Stage2Failure);
}

TEST(LowRankGevd, RecoversPlantedFactors) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const oracle::Planted p = oracle::planted(7, 5, 4, 4, seed, seed % 2 == 0);
    const FactorTriple f = gevd_lowrank_decompose(p.tensor, 4, {}, seed);
    EXPECT_LE(relative_error(p.tensor, f), 1e-9);
    EXPECT_TRUE(equivalent_decompositions(f, p.factors, 1e-6));
  }
}

TEST(PermuteModes, MovesFactorsAndInverts) {
  const oracle::Planted p = oracle::planted(5, 4, 3, 2, 8);
  const Tensor3 q = permute_modes(p.tensor, {2, 0, 1});
  EXPECT_EQ(q.dims(), (std::array<Index, 3>{3, 5, 4}));
  EXPECT_LE(relative_error(q, {p.factors.U3, p.factors.U1, p.factors.U2}), 1e-13);
  EXPECT_EQ(permute_modes(q, {1, 2, 0}).data(), p.tensor.data());
}

TEST(Decompose, IntegerFixture) {
  const Fixture fx = fixture_example41();
  const DecomposeResult res = decompose(fx.tensor, 5);
  EXPECT_TRUE(res.report.success);
  EXPECT_LE(res.report.err_rel, 1e-6);
  EXPECT_LE(relative_error(fx.tensor, res.factors), 1e-6);
  EXPECT_EQ(res.factors.U1.rows(), 5);
  EXPECT_EQ(res.factors.U2.rows(), 3);
  EXPECT_EQ(res.factors.U3.rows(), 3);
}

TEST(Decompose, DeterministicInSeed) {
  const oracle::Planted p = oracle::planted(9, 4, 4, 9, 9);
  SolveOptions o;
  o.seed = 11;
  const DecomposeResult a = decompose(p.tensor, 9, o), b = decompose(p.tensor, 9, o);
  EXPECT_EQ(a.factors.U1, b.factors.U1);
  EXPECT_EQ(a.report.err_rel, b.report.err_rel);
}

TEST(Decompose, LowRankUsesGevdPath) {
  const oracle::Planted p = oracle::planted(6, 5, 4, 3, 10, true);
  const DecomposeResult res = decompose(p.tensor, 3);
  EXPECT_TRUE(res.report.success);
  EXPECT_EQ(res.report.stage_used, StageUsed::LowRankGevd);
  EXPECT_TRUE(equivalent_decompositions(res.factors, p.factors, 1e-6));
}

TEST(Decompose, UnsortedModesReturnedInInputOrder) {
  const oracle::Planted p = oracle::planted(4, 9, 4, 9, 11);
  const DecomposeResult res = decompose(p.tensor, 9);
  ASSERT_TRUE(res.report.success);
  EXPECT_EQ(res.factors.U1.rows(), 4);
  EXPECT_EQ(res.factors.U2.rows(), 9);
  EXPECT_LE(relative_error(p.tensor, res.factors), 1e-6);
  EXPECT_TRUE(equivalent_decompositions(res.factors, p.factors, 1e-6));
}

TEST(Decompose, RejectsUnsupportedRankAndZeroTensor) {
  const oracle::Planted p = oracle::planted(5, 3, 3, 4, 12);
  EXPECT_THROW(decompose(p.tensor, 6), UnsupportedRankError);
  EXPECT_THROW(decompose(p.tensor, 0), UnsupportedRankError);
  EXPECT_THROW(decompose(Tensor3(5, 3, 3), 4), DegenerateInputError);
  Tensor3 bad = p.tensor;
  bad(0, 0, 0) = cplx(std::numeric_limits<double>::infinity(), 0.0);
  EXPECT_THROW(decompose(bad, 4), DegenerateInputError);
}

TEST(Decompose, ForcedSecondStageSatisfiesDiagnostics) {
  const Fixture fx = fixture_example41();
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    SolveOptions o;
    o.seed = seed;
    o.stage1_max_rows = 2;
    const DecomposeResult res = decompose(fx.tensor, 5, o);
    if (!res.report.success)
      continue;
    ++ok;
    EXPECT_EQ(res.report.stage_used, StageUsed::Stage2);
    ASSERT_FALSE(res.report.stage2.empty());
    const Stage2Diagnostics& d = res.report.stage2.back();
    EXPECT_LE(d.max_commutator_rel, 1e-6);
    EXPECT_LE(d.linear_residual_rel, 1e-8);
  }
  EXPECT_GE(ok, 3);
}

TEST(Decompose, PlantAndRecoverMiddleRank) {
  int matched = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const oracle::Planted p = oracle::planted(6, 4, 3, 5, 100 + seed, seed % 2 == 1);
    SolveOptions o;
    o.seed = seed;
    const DecomposeResult res = decompose(p.tensor, 5, o);
    if (res.report.success && equivalent_decompositions(res.factors, p.factors, 1e-6))
      ++matched;
  }
  EXPECT_GE(matched, 5);
}

TEST(SolveOptions, Validation) {
  SolveOptions o;
  EXPECT_NO_THROW(o.validate());
  o.max_retries = -1;
  EXPECT_ANY_THROW(o.validate());
  o = SolveOptions{};
  o.success_tol = 0.0;
  EXPECT_ANY_THROW(o.validate());
}
