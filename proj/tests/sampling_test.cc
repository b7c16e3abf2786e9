// Copyright 2026 The FedSim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fedsim/sampling.h"

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "fedsim/lemmas.h"
#include "generators.h"

namespace fedsim {
namespace {

using testing::RandomSimplex;
using testing::RandomVectors;
using testing::UniformInt;

// Pairwise inclusion straight from the subset list; independent of the
// closed forms inside SamplingScheme.
Matrix PairFromSubsets(int n, const std::vector<WeightedSubset>& subsets) {
  Matrix P = Matrix::Zero(n, n);
  for (const auto& ws : subsets) {
    for (int i : ws.clients) {
      for (int j : ws.clients) P(i, j) += ws.probability;
    }
  }
  return P;
}

TEST(SchemeTest, FullAlwaysDrawsEveryone) {
  SamplingScheme s = SamplingScheme::Full(3);
  Rng rng(1);
  for (int t = 0; t < 10; ++t) EXPECT_EQ(s.Draw(rng), (ClientSet{0, 1, 2}));
  EXPECT_EQ(s.SVector(), Vector::Zero(3));
}

TEST(SchemeTest, UniformTwoOfThreeIsUniformOverPairs) {
  SamplingScheme s = SamplingScheme::Uniform(3, 2);
  auto subsets = s.Enumerate();
  ASSERT_EQ(subsets.size(), 3u);
  for (const auto& ws : subsets) {
    EXPECT_EQ(ws.clients.size(), 2u);
    EXPECT_NEAR(ws.probability, 1.0 / 3.0, 1e-15);
  }
  for (int i = 0; i < 3; ++i) EXPECT_EQ(s.SVector()(i), 0.5);

  Rng rng(2);
  std::map<ClientSet, int> counts;
  const int draws = 30000;
  for (int t = 0; t < draws; ++t) ++counts[s.Draw(rng)];
  ASSERT_EQ(counts.size(), 3u);
  const double sd = std::sqrt(draws * (1.0 / 3) * (2.0 / 3));
  for (const auto& [set, c] : counts) {
    EXPECT_LE(std::abs(c - draws / 3.0), 4 * sd);
  }
}

TEST(SchemeTest, IndependentInclusionFrequencies) {
  // Draws redraw the empty set, so frequencies follow p / (1 - Pr[empty]).
  SamplingScheme s = SamplingScheme::Independent({0.8, 0.1, 0.1});
  const double nonempty = 1.0 - 0.2 * 0.9 * 0.9;
  Rng rng(3);
  const int draws = 100000;
  std::vector<int> hits(3, 0);
  for (int t = 0; t < draws; ++t) {
    ClientSet c = s.Draw(rng);
    ASSERT_FALSE(c.empty());
    for (int i : c) ++hits[i];
  }
  for (int i = 0; i < 3; ++i) {
    const double p = s.inclusion()(i) / nonempty;
    const double sd = std::sqrt(draws * p * (1 - p));
    EXPECT_LE(std::abs(hits[i] - draws * p), 3 * sd) << "client " << i;
  }
}

TEST(SchemeTest, IndependentSVector) {
  SamplingScheme s = SamplingScheme::Independent({0.5, 0.5});
  EXPECT_EQ(s.SVector(), Vector::Constant(2, 0.5));
  EXPECT_LE(EsoSlack(s, s.SVector()), 1e-10);
}

TEST(SchemeTest, OneClientDrawFrequencies) {
  SamplingScheme s = SamplingScheme::OneClient({0.8, 0.1, 0.1});
  Rng rng(4);
  const int draws = 50000;
  std::vector<int> hits(3, 0);
  for (int t = 0; t < draws; ++t) {
    ClientSet c = s.Draw(rng);
    ASSERT_EQ(c.size(), 1u);
    ++hits[c[0]];
  }
  for (int i = 0; i < 3; ++i) {
    const double p = s.inclusion()(i);
    EXPECT_LE(std::abs(hits[i] - draws * p), 4 * std::sqrt(draws * p * (1 - p)));
  }
}

TEST(SchemeTest, ImproperSchemesAreRejectedAtConstruction) {
  EXPECT_THROW(SamplingScheme::Independent({0.5, 0.0}), std::invalid_argument);
  EXPECT_THROW(SamplingScheme::OneClient({1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(SamplingScheme::Explicit(3, {{{0, 1}, 1.0}}),
               std::invalid_argument);
  EXPECT_THROW(SamplingScheme::Uniform(3, 0), std::invalid_argument);
  EXPECT_THROW(SamplingScheme::Uniform(3, 4), std::invalid_argument);
  EXPECT_THROW(SamplingScheme::Explicit(2, {{{0}, 0.5}, {{1}, 0.4}}),
               std::invalid_argument);
}

TEST(SchemeTest, NonEnumerableSchemeRefusesEnumeration) {
  SamplingScheme s = SamplingScheme::Uniform(13, 3);
  EXPECT_FALSE(s.enumerable());
  EXPECT_THROW(s.Enumerate(), std::invalid_argument);
}

TEST(SchemeProperty, EnumerationAgreesWithClosedForms) {
  Rng rng(5);
  for (int n = 1; n <= 8; ++n) {
    for (const SamplingScheme& s : RandomSchemes(n, rng)) {
      const auto subsets = s.Enumerate();
      double total = 0.0;
      for (const auto& ws : subsets) total += ws.probability;
      EXPECT_NEAR(total, 1.0, 1e-12);
      const Matrix P = PairFromSubsets(n, subsets);
      EXPECT_LE((P - s.pair_inclusion()).cwiseAbs().maxCoeff(), 1e-12)
          << SchemeKindName(s.kind()) << " n=" << n;
      EXPECT_LE((P.diagonal() - s.inclusion()).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_NEAR(s.pair_inclusion().trace(), s.expected_cohort(), 1e-12);
    }
  }
}

TEST(SchemeProperty, SVectorSatisfiesEso) {
  Rng rng(6);
  for (int n = 1; n <= 12; ++n) {
    for (const SamplingScheme& s : RandomSchemes(n, rng)) {
      EXPECT_LE(EsoSlack(s, s.SVector()), 1e-10)
          << SchemeKindName(s.kind()) << " n=" << n;
    }
  }
}

TEST(SchemeProperty, UniformSVectorClosedForm) {
  for (int n = 2; n <= 9; ++n) {
    for (int b = 1; b <= n; ++b) {
      SamplingScheme s = SamplingScheme::Uniform(n, b);
      for (int i = 0; i < n; ++i) {
        EXPECT_NEAR(s.SVector()(i), double(n - b) / (n - 1), 1e-15);
      }
    }
  }
}

TEST(SchemeProperty, GershgorinDominatesRows) {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    const int n = UniformInt(rng, 1, 6);
    Matrix sym(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        sym(i, j) = sym(j, i) = testing::UniformReal(rng, -1.0, 1.0);
      }
    }
    const Vector g = GershgorinDiagonal(sym);
    EXPECT_LE(MaxEigenvalue(sym - Matrix(g.asDiagonal())), 1e-10);
  }
}

TEST(ContributionTest, SumOneBiasOnSizes123) {
  Vector w(3);
  w << 1.0 / 6, 2.0 / 6, 3.0 / 6;
  const Vector b = ExpectedContribution(SamplingScheme::Uniform(3, 2),
                                        AggregationNormalizer::SumOne(w), w);
  EXPECT_NEAR(b(0), 7.0 / 36, 1e-15);
  EXPECT_NEAR(b(1), 16.0 / 45, 1e-15);
  EXPECT_NEAR(b(2), 9.0 / 20, 1e-15);
  EXPECT_NEAR(b.sum(), 1.0, 1e-15);
  EXPECT_GT((b - w).cwiseAbs().maxCoeff(), 0.01);
}

TEST(ContributionTest, UnbiasedRecoversWeights) {
  Rng rng(8);
  for (int n = 1; n <= 7; ++n) {
    const Vector w = RandomSimplex(rng, n);
    for (const SamplingScheme& s : RandomSchemes(n, rng)) {
      const Vector b =
          ExpectedContribution(s, AggregationNormalizer::Unbiased(), w);
      EXPECT_LE((b - w).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(ContributionTest, FullParticipationSumOneRecoversWeights) {
  Vector w(3);
  w << 0.2, 0.3, 0.5;
  const Vector b = ExpectedContribution(SamplingScheme::Full(3),
                                        AggregationNormalizer::SumOne(w), w);
  EXPECT_LE((b - w).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(NormalizerTest, UnbiasedStatsMatchEnumeration) {
  Rng rng(9);
  for (int n = 1; n <= 6; ++n) {
    for (const SamplingScheme& s : RandomSchemes(n, rng)) {
      // The same rule through the generic enumeration path.
      const auto generic = AggregationNormalizer::FromFunction(
          [&s](int i, const ClientSet&) { return s.inclusion()(i); });
      const NormalizerStats closed =
          ComputeNormalizerStats(s, AggregationNormalizer::Unbiased());
      const NormalizerStats enumerated = ComputeNormalizerStats(s, generic);
      EXPECT_LE((closed.q - enumerated.q).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LE((closed.H - enumerated.H).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LE(GeneralEsoSlack(closed), 1e-10);
      EXPECT_LE(GeneralEsoSlack(enumerated), 1e-10);
    }
  }
}

TEST(NormalizerTest, SumOneStatsSatisfyEso) {
  Rng rng(10);
  for (int n = 1; n <= 8; ++n) {
    const Vector w = RandomSimplex(rng, n);
    for (const SamplingScheme& s : RandomSchemes(n, rng)) {
      const NormalizerStats st =
          ComputeNormalizerStats(s, AggregationNormalizer::SumOne(w));
      EXPECT_LE(GeneralEsoSlack(st), 1e-10);
      EXPECT_LE((st.h - st.H.diagonal()).norm(), 0.0);
    }
  }
}

TEST(VarianceTest, FullParticipationHasNoVariance) {
  Rng rng(11);
  auto zeta = RandomVectors(rng, 4, 3);
  VarianceCheck c =
      VarianceBoundCheck(zeta, RandomSimplex(rng, 4), SamplingScheme::Full(4));
  EXPECT_NEAR(c.lhs, 0.0, 1e-15);
  EXPECT_TRUE(c.holds());
  VarianceCheck g = GeneralVarianceCheck(zeta, RandomSimplex(rng, 4),
                                         SamplingScheme::Full(4),
                                         AggregationNormalizer::SumOne(
                                             Vector::Constant(4, 0.25)));
  EXPECT_NEAR(g.lhs, 0.0, 1e-15);
}

TEST(VarianceTest, TwoSingletonsByHand) {
  Vector e1(2), e2(2);
  e1 << 1, 0;
  e2 << 0, 1;
  std::vector<Vector> zeta{e1, e2};
  const Vector w = Vector::Constant(2, 0.5);
  VarianceCheck c = VarianceBoundCheck(zeta, w, SamplingScheme::Uniform(2, 1));
  // Estimator is e1 or e2 with mean (1/2, 1/2): squared error 1/2 either way.
  EXPECT_NEAR(c.lhs, 0.5, 1e-15);
  // s_i = 1, p_i = 1/2: rhs = 2 * (1/4) * 2 * 1.
  EXPECT_NEAR(c.rhs, 1.0, 1e-15);
  EXPECT_TRUE(c.holds());
}

TEST(VarianceTest, BoundHoldsForTwoOfThree) {
  Rng rng(12);
  SamplingScheme s = SamplingScheme::Uniform(3, 2);
  for (int t = 0; t < 100; ++t) {
    auto zeta = RandomVectors(rng, 3, 4);
    EXPECT_TRUE(VarianceBoundCheck(zeta, RandomSimplex(rng, 3), s).holds());
  }
}

TEST(VarianceTest, GeneralCheckReducesToUnbiased) {
  Rng rng(13);
  for (int n = 2; n <= 6; ++n) {
    for (const SamplingScheme& s : RandomSchemes(n, rng)) {
      auto zeta = RandomVectors(rng, n, 3);
      const Vector w = RandomSimplex(rng, n);
      VarianceCheck a = VarianceBoundCheck(zeta, w, s);
      VarianceCheck b =
          GeneralVarianceCheck(zeta, w, s, AggregationNormalizer::Unbiased());
      EXPECT_NEAR(a.lhs, b.lhs, 1e-12);
      EXPECT_NEAR(a.rhs, b.rhs, 1e-12);
    }
  }
}

TEST(VarianceTest, SumOneMeanIsContributionWeighted) {
  Vector w(3);
  w << 1.0 / 6, 2.0 / 6, 3.0 / 6;
  Rng rng(14);
  auto zeta = RandomVectors(rng, 3, 5);
  SamplingScheme s = SamplingScheme::Uniform(3, 2);
  const auto normalizer = AggregationNormalizer::SumOne(w);
  VarianceCheck g = GeneralVarianceCheck(zeta, w, s, normalizer);
  const Vector b = ExpectedContribution(s, normalizer, w);
  Vector oracle = Vector::Zero(5);
  for (int i = 0; i < 3; ++i) oracle += b(i) * zeta[i];
  EXPECT_LE((g.mean - oracle).norm(), 1e-14);
  EXPECT_TRUE(g.holds());
}

TEST(SwrTest, FullSubsetHasNoVariance) {
  Rng rng(15);
  auto zeta = RandomVectors(rng, 5, 3);
  SwrCheck c = SwrVarianceCheck(zeta, 5);
  EXPECT_NEAR(c.empirical, 0.0, 1e-15);
  EXPECT_EQ(c.formula, 0.0);
}

TEST(SwrTest, TwoVectorsOneDraw) {
  Vector a(2), b(2);
  a << 3, 1;
  b << -1, 2;
  const Vector m = (a + b) / 2;
  const double sigma2 = ((a - m).squaredNorm() + (b - m).squaredNorm()) / 2;
  std::vector<Vector> zeta{a, b};
  SwrCheck c = SwrVarianceCheck(zeta, 1);
  EXPECT_NEAR(c.empirical, sigma2, 1e-14);
  EXPECT_NEAR(c.formula, sigma2, 1e-14);
}

TEST(SwrTest, FiveChooseTwo) {
  Rng rng(16);
  auto zeta = RandomVectors(rng, 5, 4);
  SwrCheck c = SwrVarianceCheck(zeta, 2);
  EXPECT_LE(std::abs(c.empirical - c.formula), 1e-10);
}

TEST(SwrTest, RejectsBadSubsetSize) {
  Rng rng(17);
  auto zeta = RandomVectors(rng, 3, 2);
  EXPECT_THROW(SwrVarianceCheck(zeta, 0), std::out_of_range);
  EXPECT_THROW(SwrVarianceCheck(zeta, 4), std::out_of_range);
}

TEST(ImportanceTest, ProbabilitiesFollowWeights) {
  Vector w(3);
  w << 1.0 / 6, 2.0 / 6, 3.0 / 6;
  SamplingScheme s = ImportanceScheme(w, 1.0);
  EXPECT_LE((s.inclusion() - w).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(PartialParticipationConstant(s, w), 5.0 / 6.0, 1e-15);
  const double uniform = PartialParticipationConstant(
      SamplingScheme::Uniform(3, 1), w);
  EXPECT_LE(PartialParticipationConstant(s, w), uniform);
}

TEST(ImportanceTest, UniformWeightsFullCohortIsFullParticipation) {
  SamplingScheme s = ImportanceScheme(Vector::Constant(4, 0.25), 4.0);
  EXPECT_EQ(s.inclusion(), Vector::Ones(4));
  EXPECT_EQ(PartialParticipationConstant(s, Vector::Constant(4, 0.25)), 0.0);
}

TEST(ImportanceTest, RejectsOverfullCohort) {
  Vector w(2);
  w << 0.3, 0.7;
  EXPECT_THROW(ImportanceScheme(w, 2.0), std::invalid_argument);
}

}  // namespace
}  // namespace fedsim
