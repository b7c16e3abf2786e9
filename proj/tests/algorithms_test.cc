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

#include "fedsim/algorithms.h"

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
using testing::RandomVector;
using testing::UniformInt;
using testing::UniformReal;

std::vector<Vector> Probes(int dim) {
  return {Vector::Zero(dim), Vector::Ones(dim)};
}

void ExpectSameLog(const RunLog& a, const RunLog& b) {
  ASSERT_EQ(a.rounds.size(), b.rounds.size());
  for (size_t r = 0; r < a.rounds.size(); ++r) {
    EXPECT_EQ(a.rounds[r].sampled, b.rounds[r].sampled);
    EXPECT_EQ(a.rounds[r].steps, b.rounds[r].steps);
    EXPECT_EQ(a.rounds[r].f_gap, b.rounds[r].f_gap) << "round " << r;
    EXPECT_EQ(a.rounds[r].grad_norm_sq, b.rounds[r].grad_norm_sq);
  }
  EXPECT_EQ(a.final_iterate, b.final_iterate);
}

// Direct transcription of FedShuffle: reshuffled local epochs with step
// eta / (E_i |D_i|), then x <- x + eta_g sum_{i in S} (w_i / p_i) Delta_i.
Vector ReferenceFedShuffle(const Problem& problem, const SamplingScheme& scheme,
                           int rounds, double eta, double eta_g,
                           const std::vector<int>& epochs, uint64_t seed) {
  Vector x = Vector::Zero(problem.dim());
  for (int r = 0; r < rounds; ++r) {
    Rng rng(DeriveSeed(seed, {static_cast<uint64_t>(StreamTag::kSampling),
                              static_cast<uint64_t>(r)}));
    const ClientSet sampled = scheme.Draw(rng);
    Vector delta;
    for (int i : sampled) {
      const int size = problem.client_size(i);
      const PermutationPlan plan = MakePermutations(seed, r, i, epochs[i], size);
      const double step = eta / (static_cast<double>(epochs[i]) * size);
      Vector y = x;
      for (int e = 0; e < epochs[i]; ++e) {
        for (int j : plan.epochs[e]) y -= step * problem.Gradient(i, j, y);
      }
      const Vector term =
          (problem.weights()(i) / scheme.inclusion()(i)) * Vector(y - x);
      if (delta.size() == 0) {
        delta = term;
      } else {
        delta += term;
      }
    }
    x = x + eta_g * delta;
  }
  return x;
}

TEST(PresetTest, TuplesMatchDefinitions) {
  QuadraticProblem p = MakeQuadObj();
  SamplingScheme s = SamplingScheme::Uniform(3, 2);
  const std::vector<int> epochs{1, 3, 2};
  const Vector w = p.weights();
  Vector work(3);
  work << 1 * 1, 3 * 2, 2 * 3;

  GenConfig shuffle = MakePreset(Preset::kFedShuffle, p, s, 10, {0.1, 0}, 1.0, epochs);
  EXPECT_EQ(shuffle.normalizers, work);
  EXPECT_EQ(shuffle.rule.kind(), AggregationKind::kUnbiased);
  EXPECT_EQ(shuffle.rule.agg_weights(), w);

  GenConfig avg = MakePreset(Preset::kFedAvgRR, p, s, 10, {0.1, 0}, 1.0, epochs);
  EXPECT_EQ(avg.normalizers, Vector::Ones(3));
  EXPECT_EQ(avg.rule.kind(), AggregationKind::kSumOne);
  EXPECT_EQ(avg.fixed_steps, FixedStepRule::kNone);
  EXPECT_EQ(MakePreset(Preset::kFedAvgMin, p, s, 10, {0.1, 0}).fixed_steps,
            FixedStepRule::kMin);
  EXPECT_EQ(MakePreset(Preset::kFedAvgMean, p, s, 10, {0.1, 0}).fixed_steps,
            FixedStepRule::kMean);

  GenConfig nova = MakePreset(Preset::kFedNovaRR, p, s, 10, {0.1, 0}, 1.0, epochs);
  const double tau = w.dot(work);
  EXPECT_EQ(nova.normalizers, Vector::Ones(3));
  EXPECT_EQ(nova.rule.kind(), AggregationKind::kUnbiased);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(nova.rule.agg_weights()(i), w(i) * tau / work(i), 1e-15);
  }

  GenConfig mvr = MakePreset(Preset::kFedShuffleMvr, p, s, 10, {0.1, 0}, 5.0, epochs);
  EXPECT_EQ(mvr.eta_g, 1.0);
  EXPECT_EQ(mvr.momentum.kind, MomentumKind::kMvr);
  EXPECT_EQ(mvr.normalizers, work);
}

TEST(PresetTest, NamesRoundTrip) {
  for (Preset p : AllPresets()) EXPECT_EQ(ParsePreset(PresetName(p)), p);
  EXPECT_THROW(ParsePreset("fedprox"), std::invalid_argument);
}

TEST(PresetTest, NovaSubstitutionGivesTrueWeights) {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const int n = UniformInt(rng, 1, 6);
    QuadraticProblem p = testing::RandomQuadratic(rng, n, 2, 6);
    std::vector<int> epochs(n);
    for (int& e : epochs) e = UniformInt(rng, 1, 5);
    GenConfig c = MakePreset(Preset::kFedNovaRR, p, SamplingScheme::Full(n), 1,
                             {0.1, 0}, 1.0, epochs);
    Vector work(n);
    for (int i = 0; i < n; ++i) work(i) = epochs[i] * p.client_size(i);
    EffectiveObjective eff = EffectiveWeights(work, c.normalizers, c.rule, c.scheme);
    EXPECT_LE((eff.q - Vector::Ones(n)).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_NEAR(eff.W, p.weights().dot(work), 1e-12 * eff.W);
    EXPECT_LE((eff.w_hat - p.weights()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(RunTest, MatchesDirectFedShuffle) {
  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    const int n = UniformInt(rng, 2, 5);
    QuadraticProblem p = testing::RandomQuadratic(rng, n, 3, 5);
    std::vector<SamplingScheme> schemes = RandomSchemes(n, rng);
    const SamplingScheme& s = schemes[rng.Below(schemes.size())];
    std::vector<int> epochs(n);
    for (int& e : epochs) e = UniformInt(rng, 1, 3);
    const double eta = UniformReal(rng, 0.01, 0.2);
    const uint64_t seed = rng.NextU64();
    GenConfig c = MakePreset(Preset::kFedShuffle, p, s, 25, {eta, 0}, 1.0, epochs,
                             {}, seed);
    EXPECT_EQ(fedsim::Run(c, p).final_iterate,
              ReferenceFedShuffle(p, s, 25, eta, 1.0, epochs, seed))
        << SchemeKindName(s.kind());
  }
}

TEST(RunTest, ZeroLocalStepKeepsStart) {
  QuadraticProblem p = MakeQuadObj();
  Vector x0 = Vector::Constant(6, 0.7);
  for (Preset preset : AllPresets()) {
    GenConfig c = MakePreset(preset, p, SamplingScheme::Uniform(3, 2), 5, {0.0, 0});
    c.x0 = x0;
    EXPECT_EQ(fedsim::Run(c, p).final_iterate, x0) << PresetName(preset);
  }
}

TEST(RunTest, ShuffleAndNovaReachMinimizer) {
  QuadraticProblem p = MakeCanonicalDuplicated({1, 2, 3});
  SamplingScheme full = SamplingScheme::Full(3);
  HeterogeneityConstants hc = EstimateConstants(p, Probes(3));
  // The fixed point moves by O(eta_l), so take tiny local steps and a large
  // server step.
  const double eta_g = 1e6;
  for (Preset preset : {Preset::kFedShuffle, Preset::kFedNovaRR}) {
    GenConfig c = MakePreset(preset, p, full, 400, {0.0, 0}, eta_g);
    c.eta_l.initial =
        AdmissibleLocalStep(ComputeGenConstants(hc, p, c), hc.L, eta_g);
    const RunLog log = fedsim::Run(c, p);
    EXPECT_LE((log.final_iterate - TrueMinimizer(p)).norm(), 1e-6)
        << PresetName(preset);
  }
}

TEST(RunTest, FedAvgConvergesToInconsistentPoint) {
  QuadraticProblem p = MakeCanonicalDuplicated({1, 2, 3});
  GenConfig c = MakePreset(Preset::kFedAvgRR, p, SamplingScheme::Full(3), 600,
                           {0.02, 0});
  const Vector x = fedsim::Run(c, p).final_iterate;
  const Vector xt = InconsistentFixedPoint(p);
  const Vector xs = TrueMinimizer(p);
  // Finite steps move the limit by O(eta); it stays far from x*.
  EXPECT_LE((x - xt).norm(), 0.05 * (xt - xs).norm());
  EXPECT_GE((x - xs).norm(), 0.5 * (xt - xs).norm());
}

TEST(RunTest, DivergenceIsReported) {
  QuadraticProblem p = MakeQuadObj();
  GenConfig c = MakePreset(Preset::kFedAvgRR, p, SamplingScheme::Full(3), 500,
                           {5.0, 0});
  EXPECT_THROW(fedsim::Run(c, p), DivergenceError);
}

TEST(RunTest, ParallelClientsAreBitwiseIdentical) {
  QuadraticProblem p = MakeQuadObj();
  for (Preset preset : AllPresets()) {
    GenConfig c = MakePreset(preset, p, SamplingScheme::Uniform(3, 2), 50,
                             {0.1, 20}, 1.0, {2, 1, 3}, {}, 77);
    if (preset == Preset::kFedShuffleMvr) c.momentum.a = 0.3;
    const RunLog serial = fedsim::Run(c, p);
    c.client_threads = 3;
    ExpectSameLog(serial, fedsim::Run(c, p));
    ExpectSameLog(serial, fedsim::Run(c, p));
  }
}

TEST(RunTest, LogRowsAreOrdered) {
  QuadraticProblem p = MakeQuadObj();
  GenConfig c = MakePreset(Preset::kFedShuffle, p, SamplingScheme::Uniform(3, 2),
                           30, {0.1, 0});
  const RunLog log = fedsim::Run(c, p);
  ASSERT_EQ(log.rounds.size(), 30u);
  for (int r = 0; r < 30; ++r) {
    EXPECT_EQ(log.rounds[r].round, r + 1);
    EXPECT_EQ(log.rounds[r].sampled.size(), 2u);
    EXPECT_GE(log.rounds[r].f_gap, 0.0);
  }
  EXPECT_FALSE(log.outside_theory);
}

TEST(RunTest, LogisticRunHasNoDistance) {
  LogisticProblem p = LogisticProblem::Synthetic(4, {5, 3}, 3);
  GenConfig c = MakePreset(Preset::kFedShuffle, p, SamplingScheme::Full(2), 3,
                           {0.1, 0});
  const RunLog log = fedsim::Run(c, p);
  EXPECT_TRUE(std::isnan(log.rounds.back().dist_sq));
  EXPECT_TRUE(std::isnan(log.rounds.back().f_gap));
  EXPECT_GT(log.rounds.back().grad_norm_sq, 0.0);
}

TEST(FixedStepTest, CountsForSizes123) {
  QuadraticProblem p = MakeCanonicalDuplicated({1, 2, 3});
  const std::vector<int> epochs{1, 1, 1};
  EXPECT_EQ(FixedStepCount(p, epochs, {0, 1, 2}, FixedStepRule::kMin), 1);
  EXPECT_EQ(FixedStepCount(p, epochs, {0, 1, 2}, FixedStepRule::kMean), 2);
  // Mean 2.5 rounds up.
  EXPECT_EQ(FixedStepCount(p, epochs, {1, 2}, FixedStepRule::kMean), 3);
  EXPECT_THROW(FixedStepCount(p, epochs, {}, FixedStepRule::kMin),
               std::invalid_argument);
}

TEST(FixedStepTest, EqualSizesMatchFedAvg) {
  QuadraticProblem p = MakeCanonicalDuplicated({3, 3, 3});
  GenConfig c = MakePreset(Preset::kFedAvgRR, p, SamplingScheme::Uniform(3, 2), 40,
                           {0.05, 0}, 1.0, {}, {}, 5);
  const RunLog base = fedsim::Run(c, p);
  ExpectSameLog(base, RunFixedSteps(c, p, FixedStepRule::kMin));
  ExpectSameLog(base, RunFixedSteps(c, p, FixedStepRule::kMean));
}

TEST(FixedStepTest, MinStepsRemoveInconsistency) {
  QuadraticProblem p = MakeCanonicalDuplicated({1, 2, 3});
  GenConfig c = MakePreset(Preset::kFedAvgMin, p, SamplingScheme::Full(3), 400,
                           {0.1, 0});
  EXPECT_LE((fedsim::Run(c, p).final_iterate - TrueMinimizer(p)).norm(), 1e-6);
}

TEST(FixedStepTest, RejectsMvr) {
  QuadraticProblem p = MakeQuadObj();
  GenConfig c = MakePreset(Preset::kFedAvgMin, p, SamplingScheme::Full(3), 4,
                           {0.1, 0});
  c.momentum.kind = MomentumKind::kMvr;
  EXPECT_THROW(fedsim::Run(c, p), std::invalid_argument);
  EXPECT_THROW(RunFixedSteps(c, p, FixedStepRule::kNone), std::invalid_argument);
}

TEST(MvrTest, UnitWeightReducesToFedShuffle) {
  QuadraticProblem p = MakeQuadObj();
  for (const SamplingScheme& s :
       {SamplingScheme::OneClient({0.2, 0.3, 0.5}), SamplingScheme::Full(3)}) {
    GenConfig mvr = MakePreset(Preset::kFedShuffleMvr, p, s, 40, {0.2, 0}, 1.0,
                               {1, 2, 1}, {}, 3);
    mvr.momentum.a = 1.0;
    GenConfig plain = MakePreset(Preset::kFedShuffle, p, s, 40, {0.2, 0}, 1.0,
                                 {1, 2, 1}, {}, 3);
    ExpectSameLog(fedsim::Run(mvr, p), fedsim::Run(plain, p));
  }
}

TEST(MvrTest, MultiClientRunsAreFlagged) {
  QuadraticProblem p = MakeQuadObj();
  GenConfig c = MakePreset(Preset::kFedShuffleMvr, p, SamplingScheme::Uniform(3, 2),
                           3, {0.1, 0});
  EXPECT_TRUE(fedsim::Run(c, p).outside_theory);
  c.scheme = SamplingScheme::OneClient({0.2, 0.3, 0.5});
  EXPECT_FALSE(fedsim::Run(c, p).outside_theory);
}

TEST(MvrTest, MomentumUpdateWithUnitWeight) {
  QuadraticProblem p = MakeQuadObj();
  SamplingScheme s = SamplingScheme::Uniform(3, 2);
  Rng rng(5);
  MomentumState st{RandomVector(rng, 6), 1.0, true};
  const Vector x = RandomVector(rng, 6);
  const Vector x_prev = RandomVector(rng, 6);
  const MomentumState next = MvrMomentumUpdate(st, {0, 2}, p, x, x_prev, s);
  EXPECT_EQ(next.m, SampledGradient(p, {0, 2}, s, x));
}

TEST(MvrTest, MomentumUpdateAtFixedPoint) {
  QuadraticProblem p = MakeQuadObj();
  SamplingScheme s = SamplingScheme::Uniform(3, 2);
  Rng rng(6);
  const double a = 0.3;
  MomentumState st{RandomVector(rng, 6), a, true};
  const Vector x = RandomVector(rng, 6);
  const MomentumState next = MvrMomentumUpdate(st, {1, 2}, p, x, x, s);
  const Vector oracle = a * SampledGradient(p, {1, 2}, s, x) + (1 - a) * st.m;
  EXPECT_LE((next.m - oracle).norm(), 1e-15);
}

TEST(MvrTest, MomentumUpdateExpectation) {
  QuadraticProblem p = MakeQuadObj();
  Rng rng(7);
  const double a = 0.4;
  MomentumState st{RandomVector(rng, 6), a, true};
  const Vector x = RandomVector(rng, 6);
  const Vector x_prev = RandomVector(rng, 6);
  const Vector g = p.FullGradient(x);
  const Vector oracle =
      a * g + (1 - a) * (st.m + g - p.FullGradient(x_prev));
  for (const SamplingScheme& s :
       {SamplingScheme::Full(3), SamplingScheme::Uniform(3, 2),
        SamplingScheme::OneClient({0.5, 0.25, 0.25})}) {
    Vector mean = Vector::Zero(6);
    for (const auto& ws : s.Enumerate()) {
      mean += ws.probability *
              MvrMomentumUpdate(st, ws.clients, p, x, x_prev, s).m;
    }
    EXPECT_LE((mean - oracle).norm(), 1e-14) << SchemeKindName(s.kind());
  }
}

TEST(MvrTest, UpdateBeforeInitIsStateError) {
  QuadraticProblem p = MakeQuadObj();
  MomentumState st;
  const Vector x = Vector::Zero(6);
  EXPECT_THROW(MvrMomentumUpdate(st, {0}, p, x, x, SamplingScheme::Full(3)),
               StateError);
}

TEST(MvrTest, InitWithOneClientIsItsGradient) {
  QuadraticProblem p = QuadraticProblem::Duplicated({Vector::Ones(2)}, {3});
  const Vector x0 = Vector::Constant(2, -1.0);
  EXPECT_EQ(MvrInit(p, SamplingScheme::Full(1), 1, 0, x0, 0.5).m,
            p.ClientGradient(0, x0));
  EXPECT_LE((MvrInit(p, SamplingScheme::Full(1), 50, 0, x0, 0.5).m -
             p.ClientGradient(0, x0)).norm(),
            1e-13);
}

TEST(MvrTest, InitIsUnbiasedMonteCarlo) {
  QuadraticProblem p = MakeQuadObj();
  SamplingScheme s = SamplingScheme::OneClient({1.0 / 6, 2.0 / 6, 3.0 / 6});
  const Vector x0 = Vector::Constant(6, 0.4);
  const int draws = 100000;
  const Vector m = MvrInit(p, s, draws, 11, x0, 0.5).m;
  // One draw returns grad f_i(x0) with probability w_i.
  const Vector mean = p.FullGradient(x0);
  Vector var = Vector::Zero(6);
  for (int i = 0; i < 3; ++i) {
    var += p.weights()(i) *
           (p.ClientGradient(i, x0) - mean).cwiseAbs2();
  }
  for (int k = 0; k < 6; ++k) {
    EXPECT_LE(std::abs(m(k) - mean(k)), 3.0 * std::sqrt(var(k) / draws));
  }
}

TEST(PracticalEstimateTest, SingleStepIsSampleGradient) {
  QuadraticProblem p = QuadraticProblem::Duplicated({Vector::Ones(3)}, {1});
  const Vector x = Vector::Constant(3, 0.25);
  const double eta = 0.125;
  LocalWorkSpec spec;
  spec.step = eta;
  const LocalResult r = RunLocal(p, 0, x, spec, MakePermutations(0, 0, 0, 1, 1));
  EXPECT_LE((PracticalGradientEstimate(r.delta, 1, eta) - p.Gradient(0, 0, x)).norm(),
            1e-14);
}

TEST(PracticalEstimateTest, ErrorVanishesLinearlyInStep) {
  QuadraticProblem p = MakeQuadObj();
  const Vector x = Vector::Constant(6, 0.9);
  const Vector g = p.ClientGradient(2, x);
  const PermutationPlan plan = MakePermutations(1, 0, 2, 2, 3);
  double errors[2];
  for (int k = 0; k < 2; ++k) {
    LocalWorkSpec spec;
    spec.epochs = 2;
    spec.normalizer = 6.0;
    spec.step = 0.1 / (1 << k);
    const LocalResult r = RunLocal(p, 2, x, spec, plan);
    errors[k] = (PracticalGradientEstimate(r.delta, 6, spec.step / 6.0) - g).norm();
  }
  EXPECT_GT(errors[0], 0.0);
  EXPECT_NEAR(errors[0] / errors[1], 2.0, 0.05);
}

TEST(PracticalEstimateTest, DuplicatedEstimateIsPathAverage) {
  QuadraticProblem p = MakeCanonicalDuplicated({1, 4});
  const Vector x = Vector::Constant(2, 2.0);
  const double client_step = 0.05;
  Vector y = x;
  Vector sum = Vector::Zero(2);
  for (int k = 0; k < 4; ++k) {
    const Vector g = p.Gradient(1, 0, y);
    sum += g;
    y -= client_step * g;
  }
  EXPECT_LE((PracticalGradientEstimate(y - x, 4, client_step) - sum / 4).norm(),
            1e-13);
  EXPECT_THROW(PracticalGradientEstimate(y - x, 4, 0.0), std::invalid_argument);
}

TEST(Theorem2Test, WorkedValues) {
  const Theorem2Params t = Theorem2Hyperparams(1.0, 1.0, 1.0, 1, 1);
  EXPECT_EQ(t.eta_l, 0.025);
  EXPECT_EQ(t.a, 1.0);
}

TEST(Theorem2Test, LongHorizonUsesSimilarityArm) {
  const Theorem2Params t = Theorem2Hyperparams(2.0, 1.0, 1.0, 1000000000, 2);
  EXPECT_DOUBLE_EQ(t.a, 1152.0 * 4.0 * 4.0 * t.eta_l * t.eta_l);
  EXPECT_FALSE(t.clamped);
}

TEST(Theorem2Test, StepDecreasesWithSimilarity) {
  double last = std::numeric_limits<double>::infinity();
  for (double delta = 0.1; delta < 100.0; delta *= 1.7) {
    const double eta = Theorem2Hyperparams(delta, 3.0, 2.0, 50, 2).eta_l;
    EXPECT_LE(eta, last);
    last = eta;
  }
}

TEST(Theorem2Test, NoiselessCaseUsesSimilarityArm) {
  // eta_l = 1/40, so a = 1152 / 1600 and no clamping is needed.
  const Theorem2Params t = Theorem2Hyperparams(1.0, 0.0, 1.0, 10, 1);
  EXPECT_EQ(t.eta_l, 0.025);
  EXPECT_NEAR(t.a, 0.72, 1e-15);
  EXPECT_FALSE(t.clamped);
}

TEST(Theorem2Test, RejectsNonPositiveSimilarity) {
  EXPECT_THROW(Theorem2Hyperparams(0.0, 1.0, 1.0, 1, 1), std::invalid_argument);
  EXPECT_THROW(Theorem2Hyperparams(-1.0, 1.0, 1.0, 1, 1), std::invalid_argument);
}

TEST(Theorem1Test, FullParticipationBound) {
  Theorem1Constants k;
  k.L = 2.0;
  EXPECT_EQ(k.beta(), 2.0);
  EXPECT_EQ(Theorem1MaxStep(k, 1.0, 1), 1.0 / 16.0);
  EXPECT_DOUBLE_EQ(Theorem1MaxStep(k, 4.0, 1), Theorem1MaxStep(k, 1.0, 1) / 4.0);
  k.M = 0.5;
  EXPECT_LT(Theorem1MaxStep(k, 1.0, 1), 1.0 / 16.0);
}

TEST(Theorem1Test, ConstantsFromProblem) {
  QuadraticProblem p = MakeCanonicalDuplicated({1, 2, 3});
  HeterogeneityConstants hc = EstimateConstants(p, Probes(3));
  Theorem1Constants k = ComputeTheorem1Constants(hc, p, SamplingScheme::Full(3));
  EXPECT_EQ(k.M, 0.0);
  EXPECT_EQ(k.P, 0.0);
  EXPECT_EQ(k.beta(), 2.0);
  Theorem1Constants u = ComputeTheorem1Constants(hc, p, SamplingScheme::Uniform(3, 2));
  EXPECT_NEAR(u.M, 0.5 * 0.5 / (2.0 / 3.0), 1e-15);
}

TEST(GenConstantsTest, ShuffleAllowsLargerClientSteps) {
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    const int n = UniformInt(rng, 2, 5);
    std::vector<int> sizes = testing::RandomSizes(rng, n, 8);
    sizes[0] = 1;
    sizes[1] = 9;  // unequal sizes
    QuadraticProblem p = MakeCanonicalDuplicated(sizes);
    HeterogeneityConstants hc = EstimateConstants(p, Probes(n));
    std::vector<SamplingScheme> schemes = RandomSchemes(n, rng);
    const SamplingScheme& s = schemes[rng.Below(schemes.size())];
    GenConfig shuffle = MakePreset(Preset::kFedShuffle, p, s, 1, {0, 0});
    GenConfig nova = MakePreset(Preset::kFedNovaRR, p, s, 1, {0, 0});
    const Vector a = ClientStepSizes(
        shuffle, AdmissibleLocalStep(ComputeGenConstants(hc, p, shuffle), hc.L, 1.0));
    const Vector b = ClientStepSizes(
        nova, AdmissibleLocalStep(ComputeGenConstants(hc, p, nova), hc.L, 1.0));
    EXPECT_TRUE((a.array() >= b.array() * (1 - 1e-12)).all());
    EXPECT_GT((a - b).maxCoeff(), 0.0);
  }
}

TEST(GenConstantsTest, BetaAtLeastOne) {
  QuadraticProblem p = MakeQuadObj();
  HeterogeneityConstants hc = EstimateConstants(p, Probes(6));
  for (Preset preset : AllPresets()) {
    GenConfig c = MakePreset(preset, p, SamplingScheme::Uniform(3, 2), 1, {0, 0});
    EXPECT_GE(ComputeGenConstants(hc, p, c).beta, 1.0);
  }
}

TEST(OutputTest, NoContractionGivesUniformWeights) {
  const std::vector<double> v = OutputWeights(5, 0.0, 0.3);
  for (double x : v) EXPECT_DOUBLE_EQ(x, 0.2);
}

TEST(OutputTest, SingleIterate) {
  std::vector<Vector> iterates{Vector::Constant(2, 3.0)};
  EXPECT_EQ(SelectOutput(iterates, 1.0, 0.5, 9), iterates[0]);
  EXPECT_THROW(SelectOutput({}, 1.0, 0.5, 9), std::invalid_argument);
}

TEST(OutputTest, SelectionFrequenciesFollowWeights) {
  const int R = 6;
  const std::vector<double> v = OutputWeights(R, 2.0, 0.5);  // base 1/2
  EXPECT_NEAR(v[R - 1] / v[R - 2], 2.0, 1e-15);
  Rng rng(10);
  std::vector<int> hits(R, 0);
  const int draws = 100000;
  for (int t = 0; t < draws; ++t) ++hits[SelectOutputIndex(R, 2.0, 0.5, rng)];
  for (int r = 0; r < R; ++r) {
    const double sd = std::sqrt(draws * v[r] * (1 - v[r]));
    EXPECT_LE(std::abs(hits[r] - draws * v[r]), 4 * sd + 1) << r;
  }
}

TEST(OutputTest, RejectsNonContractiveBase) {
  EXPECT_THROW(OutputWeights(3, 4.0, 1.0), std::invalid_argument);
  EXPECT_THROW(OutputWeights(0, 0.0, 1.0), std::invalid_argument);
}

TEST(GlobalMomentumTest, ZeroCoefficientExactGradientIsSgd) {
  // With coeff 0 the buffer is the sampled gradient.
  QuadraticProblem p = MakeQuadObj();
  GenConfig c = MakePreset(Preset::kFedShuffle, p, SamplingScheme::Full(3), 1,
                           {0.1, 0});
  c.momentum.kind = MomentumKind::kGlobal;
  c.momentum.coeff = 0.0;
  c.x0 = Vector::Constant(6, 0.5);
  const Vector x = fedsim::Run(c, p).final_iterate;
  // W = sum_i w_i K_i / c_i = 1 for FedShuffle.
  EXPECT_LE((x - (c.x0 - 0.1 * p.FullGradient(c.x0))).norm(), 1e-15);
}

TEST(GlobalMomentumTest, PracticalMomentumConverges) {
  QuadraticProblem p = MakeQuadObj();
  GenConfig c = MakePreset(Preset::kFedShuffle, p, SamplingScheme::Full(3), 800,
                           {0.2, 0});
  c.momentum.kind = MomentumKind::kGlobal;
  c.momentum.practical = true;
  EXPECT_LT(fedsim::Run(c, p).rounds.back().f_gap, 1e-3);
}

}  // namespace
}  // namespace fedsim
