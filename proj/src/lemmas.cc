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

#include "fedsim/lemmas.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fedsim {
namespace {

constexpr double kSlack = 1e-10;

double Gaussian(Rng& rng) {
  const double u1 = 1.0 - rng.Uniform();
  const double u2 = rng.Uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<Vector> RandomVectors(int n, int dim, Rng& rng) {
  std::vector<Vector> out;
  for (int i = 0; i < n; ++i) {
    Vector v(dim);
    for (int k = 0; k < dim; ++k) v(k) = Gaussian(rng);
    out.push_back(v);
  }
  return out;
}

Vector RandomSimplex(int n, Rng& rng) {
  Vector w(n);
  for (int i = 0; i < n; ++i) w(i) = 0.05 + rng.Uniform();
  return w / w.sum();
}

void Record(LemmaReport& r, double margin, double tolerance = kSlack) {
  ++r.cases;
  r.worst = r.cases == 1 ? margin : std::max(r.worst, margin);
  if (!(margin <= tolerance)) r.pass = false;
}

}  // namespace

std::vector<SamplingScheme> RandomSchemes(int n, Rng& rng) {
  std::vector<SamplingScheme> out;
  out.push_back(SamplingScheme::Full(n));
  for (int b = 1; b <= n; ++b) out.push_back(SamplingScheme::Uniform(n, b));
  std::vector<double> p(static_cast<size_t>(n));
  for (double& x : p) x = 0.05 + 0.95 * rng.Uniform();
  out.push_back(SamplingScheme::Independent(p));
  const Vector pi = RandomSimplex(n, rng);
  out.push_back(SamplingScheme::OneClient(
      std::vector<double>(pi.data(), pi.data() + n)));
  // The full set plus a few random nonempty subsets.
  std::vector<WeightedSubset> subsets;
  ClientSet all(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) all[i] = i;
  subsets.push_back({all, 0.0});
  for (int t = 0; t < 3 && n > 1; ++t) {
    ClientSet s;
    for (int i = 0; i < n; ++i) {
      if (rng.Bernoulli(0.5)) s.push_back(i);
    }
    if (s.empty() || s.size() == all.size()) continue;
    if (std::any_of(subsets.begin(), subsets.end(),
                    [&](const WeightedSubset& w) { return w.clients == s; })) {
      continue;
    }
    subsets.push_back({s, 0.0});
  }
  const Vector probs = RandomSimplex(static_cast<int>(subsets.size()), rng);
  double acc = 0.0;
  for (size_t t = 0; t + 1 < subsets.size(); ++t) {
    subsets[t].probability = probs(static_cast<Eigen::Index>(t));
    acc += subsets[t].probability;
  }
  subsets.back().probability = 1.0 - acc;
  out.push_back(SamplingScheme::Explicit(n, std::move(subsets)));
  return out;
}

std::vector<LemmaReport> CheckLemmas(int n, int trials, uint64_t seed) {
  if (n < 1 || n > kMaxEnumerableClients) {
    throw std::invalid_argument("n must lie in [1, " +
                                std::to_string(kMaxEnumerableClients) + "]");
  }
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  Rng rng(DeriveSeed(seed, {0x6c656d6d61ULL}));
  LemmaReport var{"var_arbitrary"};
  LemmaReport swr{"sampling_wo_replacement"};
  LemmaReport gen{"general_bound"};
  LemmaReport mean{"unbiased_mean"};
  constexpr int kDim = 3;

  for (int t = 0; t < trials; ++t) {
    const std::vector<SamplingScheme> schemes = RandomSchemes(n, rng);
    for (const auto& scheme : schemes) {
      Record(var, EsoSlack(scheme, scheme.SVector()));
      const Vector w = RandomSimplex(n, rng);
      const std::vector<Vector> zeta = RandomVectors(n, kDim, rng);

      const VarianceCheck v = VarianceBoundCheck(zeta, w, scheme);
      Record(var, v.lhs - v.rhs);
      Vector target = Vector::Zero(kDim);
      for (int i = 0; i < n; ++i) target += w(i) * zeta[i];
      Record(mean, (v.mean - target).lpNorm<Eigen::Infinity>(), 1e-12);

      for (const auto& q : {AggregationNormalizer::Unbiased(),
                            AggregationNormalizer::SumOne(w)}) {
        Record(gen, GeneralEsoSlack(ComputeNormalizerStats(scheme, q)));
        const VarianceCheck g = GeneralVarianceCheck(zeta, w, scheme, q);
        Record(gen, g.lhs - g.rhs);
      }
    }
    const std::vector<Vector> zeta = RandomVectors(n, kDim, rng);
    for (int k = 1; k <= n; ++k) {
      const SwrCheck s = SwrVarianceCheck(zeta, k);
      Record(swr, std::abs(s.empirical - s.formula));
    }
  }
  return {var, swr, gen, mean};
}

}  // namespace fedsim
