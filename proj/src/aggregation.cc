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

#include "fedsim/aggregation.h"

#include <utility>

namespace fedsim {

std::string AggregationKindName(AggregationKind kind) {
  switch (kind) {
    case AggregationKind::kUnbiased:
      return "unbiased";
    case AggregationKind::kSumOne:
      return "sum_one";
    case AggregationKind::kGen:
      return "gen";
  }
  return "unknown";
}

AggregationRule AggregationRule::Unbiased(Vector agg_weights) {
  AggregationRule rule;
  rule.kind_ = AggregationKind::kUnbiased;
  rule.agg_weights_ = std::move(agg_weights);
  rule.normalizer_ = AggregationNormalizer::Unbiased();
  return rule;
}

AggregationRule AggregationRule::SumOne(Vector weights,
                                        const SamplingScheme& scheme) {
  if (weights.size() != scheme.num_clients()) {
    throw std::invalid_argument("one weight per client required");
  }
  AggregationRule rule;
  rule.kind_ = AggregationKind::kSumOne;
  rule.agg_weights_ = weights;
  rule.normalizer_ = AggregationNormalizer::SumOne(
      std::move(weights), scheme.expected_cohort() / scheme.num_clients());
  return rule;
}

AggregationRule AggregationRule::Gen(Vector agg_weights,
                                     AggregationNormalizer normalizer) {
  AggregationRule rule;
  rule.kind_ = AggregationKind::kGen;
  rule.agg_weights_ = std::move(agg_weights);
  rule.normalizer_ = std::move(normalizer);
  return rule;
}

double AggregationRule::Coefficient(int client, const ClientSet& sampled,
                                    const SamplingScheme& scheme) const {
  if (agg_weights_.size() != scheme.num_clients()) {
    throw std::invalid_argument("aggregation weights do not match client count");
  }
  return agg_weights_(client) / normalizer_.Value(client, sampled, scheme);
}

Vector Aggregate(const AggregationRule& rule, const ClientSet& sampled,
                 const std::map<int, Vector>& deltas,
                 const SamplingScheme& scheme) {
  if (sampled.empty()) throw ProtocolError("no clients were sampled");
  Vector out;
  for (int i : sampled) {
    const auto it = deltas.find(i);
    if (it == deltas.end()) {
      throw ProtocolError("sampled client " + std::to_string(i) +
                          " sent no update");
    }
    const double coef = rule.Coefficient(i, sampled, scheme);
    if (out.size() == 0) {
      out = coef * it->second;
    } else {
      out += coef * it->second;
    }
  }
  return out;
}

EffectiveObjective EffectiveWeights(const Vector& local_steps,
                                    const Vector& normalizers,
                                    const AggregationRule& rule,
                                    const SamplingScheme& scheme) {
  const int n = scheme.num_clients();
  if (local_steps.size() != n || normalizers.size() != n ||
      rule.agg_weights().size() != n) {
    throw std::invalid_argument("per-client vectors must have n entries");
  }
  EffectiveObjective out;
  out.q = ComputeNormalizerStats(scheme, rule.normalizer()).q;
  out.c = normalizers;
  const Vector raw = rule.agg_weights()
                         .cwiseProduct(local_steps)
                         .cwiseQuotient(out.q.cwiseProduct(normalizers));
  out.W = raw.sum();
  if (!(out.W > 0.0)) {
    throw std::invalid_argument("effective weights have a nonpositive total");
  }
  out.w_hat = raw / out.W;
  return out;
}

Vector PredictedLimit(const QuadraticProblem& problem, const Vector& w_hat) {
  if (w_hat.size() != problem.num_clients()) {
    throw std::invalid_argument("one effective weight per client required");
  }
  Vector out = Vector::Zero(problem.dim());
  for (int i = 0; i < problem.num_clients(); ++i) {
    out += w_hat(i) * problem.ClientAnchorMean(i);
  }
  return out / w_hat.sum();
}

Vector ConsistencyRestoringWeights(const Vector& weights,
                                   const Vector& local_steps,
                                   const Vector& normalizers, const Vector& q) {
  if (local_steps.size() != weights.size() ||
      normalizers.size() != weights.size() || q.size() != weights.size()) {
    throw std::invalid_argument("per-client vectors must have equal length");
  }
  if ((local_steps.array() <= 0.0).any()) {
    throw std::invalid_argument("every client must take at least one step");
  }
  return weights.cwiseProduct(q).cwiseProduct(normalizers).cwiseQuotient(
      local_steps);
}

}  // namespace fedsim
