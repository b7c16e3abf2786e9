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

#ifndef FEDSIM_AGGREGATION_H_
#define FEDSIM_AGGREGATION_H_

#include <map>
#include <stdexcept>
#include <string>

#include "fedsim/problems.h"
#include "fedsim/sampling.h"

namespace fedsim {

// A sampled client did not deliver its update.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AggregationKind { kUnbiased, kSumOne, kGen };

std::string AggregationKindName(AggregationKind kind);

// Server combination Delta = sum_{i in S} (w~_i / q_i^S) Delta_i.
class AggregationRule {
 public:
  // Unbiased rule without weights; assign a real rule before use.
  AggregationRule() = default;

  // q_i^S = p_i.
  static AggregationRule Unbiased(Vector agg_weights);
  // (n / b) w_i / sum_{j in S} w_j with b the expected cohort size.
  static AggregationRule SumOne(Vector weights, const SamplingScheme& scheme);
  static AggregationRule Gen(Vector agg_weights,
                             AggregationNormalizer normalizer);

  AggregationKind kind() const { return kind_; }
  const Vector& agg_weights() const { return agg_weights_; }
  const AggregationNormalizer& normalizer() const { return normalizer_; }

  // w~_i / q_i^S for client i in S.
  double Coefficient(int client, const ClientSet& sampled,
                     const SamplingScheme& scheme) const;

 private:
  AggregationKind kind_ = AggregationKind::kUnbiased;
  Vector agg_weights_;
  AggregationNormalizer normalizer_;
};

// Sums in ascending client order. Throws ProtocolError when a sampled
// client has no delta.
Vector Aggregate(const AggregationRule& rule, const ClientSet& sampled,
                 const std::map<int, Vector>& deltas,
                 const SamplingScheme& scheme);

// Weights of f^ = sum_i w^_i f_i, the objective a configuration actually
// minimizes: w^_i = w~_i K_i / (W q_i c_i) with K_i the local step count
// (E_i |D_i| for full epochs) and W making the weights sum to one.
struct EffectiveObjective {
  Vector w_hat;
  double W = 0.0;
  Vector q;
  Vector c;
};

// q_i is exact: closed form for the unbiased rule, enumeration otherwise.
EffectiveObjective EffectiveWeights(const Vector& local_steps,
                                    const Vector& normalizers,
                                    const AggregationRule& rule,
                                    const SamplingScheme& scheme);

// sum_i w^_i times client i's anchor mean: the stationary point of f^ for
// quadratic problems.
Vector PredictedLimit(const QuadraticProblem& problem, const Vector& w_hat);

// w~_i = w_i q_i c_i / K_i, which makes w^ = w for any step counts K.
Vector ConsistencyRestoringWeights(const Vector& weights,
                                   const Vector& local_steps,
                                   const Vector& normalizers, const Vector& q);

}  // namespace fedsim

#endif  // FEDSIM_AGGREGATION_H_
