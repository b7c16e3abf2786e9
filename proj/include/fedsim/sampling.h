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

#ifndef FEDSIM_SAMPLING_H_
#define FEDSIM_SAMPLING_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fedsim/problems.h"
#include "fedsim/rng.h"

namespace fedsim {

// Sorted, duplicate-free list of client ids.
using ClientSet = std::vector<int>;

struct WeightedSubset {
  ClientSet clients;
  double probability = 0.0;
};

enum class SchemeKind { kFull, kUniform, kIndependent, kOneClient, kExplicit };

std::string SchemeKindName(SchemeKind kind);

// Enumeration oracles are exact only for small populations.
inline constexpr int kMaxEnumerableClients = 12;

// A fixed client-participation distribution over subsets of [n]. Immutable;
// every constructed scheme is proper (all inclusion probabilities positive).
class SamplingScheme {
 public:
  static SamplingScheme Full(int n);
  // b clients uniformly without replacement.
  static SamplingScheme Uniform(int n, int b);
  // Client i included independently with probability p[i].
  static SamplingScheme Independent(std::vector<double> p);
  // Exactly one client, drawn with probabilities pi.
  static SamplingScheme OneClient(std::vector<double> pi);
  // Nonempty subsets with their probabilities (summing to one).
  static SamplingScheme Explicit(int n, std::vector<WeightedSubset> subsets);

  SchemeKind kind() const { return kind_; }
  int num_clients() const { return n_; }
  // Cohort size of the uniform scheme; 0 for the others.
  int uniform_cohort() const { return b_; }

  // p_i = Pr[i in S].
  const Vector& inclusion() const { return p_; }
  // P_ij = Pr[{i, j} in S], closed form where available.
  const Matrix& pair_inclusion() const { return P_; }
  // b = E|S| = trace(P).
  double expected_cohort() const { return p_.sum(); }

  // s with P - pp^T <= Diag(p o s). Closed form for full, uniform and
  // independent schemes; otherwise the row-wise Gershgorin diagonal.
  Vector SVector() const;

  // Draws a nonempty subset. Independent sampling redraws on the empty set.
  ClientSet Draw(Rng& rng) const;

  bool enumerable() const {
    return kind_ == SchemeKind::kExplicit || n_ <= kMaxEnumerableClients;
  }
  // Every subset with positive probability. The unconditioned distribution
  // (independent sampling includes the empty set).
  std::vector<WeightedSubset> Enumerate() const;

 private:
  SamplingScheme(SchemeKind kind, int n) : kind_(kind), n_(n) {}
  void CheckProper() const;

  SchemeKind kind_;
  int n_;
  int b_ = 0;
  Vector p_;
  Matrix P_;
  std::vector<WeightedSubset> subsets_;  // explicit only
};

// Largest eigenvalue of a symmetric matrix.
double MaxEigenvalue(const Matrix& symmetric);

// max eig(P - pp^T - Diag(p o s)); <= 0 certifies s.
double EsoSlack(const SamplingScheme& scheme, const Vector& s);

// P_ij computed by summing over Enumerate().
Matrix EnumeratedPairInclusion(const SamplingScheme& scheme);

// Row-wise Gershgorin diagonal d with A <= Diag(d): d_i = A_ii + sum_{j!=i}
// |A_ij|, floored at zero.
Vector GershgorinDiagonal(const Matrix& symmetric);

enum class NormalizerRule { kUnbiased, kSumOne, kCustom };

// The server-side normalizer q_i^S dividing client i's weight when S is
// drawn.
class AggregationNormalizer {
 public:
  using Custom = std::function<double(int client, const ClientSet& sampled)>;

  // q_i^S = p_i.
  static AggregationNormalizer Unbiased();
  // q_i^S = scale * sum_{j in S} w_j.
  static AggregationNormalizer SumOne(Vector weights, double scale = 1.0);
  static AggregationNormalizer FromFunction(Custom fn);

  NormalizerRule rule() const { return rule_; }
  double scale() const { return scale_; }
  double Value(int client, const ClientSet& sampled,
               const SamplingScheme& scheme) const;

 private:
  NormalizerRule rule_ = NormalizerRule::kUnbiased;
  Vector weights_;
  double scale_ = 1.0;
  Custom custom_;
};

// Enumerated quantities of a normalizer under a scheme.
struct NormalizerStats {
  Vector q;  // 1/q_i = E[1_{i in S} / q_i^S]
  Matrix H;  // H_ij = E[q_i q_j / (q_i^S q_j^S) 1_{i,j in S}]
  Vector h;  // diag(H)
  Vector s;  // H - 11^T <= Diag(h o s)
};

NormalizerStats ComputeNormalizerStats(const SamplingScheme& scheme,
                                       const AggregationNormalizer& normalizer);

// max eig(H - 11^T - Diag(h o s)).
double GeneralEsoSlack(const NormalizerStats& stats);

// E[(w_i / q_i^S) 1_{i in S}] per client, by exact enumeration.
Vector ExpectedContribution(const SamplingScheme& scheme,
                            const AggregationNormalizer& normalizer,
                            const Vector& weights);

struct VarianceCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  Vector mean;  // exact mean of the estimator
  bool holds(double slack = 1e-10) const { return lhs <= rhs + slack; }
};

// lhs = E||sum_{i in S} w_i zeta_i / p_i - sum_i w_i zeta_i||^2,
// rhs = sum_i w_i^2 (s_i / p_i) ||zeta_i||^2.
VarianceCheck VarianceBoundCheck(std::span<const Vector> zeta,
                                 const Vector& weights,
                                 const SamplingScheme& scheme);

// lhs = E||sum_{i in S} w_i zeta_i / q_i^S - sum_i (w_i / q_i) zeta_i||^2,
// rhs = sum_i h_i s_i ||w_i zeta_i / q_i||^2.
VarianceCheck GeneralVarianceCheck(std::span<const Vector> zeta,
                                   const Vector& weights,
                                   const SamplingScheme& scheme,
                                   const AggregationNormalizer& normalizer);

struct SwrCheck {
  double empirical = 0.0;
  double formula = 0.0;
};

// Mean of k vectors drawn without replacement: exact E||mean_k - mean||^2
// over all k-subsets against (n - k) / (k (n - 1)) sigma^2.
SwrCheck SwrVarianceCheck(std::span<const Vector> zeta, int k);

// Independent sampling with p_i = b w_i.
SamplingScheme ImportanceScheme(const Vector& weights, double expected_cohort);

// M = max_i s_i w_i / p_i.
double PartialParticipationConstant(const SamplingScheme& scheme,
                                    const Vector& weights);

}  // namespace fedsim

#endif  // FEDSIM_SAMPLING_H_
