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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

#include <Eigen/Eigenvalues>

namespace fedsim {
namespace {

// Calls fn(subset) for every k-subset of [n] in lexicographic order.
template <typename Fn>
void ForEachCombination(int n, int k, Fn&& fn) {
  if (k < 0 || k > n) return;
  ClientSet idx(static_cast<size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    fn(static_cast<const ClientSet&>(idx));
    int pos = k - 1;
    while (pos >= 0 && idx[pos] == n - k + pos) --pos;
    if (pos < 0) return;
    ++idx[pos];
    for (int t = pos + 1; t < k; ++t) idx[t] = idx[t - 1] + 1;
  }
}

double BinomialCoefficient(int n, int k) {
  double c = 1.0;
  for (int t = 1; t <= k; ++t) c = c * (n - k + t) / t;
  return c;
}

Vector ToVector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void RequireEnumerable(const SamplingScheme& scheme) {
  if (!scheme.enumerable()) {
    throw std::invalid_argument(
        "exact enumeration is limited to " +
        std::to_string(kMaxEnumerableClients) + " clients, scheme has " +
        std::to_string(scheme.num_clients()));
  }
}

void CheckVectors(std::span<const Vector> zeta, const Vector& weights,
                  const SamplingScheme& scheme) {
  if (static_cast<int>(zeta.size()) != scheme.num_clients() ||
      weights.size() != scheme.num_clients()) {
    throw std::invalid_argument("one vector and one weight per client required");
  }
  for (const auto& z : zeta) {
    if (z.size() != zeta.front().size()) {
      throw std::invalid_argument("vectors must share one dimension");
    }
  }
}

}  // namespace

std::string SchemeKindName(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::kFull:
      return "full";
    case SchemeKind::kUniform:
      return "uniform_b";
    case SchemeKind::kIndependent:
      return "independent";
    case SchemeKind::kOneClient:
      return "one_client";
    case SchemeKind::kExplicit:
      return "explicit";
  }
  return "unknown";
}

SamplingScheme SamplingScheme::Full(int n) {
  if (n <= 0) throw std::invalid_argument("need at least one client");
  SamplingScheme s(SchemeKind::kFull, n);
  s.b_ = n;
  s.p_ = Vector::Ones(n);
  s.P_ = Matrix::Ones(n, n);
  return s;
}

SamplingScheme SamplingScheme::Uniform(int n, int b) {
  if (n <= 0) throw std::invalid_argument("need at least one client");
  if (b < 1 || b > n) {
    throw std::invalid_argument("uniform cohort must lie in [1, n], got " +
                                std::to_string(b));
  }
  SamplingScheme s(SchemeKind::kUniform, n);
  s.b_ = b;
  const double pi = static_cast<double>(b) / n;
  const double pij =
      n > 1 ? static_cast<double>(b) * (b - 1) / (static_cast<double>(n) * (n - 1))
            : 1.0;
  s.p_ = Vector::Constant(n, pi);
  s.P_ = Matrix::Constant(n, n, pij);
  s.P_.diagonal().setConstant(pi);
  return s;
}

SamplingScheme SamplingScheme::Independent(std::vector<double> p) {
  const int n = static_cast<int>(p.size());
  if (n == 0) throw std::invalid_argument("need at least one client");
  SamplingScheme s(SchemeKind::kIndependent, n);
  s.p_ = ToVector(p);
  if ((s.p_.array() > 1.0).any()) {
    throw std::invalid_argument("inclusion probabilities must not exceed 1");
  }
  s.CheckProper();
  s.P_ = s.p_ * s.p_.transpose();
  s.P_.diagonal() = s.p_;
  return s;
}

SamplingScheme SamplingScheme::OneClient(std::vector<double> pi) {
  const int n = static_cast<int>(pi.size());
  if (n == 0) throw std::invalid_argument("need at least one client");
  SamplingScheme s(SchemeKind::kOneClient, n);
  s.p_ = ToVector(pi);
  s.CheckProper();
  if (std::abs(s.p_.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("one-client probabilities must sum to one");
  }
  s.P_ = s.p_.asDiagonal();
  return s;
}

SamplingScheme SamplingScheme::Explicit(int n,
                                        std::vector<WeightedSubset> subsets) {
  if (n <= 0) throw std::invalid_argument("need at least one client");
  SamplingScheme s(SchemeKind::kExplicit, n);
  double total = 0.0;
  for (auto& ws : subsets) {
    std::sort(ws.clients.begin(), ws.clients.end());
    if (ws.clients.empty()) {
      throw std::invalid_argument("explicit subsets must be nonempty");
    }
    if (std::adjacent_find(ws.clients.begin(), ws.clients.end()) !=
        ws.clients.end()) {
      throw std::invalid_argument("explicit subset repeats a client");
    }
    if (ws.clients.front() < 0 || ws.clients.back() >= n) {
      throw std::invalid_argument("explicit subset names a client out of range");
    }
    if (!(ws.probability >= 0.0)) {
      throw std::invalid_argument("subset probabilities must be nonnegative");
    }
    total += ws.probability;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("subset probabilities must sum to one");
  }
  std::erase_if(subsets, [](const WeightedSubset& ws) {
    return ws.probability == 0.0;
  });
  std::sort(subsets.begin(), subsets.end(),
            [](const WeightedSubset& a, const WeightedSubset& b) {
              return a.clients < b.clients;
            });
  for (size_t t = 1; t < subsets.size(); ++t) {
    if (subsets[t].clients == subsets[t - 1].clients) {
      throw std::invalid_argument("explicit subsets must be distinct");
    }
  }
  s.subsets_ = std::move(subsets);
  s.P_ = Matrix::Zero(n, n);
  for (const auto& ws : s.subsets_) {
    for (int i : ws.clients) {
      for (int j : ws.clients) s.P_(i, j) += ws.probability;
    }
  }
  s.p_ = s.P_.diagonal();
  s.CheckProper();
  return s;
}

void SamplingScheme::CheckProper() const {
  for (int i = 0; i < n_; ++i) {
    if (!(p_(i) > 0.0)) {
      throw std::invalid_argument("sampling is not proper: client " +
                                  std::to_string(i) +
                                  " has inclusion probability " +
                                  std::to_string(p_(i)));
    }
  }
}

Vector SamplingScheme::SVector() const {
  switch (kind_) {
    case SchemeKind::kFull:
      return Vector::Zero(n_);
    case SchemeKind::kUniform:
      return n_ > 1 ? Vector::Constant(n_, static_cast<double>(n_ - b_) / (n_ - 1))
                    : Vector::Zero(n_);
    case SchemeKind::kIndependent:
      return Vector::Ones(n_) - p_;
    case SchemeKind::kOneClient:
    case SchemeKind::kExplicit:
      break;
  }
  const Matrix centered = P_ - p_ * p_.transpose();
  return GershgorinDiagonal(centered).cwiseQuotient(p_);
}

ClientSet SamplingScheme::Draw(Rng& rng) const {
  switch (kind_) {
    case SchemeKind::kFull: {
      ClientSet all(static_cast<size_t>(n_));
      std::iota(all.begin(), all.end(), 0);
      return all;
    }
    case SchemeKind::kUniform: {
      ClientSet pool(static_cast<size_t>(n_));
      std::iota(pool.begin(), pool.end(), 0);
      for (int t = 0; t < b_; ++t) {
        const auto pick = t + static_cast<int>(rng.Below(n_ - t));
        std::swap(pool[t], pool[pick]);
      }
      pool.resize(b_);
      std::sort(pool.begin(), pool.end());
      return pool;
    }
    case SchemeKind::kIndependent: {
      ClientSet drawn;
      do {
        drawn.clear();
        for (int i = 0; i < n_; ++i) {
          if (rng.Bernoulli(p_(i))) drawn.push_back(i);
        }
      } while (drawn.empty());
      return drawn;
    }
    case SchemeKind::kOneClient: {
      const double u = rng.Uniform();
      double acc = 0.0;
      for (int i = 0; i < n_; ++i) {
        acc += p_(i);
        if (u < acc) return {i};
      }
      return {n_ - 1};
    }
    case SchemeKind::kExplicit: {
      const double u = rng.Uniform();
      double acc = 0.0;
      for (const auto& ws : subsets_) {
        acc += ws.probability;
        if (u < acc) return ws.clients;
      }
      return subsets_.back().clients;
    }
  }
  throw std::logic_error("unreachable scheme kind");
}

std::vector<WeightedSubset> SamplingScheme::Enumerate() const {
  RequireEnumerable(*this);
  std::vector<WeightedSubset> out;
  switch (kind_) {
    case SchemeKind::kFull: {
      ClientSet all(static_cast<size_t>(n_));
      std::iota(all.begin(), all.end(), 0);
      out.push_back({std::move(all), 1.0});
      break;
    }
    case SchemeKind::kUniform: {
      const double prob = 1.0 / BinomialCoefficient(n_, b_);
      ForEachCombination(n_, b_, [&](const ClientSet& c) {
        out.push_back({c, prob});
      });
      break;
    }
    case SchemeKind::kIndependent: {
      for (uint32_t mask = 0; mask < (1u << n_); ++mask) {
        WeightedSubset ws{{}, 1.0};
        for (int i = 0; i < n_; ++i) {
          if (mask & (1u << i)) {
            ws.clients.push_back(i);
            ws.probability *= p_(i);
          } else {
            ws.probability *= 1.0 - p_(i);
          }
        }
        if (ws.probability > 0.0) out.push_back(std::move(ws));
      }
      break;
    }
    case SchemeKind::kOneClient:
      for (int i = 0; i < n_; ++i) out.push_back({{i}, p_(i)});
      break;
    case SchemeKind::kExplicit:
      out = subsets_;
      break;
  }
  return out;
}

double MaxEigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric,
                                               Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

double EsoSlack(const SamplingScheme& scheme, const Vector& s) {
  const Vector& p = scheme.inclusion();
  const Matrix diff = scheme.pair_inclusion() - p * p.transpose() -
                      Matrix(p.cwiseProduct(s).asDiagonal());
  return MaxEigenvalue(diff);
}

Matrix EnumeratedPairInclusion(const SamplingScheme& scheme) {
  const int n = scheme.num_clients();
  Matrix P = Matrix::Zero(n, n);
  for (const auto& ws : scheme.Enumerate()) {
    for (int i : ws.clients) {
      for (int j : ws.clients) P(i, j) += ws.probability;
    }
  }
  return P;
}

Vector GershgorinDiagonal(const Matrix& symmetric) {
  const Eigen::Index n = symmetric.rows();
  Vector d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) off += std::abs(symmetric(i, j));
    }
    d(i) = std::max(0.0, symmetric(i, i) + off);
  }
  return d;
}

// ---------------------------------------------------------------------------

AggregationNormalizer AggregationNormalizer::Unbiased() {
  return AggregationNormalizer();
}

AggregationNormalizer AggregationNormalizer::SumOne(Vector weights,
                                                    double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");
  AggregationNormalizer q;
  q.rule_ = NormalizerRule::kSumOne;
  q.weights_ = std::move(weights);
  q.scale_ = scale;
  return q;
}

AggregationNormalizer AggregationNormalizer::FromFunction(Custom fn) {
  if (!fn) throw std::invalid_argument("custom normalizer needs a function");
  AggregationNormalizer q;
  q.rule_ = NormalizerRule::kCustom;
  q.custom_ = std::move(fn);
  return q;
}

double AggregationNormalizer::Value(int client, const ClientSet& sampled,
                                    const SamplingScheme& scheme) const {
  switch (rule_) {
    case NormalizerRule::kUnbiased:
      return scheme.inclusion()(client);
    case NormalizerRule::kSumOne: {
      if (weights_.size() != scheme.num_clients()) {
        throw std::invalid_argument("sum-one normalizer has wrong weight count");
      }
      double total = 0.0;
      for (int j : sampled) total += weights_(j);
      return scale_ * total;
    }
    case NormalizerRule::kCustom:
      return custom_(client, sampled);
  }
  throw std::logic_error("unreachable normalizer rule");
}

NormalizerStats ComputeNormalizerStats(const SamplingScheme& scheme,
                                       const AggregationNormalizer& normalizer) {
  const int n = scheme.num_clients();
  NormalizerStats st;
  if (normalizer.rule() == NormalizerRule::kUnbiased) {
    // q_i^S = p_i gives q_i = 1 and H = P / pp^T without enumeration.
    const Vector& p = scheme.inclusion();
    st.q = Vector::Ones(n);
    st.H = scheme.pair_inclusion().cwiseQuotient(p * p.transpose());
    st.h = st.H.diagonal();
    st.s = scheme.SVector();
    return st;
  }
  RequireEnumerable(scheme);
  const auto subsets = scheme.Enumerate();
  Vector inv_q = Vector::Zero(n);
  for (const auto& ws : subsets) {
    for (int i : ws.clients) {
      inv_q(i) += ws.probability / normalizer.Value(i, ws.clients, scheme);
    }
  }
  st.q = inv_q.cwiseInverse();
  st.H = Matrix::Zero(n, n);
  for (const auto& ws : subsets) {
    Vector ratio = Vector::Zero(n);
    for (int i : ws.clients) {
      ratio(i) = st.q(i) / normalizer.Value(i, ws.clients, scheme);
    }
    st.H += ws.probability * ratio * ratio.transpose();
  }
  st.h = st.H.diagonal();
  st.s = GershgorinDiagonal(st.H - Matrix::Ones(n, n)).cwiseQuotient(st.h);
  return st;
}

double GeneralEsoSlack(const NormalizerStats& stats) {
  const Eigen::Index n = stats.H.rows();
  const Matrix diff = stats.H - Matrix::Ones(n, n) -
                      Matrix(stats.h.cwiseProduct(stats.s).asDiagonal());
  return MaxEigenvalue(diff);
}

Vector ExpectedContribution(const SamplingScheme& scheme,
                            const AggregationNormalizer& normalizer,
                            const Vector& weights) {
  RequireEnumerable(scheme);
  if (weights.size() != scheme.num_clients()) {
    throw std::invalid_argument("one weight per client required");
  }
  Vector out = Vector::Zero(scheme.num_clients());
  for (const auto& ws : scheme.Enumerate()) {
    for (int i : ws.clients) {
      out(i) += ws.probability * weights(i) /
                normalizer.Value(i, ws.clients, scheme);
    }
  }
  return out;
}

VarianceCheck VarianceBoundCheck(std::span<const Vector> zeta,
                                 const Vector& weights,
                                 const SamplingScheme& scheme) {
  CheckVectors(zeta, weights, scheme);
  RequireEnumerable(scheme);
  const int n = scheme.num_clients();
  const Vector& p = scheme.inclusion();
  const Vector s = scheme.SVector();
  Vector target = Vector::Zero(zeta.front().size());
  for (int i = 0; i < n; ++i) target += weights(i) * zeta[i];

  VarianceCheck out;
  out.mean = Vector::Zero(target.size());
  for (const auto& ws : scheme.Enumerate()) {
    Vector est = Vector::Zero(target.size());
    for (int i : ws.clients) est += weights(i) * zeta[i] / p(i);
    out.lhs += ws.probability * (est - target).squaredNorm();
    out.mean += ws.probability * est;
  }
  for (int i = 0; i < n; ++i) {
    out.rhs += weights(i) * weights(i) * s(i) / p(i) * zeta[i].squaredNorm();
  }
  return out;
}

VarianceCheck GeneralVarianceCheck(std::span<const Vector> zeta,
                                   const Vector& weights,
                                   const SamplingScheme& scheme,
                                   const AggregationNormalizer& normalizer) {
  CheckVectors(zeta, weights, scheme);
  RequireEnumerable(scheme);
  const int n = scheme.num_clients();
  const NormalizerStats st = ComputeNormalizerStats(scheme, normalizer);
  Vector target = Vector::Zero(zeta.front().size());
  for (int i = 0; i < n; ++i) target += weights(i) / st.q(i) * zeta[i];

  VarianceCheck out;
  out.mean = Vector::Zero(target.size());
  for (const auto& ws : scheme.Enumerate()) {
    Vector est = Vector::Zero(target.size());
    for (int i : ws.clients) {
      est += weights(i) * zeta[i] / normalizer.Value(i, ws.clients, scheme);
    }
    out.lhs += ws.probability * (est - target).squaredNorm();
    out.mean += ws.probability * est;
  }
  for (int i = 0; i < n; ++i) {
    out.rhs += st.h(i) * st.s(i) * (weights(i) * zeta[i] / st.q(i)).squaredNorm();
  }
  return out;
}

SwrCheck SwrVarianceCheck(std::span<const Vector> zeta, int k) {
  const int n = static_cast<int>(zeta.size());
  if (k < 1 || k > n) {
    throw std::out_of_range("subset size " + std::to_string(k) +
                            " outside [1, " + std::to_string(n) + "]");
  }
  if (n > 24) throw std::invalid_argument("too many vectors to enumerate");
  Vector mean = Vector::Zero(zeta.front().size());
  for (const auto& z : zeta) mean += z;
  mean /= n;
  double sigma2 = 0.0;
  for (const auto& z : zeta) sigma2 += (z - mean).squaredNorm();
  sigma2 /= n;

  double total = 0.0;
  double count = 0.0;
  ForEachCombination(n, k, [&](const ClientSet& c) {
    Vector m = Vector::Zero(mean.size());
    for (int i : c) m += zeta[i];
    m /= k;
    total += (m - mean).squaredNorm();
    count += 1.0;
  });
  SwrCheck out;
  out.empirical = total / count;
  out.formula = n > 1 ? static_cast<double>(n - k) / (k * (n - 1.0)) * sigma2 : 0.0;
  return out;
}

SamplingScheme ImportanceScheme(const Vector& weights, double expected_cohort) {
  if (!(expected_cohort > 0.0)) {
    throw std::invalid_argument("expected cohort must be positive");
  }
  std::vector<double> p(static_cast<size_t>(weights.size()));
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    const double pi = expected_cohort * weights(i);
    if (pi > 1.0 + 1e-12) {
      throw std::invalid_argument(
          "importance sampling needs b * w_i <= 1, client " +
          std::to_string(i) + " has " + std::to_string(pi));
    }
    p[static_cast<size_t>(i)] = std::min(pi, 1.0);
  }
  return SamplingScheme::Independent(std::move(p));
}

double PartialParticipationConstant(const SamplingScheme& scheme,
                                    const Vector& weights) {
  const Vector s = scheme.SVector();
  const Vector& p = scheme.inclusion();
  double m = 0.0;
  for (int i = 0; i < scheme.num_clients(); ++i) {
    m = std::max(m, s(i) * weights(i) / p(i));
  }
  return m;
}

}  // namespace fedsim
