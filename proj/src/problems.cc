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

#include "fedsim/problems.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <utility>

#include <Eigen/Eigenvalues>

#include "fedsim/rng.h"

namespace fedsim {
namespace {

double SpectralNorm(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric,
                                               Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double Gaussian(Rng& rng) {
  // Box-Muller; 1 - U keeps the log argument in (0, 1].
  const double u1 = 1.0 - rng.Uniform();
  const double u2 = rng.Uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

Vector Canonical(int dim, int k) {
  Vector e = Vector::Zero(dim);
  e(k) = 1.0;
  return e;
}

template <typename T>
std::vector<int> SizesOf(const std::vector<std::vector<T>>& per_client) {
  std::vector<int> sizes;
  sizes.reserve(per_client.size());
  for (const auto& c : per_client) sizes.push_back(static_cast<int>(c.size()));
  return sizes;
}

int DimOf(const std::vector<std::vector<Vector>>& per_client) {
  if (per_client.empty() || per_client.front().empty()) {
    throw std::invalid_argument("problem needs at least one client sample");
  }
  return static_cast<int>(per_client.front().front().size());
}

}  // namespace

std::vector<double> SizeProportionalWeights(std::span<const int> sizes) {
  const double total = std::accumulate(sizes.begin(), sizes.end(), 0.0);
  std::vector<double> w;
  w.reserve(sizes.size());
  for (int s : sizes) w.push_back(s / total);
  return w;
}

Problem::Problem(std::vector<int> sizes, std::vector<double> weights, int dim)
    : sizes_(std::move(sizes)), dim_(dim) {
  if (sizes_.empty()) throw std::invalid_argument("problem has no clients");
  if (dim_ <= 0) throw std::invalid_argument("dimension must be positive");
  for (int s : sizes_) {
    if (s <= 0) throw std::invalid_argument("client sizes must be positive");
    total_size_ += s;
  }
  if (weights.empty()) weights = SizeProportionalWeights(sizes_);
  if (weights.size() != sizes_.size()) {
    throw std::invalid_argument("one weight per client required");
  }
  weights_ = Eigen::Map<const Vector>(weights.data(),
                                      static_cast<Eigen::Index>(weights.size()));
  if ((weights_.array() < 0.0).any()) {
    throw std::invalid_argument("weights must be nonnegative");
  }
  if (std::abs(weights_.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("weights must sum to one");
  }
}

int Problem::client_size(int client) const {
  CheckIndex(client, 0);
  return sizes_[client];
}

void Problem::CheckIndex(int client, int sample) const {
  if (client < 0 || client >= num_clients()) {
    throw std::out_of_range("client index " + std::to_string(client) +
                            " out of range");
  }
  if (sample < 0 || sample >= sizes_[client]) {
    throw std::out_of_range("sample index " + std::to_string(sample) +
                            " out of range for client " +
                            std::to_string(client));
  }
}

void Problem::CheckPoint(const Vector& x) const {
  if (x.size() != dim_) {
    throw std::invalid_argument("point has dimension " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(dim_));
  }
}

double Problem::Value(int client, int sample, const Vector& x) const {
  CheckIndex(client, sample);
  CheckPoint(x);
  return SampleValue(client, sample, x);
}

Vector Problem::Gradient(int client, int sample, const Vector& x) const {
  CheckIndex(client, sample);
  CheckPoint(x);
  return SampleGradient(client, sample, x);
}

Matrix Problem::Hessian(int client, int sample, const Vector& x) const {
  CheckIndex(client, sample);
  CheckPoint(x);
  return SampleHessian(client, sample, x);
}

double Problem::ClientValue(int client, const Vector& x) const {
  const int m = client_size(client);
  double sum = 0.0;
  for (int j = 0; j < m; ++j) sum += Value(client, j, x);
  return sum / m;
}

Vector Problem::ClientGradient(int client, const Vector& x) const {
  const int m = client_size(client);
  Vector sum = Vector::Zero(dim_);
  for (int j = 0; j < m; ++j) sum += Gradient(client, j, x);
  return sum / m;
}

Matrix Problem::ClientHessian(int client, const Vector& x) const {
  const int m = client_size(client);
  Matrix sum = Matrix::Zero(dim_, dim_);
  for (int j = 0; j < m; ++j) sum += Hessian(client, j, x);
  return sum / m;
}

double Problem::FullValue(const Vector& x) const {
  double sum = 0.0;
  for (int i = 0; i < num_clients(); ++i) sum += weights_(i) * ClientValue(i, x);
  return sum;
}

Vector Problem::FullGradient(const Vector& x) const {
  Vector sum = Vector::Zero(dim_);
  for (int i = 0; i < num_clients(); ++i) {
    sum += weights_(i) * ClientGradient(i, x);
  }
  return sum;
}

Matrix Problem::FullHessian(const Vector& x) const {
  Matrix sum = Matrix::Zero(dim_, dim_);
  for (int i = 0; i < num_clients(); ++i) {
    sum += weights_(i) * ClientHessian(i, x);
  }
  return sum;
}

// ---------------------------------------------------------------------------

QuadraticProblem::QuadraticProblem(std::vector<std::vector<Vector>> anchors,
                                   std::vector<double> weights)
    : Problem(SizesOf(anchors), std::move(weights), DimOf(anchors)),
      anchors_(std::move(anchors)) {
  duplicated_ = true;
  for (const auto& client : anchors_) {
    for (const auto& a : client) {
      if (a.size() != dim()) {
        throw std::invalid_argument("anchors must share one dimension");
      }
      if (a != client.front()) duplicated_ = false;
    }
  }
}

QuadraticProblem QuadraticProblem::Duplicated(std::vector<Vector> anchors,
                                              std::vector<int> sizes,
                                              std::vector<double> weights) {
  if (anchors.size() != sizes.size()) {
    throw std::invalid_argument("one anchor per client required");
  }
  std::vector<std::vector<Vector>> per_sample(anchors.size());
  for (size_t i = 0; i < anchors.size(); ++i) {
    if (sizes[i] <= 0) throw std::invalid_argument("client sizes must be positive");
    per_sample[i].assign(static_cast<size_t>(sizes[i]), anchors[i]);
  }
  return QuadraticProblem(std::move(per_sample), std::move(weights));
}

const Vector& QuadraticProblem::anchor(int client, int sample) const {
  client_size(client);
  return anchors_.at(client).at(sample);
}

Vector QuadraticProblem::ClientAnchorMean(int client) const {
  const int m = client_size(client);
  Vector sum = Vector::Zero(dim());
  for (const auto& a : anchors_[client]) sum += a;
  return sum / m;
}

std::optional<Vector> QuadraticProblem::KnownMinimizer() const {
  Vector x = Vector::Zero(dim());
  for (int i = 0; i < num_clients(); ++i) {
    x += weights()(i) * ClientAnchorMean(i);
  }
  return x;
}

double QuadraticProblem::SampleValue(int client, int sample,
                                     const Vector& x) const {
  return (x - anchors_[client][sample]).squaredNorm();
}

Vector QuadraticProblem::SampleGradient(int client, int sample,
                                        const Vector& x) const {
  return 2.0 * (x - anchors_[client][sample]);
}

Matrix QuadraticProblem::SampleHessian(int, int, const Vector&) const {
  return 2.0 * Matrix::Identity(dim(), dim());
}

// ---------------------------------------------------------------------------

LogisticProblem::LogisticProblem(std::vector<std::vector<Vector>> features,
                                 std::vector<std::vector<double>> labels,
                                 double l2, std::vector<double> weights)
    : Problem(SizesOf(features), std::move(weights), DimOf(features)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      l2_(l2) {
  if (labels_.size() != features_.size()) {
    throw std::invalid_argument("labels and features disagree on clients");
  }
  for (size_t i = 0; i < features_.size(); ++i) {
    if (labels_[i].size() != features_[i].size()) {
      throw std::invalid_argument("labels and features disagree on sizes");
    }
    for (double b : labels_[i]) {
      if (b != 1.0 && b != -1.0) throw std::invalid_argument("labels must be +-1");
    }
  }
  if (l2_ < 0.0) throw std::invalid_argument("l2 must be nonnegative");
}

LogisticProblem LogisticProblem::Synthetic(uint64_t seed,
                                           std::vector<int> sizes, int dim,
                                           double l2) {
  Rng rng(DeriveSeed(seed, {0x10615u}));
  Vector separator(dim);
  for (int k = 0; k < dim; ++k) separator(k) = Gaussian(rng);
  std::vector<std::vector<Vector>> features(sizes.size());
  std::vector<std::vector<double>> labels(sizes.size());
  for (size_t i = 0; i < sizes.size(); ++i) {
    // Shifted feature means per client make the local optima differ.
    const double shift = static_cast<double>(i);
    for (int j = 0; j < sizes[i]; ++j) {
      Vector a(dim);
      for (int k = 0; k < dim; ++k) a(k) = Gaussian(rng) + shift * 0.5;
      double b = a.dot(separator) >= 0.0 ? 1.0 : -1.0;
      if (rng.Bernoulli(0.1)) b = -b;
      features[i].push_back(std::move(a));
      labels[i].push_back(b);
    }
  }
  return LogisticProblem(std::move(features), std::move(labels), l2);
}

double LogisticProblem::SampleValue(int client, int sample,
                                    const Vector& x) const {
  const double z = labels_[client][sample] * features_[client][sample].dot(x);
  // log(1 + exp(-z)) evaluated without overflow.
  const double loss = z > 0.0 ? std::log1p(std::exp(-z))
                              : -z + std::log1p(std::exp(z));
  return loss + 0.5 * l2_ * x.squaredNorm();
}

Vector LogisticProblem::SampleGradient(int client, int sample,
                                       const Vector& x) const {
  const Vector& a = features_[client][sample];
  const double b = labels_[client][sample];
  const double z = b * a.dot(x);
  const double sig_neg = 1.0 / (1.0 + std::exp(z));  // sigma(-z)
  return -b * sig_neg * a + l2_ * x;
}

Matrix LogisticProblem::SampleHessian(int client, int sample,
                                      const Vector& x) const {
  const Vector& a = features_[client][sample];
  const double z = labels_[client][sample] * a.dot(x);
  const double s = 1.0 / (1.0 + std::exp(-z));
  return s * (1.0 - s) * a * a.transpose() +
         l2_ * Matrix::Identity(dim(), dim());
}

// ---------------------------------------------------------------------------

QuadraticProblem MakeQuadObj() {
  std::vector<std::vector<Vector>> anchors(3);
  anchors[0] = {Canonical(6, 0)};
  anchors[1] = {Canonical(6, 1), Canonical(6, 2)};
  anchors[2] = {Canonical(6, 3), Canonical(6, 4), Canonical(6, 5)};
  return QuadraticProblem(std::move(anchors));
}

QuadraticProblem MakeImportanceQuadratic() {
  std::vector<std::vector<Vector>> anchors(3);
  for (int k = 0; k < 8; ++k) anchors[0].push_back(Canonical(10, k));
  anchors[1] = {Canonical(10, 8)};
  anchors[2] = {Canonical(10, 9)};
  return QuadraticProblem(std::move(anchors));
}

QuadraticProblem MakeCanonicalDuplicated(std::vector<int> sizes) {
  const int n = static_cast<int>(sizes.size());
  std::vector<Vector> anchors;
  for (int i = 0; i < n; ++i) anchors.push_back(Canonical(n, i));
  return QuadraticProblem::Duplicated(std::move(anchors), std::move(sizes));
}

Vector TrueMinimizer(const Problem& problem) {
  const auto* quad = dynamic_cast<const QuadraticProblem*>(&problem);
  if (quad == nullptr) {
    throw UnsupportedOperation("true minimizer is only closed-form for "
                               "quadratic problems, got " + problem.kind());
  }
  return *quad->KnownMinimizer();
}

Vector InconsistentFixedPoint(const Problem& problem) {
  const auto* quad = dynamic_cast<const QuadraticProblem*>(&problem);
  if (quad == nullptr || !quad->is_duplicated()) {
    throw UnsupportedOperation(
        "inconsistent fixed point requires a duplicated quadratic, got " +
        problem.kind());
  }
  const auto proportional = SizeProportionalWeights(problem.sizes());
  for (int i = 0; i < problem.num_clients(); ++i) {
    if (std::abs(problem.weights()(i) - proportional[i]) > 1e-12) {
      throw std::invalid_argument(
          "inconsistent fixed point requires size-proportional weights");
    }
  }
  double denom = 0.0;
  Vector x = Vector::Zero(problem.dim());
  for (int i = 0; i < problem.num_clients(); ++i) {
    const double s2 = static_cast<double>(problem.client_size(i)) *
                      problem.client_size(i);
    x += s2 * quad->anchor(i, 0);
    denom += s2;
  }
  return x / denom;
}

HeterogeneityConstants EstimateConstants(const Problem& problem,
                                         std::span<const Vector> probes,
                                         double B) {
  if (probes.empty()) throw std::invalid_argument("no probe points");
  const int n = problem.num_clients();
  HeterogeneityConstants c;
  c.B = B;
  c.mu = std::numeric_limits<double>::infinity();
  std::vector<double> sigma2(n, 0.0);
  double g2 = 0.0;
  for (const Vector& x : probes) {
    const Matrix full_hessian = problem.FullHessian(x);
    const Vector full_grad = problem.FullGradient(x);
    double weighted = 0.0;
    for (int i = 0; i < n; ++i) {
      const Vector gi = problem.ClientGradient(i, x);
      weighted += problem.weights()(i) * gi.squaredNorm();
      double var = 0.0;
      for (int j = 0; j < problem.client_size(i); ++j) {
        const Matrix h = problem.Hessian(i, j, x);
        Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
        c.L = std::max(c.L, solver.eigenvalues().cwiseAbs().maxCoeff());
        c.mu = std::min(c.mu, solver.eigenvalues().minCoeff());
        var += (problem.Gradient(i, j, x) - gi).squaredNorm();
      }
      sigma2[i] = std::max(sigma2[i], var / problem.client_size(i));
      c.delta = std::max(
          c.delta, SpectralNorm(problem.ClientHessian(i, x) - full_hessian));
    }
    g2 = std::max(g2, weighted - B * B * full_grad.squaredNorm());
  }
  c.mu = std::max(c.mu, 0.0);
  c.G = std::sqrt(g2);
  c.sigma.resize(n);
  for (int i = 0; i < n; ++i) c.sigma[i] = std::sqrt(sigma2[i]);
  c.P.assign(n, 0.0);
  return c;
}

}  // namespace fedsim
