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

#ifndef FEDSIM_PROBLEMS_H_
#define FEDSIM_PROBLEMS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fedsim {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Raised when an operation is requested for a problem type that does not
// support it (e.g. a closed-form minimizer of a logistic model).
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Finite-sum objective f(x) = sum_i w_i f_i(x), f_i = mean_j f_ij(x).
// Clients and samples are 0-based.
class Problem {
 public:
  virtual ~Problem() = default;

  int num_clients() const { return static_cast<int>(sizes_.size()); }
  int dim() const { return dim_; }
  int client_size(int client) const;
  std::span<const int> sizes() const { return sizes_; }
  int total_size() const { return total_size_; }
  const Vector& weights() const { return weights_; }

  double Value(int client, int sample, const Vector& x) const;
  Vector Gradient(int client, int sample, const Vector& x) const;
  Matrix Hessian(int client, int sample, const Vector& x) const;

  double ClientValue(int client, const Vector& x) const;
  Vector ClientGradient(int client, const Vector& x) const;
  Matrix ClientHessian(int client, const Vector& x) const;

  double FullValue(const Vector& x) const;
  Vector FullGradient(const Vector& x) const;
  Matrix FullHessian(const Vector& x) const;

  // Minimizer of f when available in closed form.
  virtual std::optional<Vector> KnownMinimizer() const { return std::nullopt; }

  virtual std::string kind() const = 0;

 protected:
  Problem(std::vector<int> sizes, std::vector<double> weights, int dim);
  Problem(const Problem&) = default;
  Problem& operator=(const Problem&) = default;

  virtual double SampleValue(int client, int sample, const Vector& x) const = 0;
  virtual Vector SampleGradient(int client, int sample,
                                const Vector& x) const = 0;
  virtual Matrix SampleHessian(int client, int sample,
                               const Vector& x) const = 0;

 private:
  void CheckIndex(int client, int sample) const;
  void CheckPoint(const Vector& x) const;

  std::vector<int> sizes_;
  Vector weights_;
  int dim_;
  int total_size_ = 0;
};

// Weights proportional to local dataset sizes, w_i = |D_i| / |D|.
std::vector<double> SizeProportionalWeights(std::span<const int> sizes);

// f_ij(x) = ||x - e_ij||^2.
class QuadraticProblem final : public Problem {
 public:
  // anchors[i][j] is e_ij. Empty weights means size-proportional.
  QuadraticProblem(std::vector<std::vector<Vector>> anchors,
                   std::vector<double> weights = {});

  // Client i holds sizes[i] identical copies of anchors[i].
  static QuadraticProblem Duplicated(std::vector<Vector> anchors,
                                     std::vector<int> sizes,
                                     std::vector<double> weights = {});

  const Vector& anchor(int client, int sample) const;
  Vector ClientAnchorMean(int client) const;
  // True when every client's anchors are all equal.
  bool is_duplicated() const { return duplicated_; }

  std::optional<Vector> KnownMinimizer() const override;
  std::string kind() const override {
    return duplicated_ ? "duplicated_quadratic" : "quadratic";
  }

 protected:
  double SampleValue(int client, int sample, const Vector& x) const override;
  Vector SampleGradient(int client, int sample, const Vector& x) const override;
  Matrix SampleHessian(int client, int sample, const Vector& x) const override;

 private:
  std::vector<std::vector<Vector>> anchors_;
  bool duplicated_ = false;
};

// f_ij(x) = log(1 + exp(-b_ij <a_ij, x>)) + (l2/2) ||x||^2, b_ij in {-1, +1}.
class LogisticProblem final : public Problem {
 public:
  LogisticProblem(std::vector<std::vector<Vector>> features,
                  std::vector<std::vector<double>> labels, double l2,
                  std::vector<double> weights = {});

  // Gaussian features, labels from a planted separator with 10% flips.
  static LogisticProblem Synthetic(uint64_t seed, std::vector<int> sizes,
                                   int dim, double l2 = 0.01);

  std::string kind() const override { return "logistic"; }

 protected:
  double SampleValue(int client, int sample, const Vector& x) const override;
  Vector SampleGradient(int client, int sample, const Vector& x) const override;
  Matrix SampleHessian(int client, int sample, const Vector& x) const override;

 private:
  std::vector<std::vector<Vector>> features_;
  std::vector<std::vector<double>> labels_;
  double l2_;
};

// min_{x in R^6} (1/12) sum_k ||x - e_k||^2 with canonical e_k, split over
// three clients holding {e1}, {e2, e3}, {e4, e5, e6}.
QuadraticProblem MakeQuadObj();

// d = 10: client 0 holds e1..e8, clients 1 and 2 hold e9 and e10.
QuadraticProblem MakeImportanceQuadratic();

// Client i holds sizes[i] copies of the canonical vector e_i in R^n.
QuadraticProblem MakeCanonicalDuplicated(std::vector<int> sizes);

// w-weighted mean of the client anchor means. Throws UnsupportedOperation
// for non-quadratic problems.
Vector TrueMinimizer(const Problem& problem);

// Limit of FedAvg with reshuffling under full participation and a vanishing
// local step: sum_i |D_i|^2 e_i / sum_i |D_i|^2. Requires a duplicated
// quadratic with size-proportional weights.
Vector InconsistentFixedPoint(const Problem& problem);

// Empirical problem constants. M, P^2, sigma^2 and beta depend on the
// sampling scheme and algorithm; see algorithms.h for those.
struct HeterogeneityConstants {
  double L = 0.0;
  double mu = 0.0;
  double G = 0.0;
  double B = 1.0;
  std::vector<double> sigma;  // per client
  std::vector<double> P;      // per client
  double delta = 0.0;
};

// Maxima over the probe points. B is held fixed and G^2 fitted as the
// smallest value satisfying sum_i w_i ||grad f_i||^2 <= G^2 + B^2 ||grad f||^2
// at every probe. P_i is fixed to 0 and sigma_i^2 fitted accordingly.
HeterogeneityConstants EstimateConstants(const Problem& problem,
                                         std::span<const Vector> probes,
                                         double B = 1.0);

}  // namespace fedsim

#endif  // FEDSIM_PROBLEMS_H_
