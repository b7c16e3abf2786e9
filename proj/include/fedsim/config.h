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

#ifndef FEDSIM_CONFIG_H_
#define FEDSIM_CONFIG_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "fedsim/algorithms.h"
#include "fedsim/problems.h"
#include "fedsim/sampling.h"

namespace fedsim {

// Unreadable or schema-invalid run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemSpec {
  // quad_obj | importance_quadratic | duplicated_quadratic | quadratic |
  // logistic
  std::string kind = "quad_obj";
  std::vector<int> sizes;
  // duplicated_quadratic: one anchor per client.
  std::vector<std::vector<double>> anchors;
  // quadratic: anchors[client][sample].
  std::vector<std::vector<std::vector<double>>> sample_anchors;
  std::vector<double> weights;  // empty: size-proportional
  uint64_t seed = 0;            // logistic
  int dim = 0;                  // logistic
  double l2 = 0.01;             // logistic
  bool operator==(const ProblemSpec&) const = default;
};

struct SubsetSpec {
  std::vector<int> clients;
  double probability = 0.0;
  bool operator==(const SubsetSpec&) const = default;
};

struct SamplingSpec {
  std::string kind = "full";  // full | uniform_b | independent | one_client |
                              // explicit
  int b = 0;                  // uniform_b
  std::vector<double> probabilities;  // independent p / one_client pi
  std::vector<SubsetSpec> subsets;    // explicit
  bool operator==(const SamplingSpec&) const = default;
};

struct AlgorithmSpec {
  std::string preset = "fedshuffle";
  std::vector<int> epochs;  // empty: one each
  // Overrides of the preset tuple.
  std::vector<double> normalizers;
  std::vector<double> agg_weights;
  std::string aggregation;  // "" | unbiased | sum_one
  std::string fixed_steps;  // "" | none | min | mean
  bool operator==(const AlgorithmSpec&) const = default;
};

struct StepSpec {
  // "auto": the admissible step of the general analysis for this config.
  bool auto_initial = false;
  double initial = 0.0;
  double decay_rounds = 0.0;
  bool operator==(const StepSpec&) const = default;
};

struct MomentumSpec {
  // none | global | mvr. "none" keeps the MVR steps of fedshuffle_mvr.
  std::string kind = "none";
  double coeff = 0.9;
  double a = 1.0;
  bool practical = false;
  int init_draws = 0;
  bool operator==(const MomentumSpec&) const = default;
};

struct RunConfig {
  ProblemSpec problem;
  AlgorithmSpec algorithm;
  SamplingSpec sampling;
  int rounds = 0;
  // Empty: one run with the default seed.
  std::vector<uint64_t> seeds;
  StepSpec eta_l;
  double eta_g = 1.0;
  MomentumSpec momentum;
  std::vector<int> truncation;
  int client_threads = 1;
  std::string output_path;  // empty: stdout
  bool operator==(const RunConfig&) const = default;
};

// Validates the schema (unknown keys are rejected) and returns the config.
RunConfig ParseRunConfig(const nlohmann::json& j);
// Reads and parses a file; every failure is a ConfigError naming the path.
RunConfig LoadRunConfig(const std::string& path);
nlohmann::json ToJson(const RunConfig& config);

std::unique_ptr<Problem> BuildProblem(const ProblemSpec& spec);
SamplingScheme BuildScheme(const SamplingSpec& spec, int num_clients);

// The GenConfig of one seed. Resolves "auto" step sizes.
GenConfig BuildGenConfig(const RunConfig& config, const Problem& problem,
                         uint64_t seed);

// Admissible eta_l of the general analysis for this configuration, with
// problem constants estimated at seeded probe points.
double AutoLocalStep(const Problem& problem, const GenConfig& config);

// Seed from FEDSIM_SEED, else 0. ConfigError on a malformed value.
uint64_t DefaultSeed();

// path with "_seed<k>" inserted before the extension.
std::string SeededPath(const std::string& path, uint64_t seed);

}  // namespace fedsim

#endif  // FEDSIM_CONFIG_H_
