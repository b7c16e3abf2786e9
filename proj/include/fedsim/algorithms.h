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

#ifndef FEDSIM_ALGORITHMS_H_
#define FEDSIM_ALGORITHMS_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedsim/aggregation.h"
#include "fedsim/local.h"
#include "fedsim/problems.h"
#include "fedsim/rng.h"
#include "fedsim/sampling.h"

namespace fedsim {

// The iterate left the ball of radius 1e12 or became non-finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Momentum state used before initialization.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline constexpr double kDivergenceRadius = 1e12;

// eta(r) = initial / (1 + r / decay_rounds); constant when decay_rounds = 0.
struct StepSchedule {
  double initial = 0.0;
  double decay_rounds = 0.0;

  double At(int round) const {
    return decay_rounds > 0.0 ? initial / (1.0 + round / decay_rounds)
                              : initial;
  }
};

enum class MomentumKind { kNone, kGlobal, kMvr };

struct MomentumConfig {
  MomentumKind kind = MomentumKind::kNone;
  // Heavy-ball coefficient of the global buffer.
  double coeff = 0.9;
  // MVR parameter a in [0, 1].
  double a = 1.0;
  // Replace exact client gradients at x^r by -Delta_i / (K_i eta_{l,i}).
  // For MVR this also drops the correction term and updates m after the
  // round from the returned deltas.
  bool practical = false;
  // Client-set draws averaged into m^0; 0 means one per round.
  int init_draws = 0;
};

// Fixed local step counts per round (the FedAvgMin / FedAvgMean baselines).
enum class FixedStepRule { kNone, kMin, kMean };

struct GenConfig {
  std::string method = "custom";
  int rounds = 0;
  double eta_g = 1.0;
  StepSchedule eta_l;
  std::vector<int> epochs;  // E_i
  Vector normalizers;       // c_i
  AggregationRule rule;     // w~ and q_i^S
  SamplingScheme scheme = SamplingScheme::Full(1);
  MomentumConfig momentum;
  std::vector<int> truncation;  // empty means none
  FixedStepRule fixed_steps = FixedStepRule::kNone;
  uint64_t seed = 0;
  int client_threads = 1;
  Vector x0;  // empty means the origin
  // Store x^0, ..., x^{R-1} in the log (for output selection).
  bool keep_iterates = false;
};

enum class Preset {
  kFedShuffle,
  kFedShuffleSumOne,
  kFedAvgRR,
  kFedAvgMin,
  kFedAvgMean,
  kFedNovaRR,
  kFedShuffleMvr,
  kFedShuffleGen,
};

std::string PresetName(Preset preset);
// Throws std::invalid_argument for an unknown name.
Preset ParsePreset(const std::string& name);
std::vector<Preset> AllPresets();

// The named FedShuffleGen tuples:
//   fedshuffle     c_i = E_i|D_i|, w~ = w, unbiased
//   fedshuffle_so  c_i = E_i|D_i|, w~ = w, sum-one
//   fedavg_rr      c_i = 1,        w~ = w, sum-one
//   fedavg_min     fedavg_rr with K = min_{i in S} E_i|D_i| steps
//   fedavg_mean    fedavg_rr with K = round(mean_{i in S} E_i|D_i|) steps
//   fednova_rr     c_i = 1, w~_i = w_i tau / (E_i|D_i|), unbiased,
//                  tau = sum_j w_j E_j|D_j|
//   fedshuffle_mvr fedshuffle with MVR steps and eta_g = 1
//   fedshuffle_gen c_i = E_i|D_i|, w~_i = w_i c_i / K_i with K_i the
//                  truncated step count, unbiased
// Empty epochs means one epoch per client.
GenConfig MakePreset(Preset preset, const Problem& problem,
                     const SamplingScheme& scheme, int rounds,
                     StepSchedule eta_l, double eta_g = 1.0,
                     std::vector<int> epochs = {},
                     std::vector<int> truncation = {}, uint64_t seed = 0);

// Throws std::invalid_argument describing the first inconsistency.
void ValidateConfig(const GenConfig& config, const Problem& problem);

struct RoundRecord {
  int round = 0;  // 1-based; metrics are taken at x^round
  double f_gap = 0.0;
  double dist_sq = 0.0;  // NaN when the minimizer is unknown
  double grad_norm_sq = 0.0;
  ClientSet sampled;
  std::vector<int> steps;  // per sampled client
  int steps_total = 0;
};

struct RunLog {
  std::string method;
  std::vector<RoundRecord> rounds;
  Vector final_iterate;
  std::vector<Vector> iterates;  // x^0..x^{R-1} when requested
  // Multi-client MVR has no convergence guarantee.
  bool outside_theory = false;
};

// Executes config.rounds rounds of FedShuffleGen. Throws DivergenceError.
RunLog Run(const GenConfig& config, const Problem& problem);

// Run with every sampled client taking exactly K steps per round.
RunLog RunFixedSteps(GenConfig config, const Problem& problem,
                     FixedStepRule rule);

// K = min_{i in S} E_i|D_i|, or the mean rounded to nearest (ties up).
int FixedStepCount(const Problem& problem, std::span<const int> epochs,
                   const ClientSet& sampled, FixedStepRule rule);

struct MomentumState {
  Vector m;
  double a = 1.0;
  bool initialized = false;
};

// sum_{i in S} (w_i / p_i) grad f_i(x).
Vector SampledGradient(const Problem& problem, const ClientSet& sampled,
                       const SamplingScheme& scheme, const Vector& x);

// m^0 = (1/R) sum_t sum_{i in S^t} (w_i / p_i) grad f_i(x^0) over `draws`
// sets drawn from the stream keyed by (seed, momentum-init).
MomentumState MvrInit(const Problem& problem, const SamplingScheme& scheme,
                      int draws, uint64_t seed, const Vector& x0, double a);

// m^r = a g(x^r) + (1 - a) m^{r-1} + (1 - a)(g(x^r) - g(x^{r-1})),
// g = SampledGradient over S^r. Throws StateError if uninitialized.
MomentumState MvrMomentumUpdate(const MomentumState& state,
                                const ClientSet& sampled,
                                const Problem& problem, const Vector& x,
                                const Vector& x_prev,
                                const SamplingScheme& scheme);

// -delta / (steps * client_step), a client-gradient surrogate that needs no
// extra communication. Throws std::invalid_argument on a zero step.
Vector PracticalGradientEstimate(const Vector& delta, int steps,
                                 double client_step);

struct Theorem2Params {
  double eta_l = 0.0;
  double a = 0.0;
  bool clamped = false;  // the prescribed a exceeded 1
};

// eta_l = min{1/delta, (F / (R delta^2 (G^2 + sigma^2)))^{1/3}} / (40 E),
// a = max(1152 E^2 delta^2 eta_l^2, 1/R). Requires delta > 0.
Theorem2Params Theorem2Hyperparams(double delta, double g2_plus_sigma2,
                                   double F, int R, int E);

// Constants of the equal-epoch analysis.
struct Theorem1Constants {
  double L = 0.0;
  double B = 1.0;
  double M = 0.0;       // max_i s_i w_i / p_i
  double P = 0.0;       // P^2 = max_i P_i^2 / |D_i|
  double sigma2 = 0.0;  // (1/|D|) sum_i sigma_i^2
  double beta() const { return 1.0 + (1.0 + P) * B + M * B * B; }
};

Theorem1Constants ComputeTheorem1Constants(const HeterogeneityConstants& hc,
                                           const Problem& problem,
                                           const SamplingScheme& scheme);

// 1 / (4 beta L E eta_g).
double Theorem1MaxStep(const Theorem1Constants& k, double eta_g, int E);

// Constants of the general analysis for an arbitrary configuration, with
// nominal step counts K_i = E_i |D_i|.
struct GenConstants {
  double M1 = 0.0;  // max_i h_i s_i w^_i
  double M2 = 0.0;  // (sum_i K_i) max_i w~_i / (W q_i c_i)
  double P = 0.0;   // P^2 = max_i P_i^2 / (3 |D_i| E_i^2)
  double sigma2 = 0.0;
  double beta = 1.0;  // 1 + M2 + (1 + P) B + M1 B^2
  // Factor by which c must be scaled so that c_i >= K_i (tight).
  double kappa = 1.0;
};

GenConstants ComputeGenConstants(const HeterogeneityConstants& hc,
                                 const Problem& problem,
                                 const GenConfig& config);

// Largest eta_l the general analysis admits for this configuration, in the
// configuration's own units: 1 / (4 beta L eta_g kappa).
double AdmissibleLocalStep(const GenConstants& k, double L, double eta_g);

// Per-step sizes eta_l / c_i.
Vector ClientStepSizes(const GenConfig& config, double eta_l);

// Normalized selection probabilities v_r / sum v over r = 0..R-1 with
// v_r = (1 - mu eta~ / 2)^{1 - r}. Uniform for mu = 0.
std::vector<double> OutputWeights(int R, double mu, double eta_tilde);

// Index drawn from OutputWeights with the given generator.
int SelectOutputIndex(int R, double mu, double eta_tilde, Rng& rng);

// Draws one of iterates x^0..x^{R-1} from the stream keyed by
// (seed, output-selection).
Vector SelectOutput(std::span<const Vector> iterates, double mu,
                    double eta_tilde, uint64_t seed);

}  // namespace fedsim

#endif  // FEDSIM_ALGORITHMS_H_
