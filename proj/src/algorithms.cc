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

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <thread>
#include <utility>

namespace fedsim {
namespace {

constexpr uint64_t Tag(StreamTag tag) { return static_cast<uint64_t>(tag); }

Vector NominalSteps(const Problem& problem, std::span<const int> epochs) {
  Vector k(problem.num_clients());
  for (int i = 0; i < problem.num_clients(); ++i) {
    k(i) = static_cast<double>(epochs[i]) * problem.client_size(i);
  }
  return k;
}

// Runs fn(t) for t in [0, count) on up to `threads` threads. The first
// exception (by index) is rethrown after all threads finish.
template <typename Fn>
void ParallelFor(int count, int threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (int t = 0; t < count; ++t) fn(t);
    return;
  }
  const int workers = std::min(threads, count);
  std::vector<std::exception_ptr> errors(static_cast<size_t>(count));
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int t = w; t < count; t += workers) {
          try {
            fn(t);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void CheckFinite(const Vector& x, int round) {
  const double norm = x.norm();
  if (!std::isfinite(norm) || norm > kDivergenceRadius) {
    throw DivergenceError("iterate diverged at round " + std::to_string(round) +
                          ": ||x|| = " + std::to_string(norm));
  }
}

}  // namespace

std::string PresetName(Preset preset) {
  switch (preset) {
    case Preset::kFedShuffle:
      return "fedshuffle";
    case Preset::kFedShuffleSumOne:
      return "fedshuffle_so";
    case Preset::kFedAvgRR:
      return "fedavg_rr";
    case Preset::kFedAvgMin:
      return "fedavg_min";
    case Preset::kFedAvgMean:
      return "fedavg_mean";
    case Preset::kFedNovaRR:
      return "fednova_rr";
    case Preset::kFedShuffleMvr:
      return "fedshuffle_mvr";
    case Preset::kFedShuffleGen:
      return "fedshuffle_gen";
  }
  return "unknown";
}

std::vector<Preset> AllPresets() {
  return {Preset::kFedShuffle, Preset::kFedShuffleSumOne, Preset::kFedAvgRR,
          Preset::kFedAvgMin,  Preset::kFedAvgMean,       Preset::kFedNovaRR,
          Preset::kFedShuffleMvr, Preset::kFedShuffleGen};
}

Preset ParsePreset(const std::string& name) {
  for (Preset p : AllPresets()) {
    if (PresetName(p) == name) return p;
  }
  throw std::invalid_argument("unknown algorithm preset '" + name + "'");
}

GenConfig MakePreset(Preset preset, const Problem& problem,
                     const SamplingScheme& scheme, int rounds,
                     StepSchedule eta_l, double eta_g, std::vector<int> epochs,
                     std::vector<int> truncation, uint64_t seed) {
  const int n = problem.num_clients();
  if (scheme.num_clients() != n) {
    throw std::invalid_argument("sampling scheme and problem disagree on n");
  }
  if (epochs.empty()) epochs.assign(static_cast<size_t>(n), 1);
  if (static_cast<int>(epochs.size()) != n) {
    throw std::invalid_argument("one epoch count per client required");
  }
  GenConfig c;
  c.method = PresetName(preset);
  c.rounds = rounds;
  c.eta_g = eta_g;
  c.eta_l = eta_l;
  c.epochs = std::move(epochs);
  c.truncation = std::move(truncation);
  c.scheme = scheme;
  c.seed = seed;

  const Vector& w = problem.weights();
  const Vector work = NominalSteps(problem, c.epochs);
  switch (preset) {
    case Preset::kFedShuffle:
      c.normalizers = work;
      c.rule = AggregationRule::Unbiased(w);
      break;
    case Preset::kFedShuffleSumOne:
      c.normalizers = work;
      c.rule = AggregationRule::SumOne(w, scheme);
      break;
    case Preset::kFedAvgRR:
    case Preset::kFedAvgMin:
    case Preset::kFedAvgMean:
      c.normalizers = Vector::Ones(n);
      c.rule = AggregationRule::SumOne(w, scheme);
      if (preset == Preset::kFedAvgMin) c.fixed_steps = FixedStepRule::kMin;
      if (preset == Preset::kFedAvgMean) c.fixed_steps = FixedStepRule::kMean;
      break;
    case Preset::kFedNovaRR: {
      const double tau = w.dot(work);
      c.normalizers = Vector::Ones(n);
      c.rule = AggregationRule::Unbiased(tau * w.cwiseQuotient(work));
      break;
    }
    case Preset::kFedShuffleMvr:
      c.normalizers = work;
      c.rule = AggregationRule::Unbiased(w);
      c.eta_g = 1.0;
      c.momentum.kind = MomentumKind::kMvr;
      break;
    case Preset::kFedShuffleGen: {
      Vector steps = work;
      for (size_t i = 0; i < c.truncation.size() && i < size_t(n); ++i) {
        steps(static_cast<Eigen::Index>(i)) -= c.truncation[i];
      }
      c.normalizers = work;
      // q_i = 1 under the unbiased rule.
      c.rule = AggregationRule::Unbiased(
          ConsistencyRestoringWeights(w, steps, work, Vector::Ones(n)));
      break;
    }
  }
  return c;
}

void ValidateConfig(const GenConfig& config, const Problem& problem) {
  const int n = problem.num_clients();
  const auto require = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(config.rounds >= 0, "rounds must be nonnegative");
  require(std::isfinite(config.eta_g) && config.eta_g > 0.0,
          "global step must be positive");
  require(std::isfinite(config.eta_l.initial) && config.eta_l.initial >= 0.0,
          "local step must be nonnegative");
  require(config.eta_l.decay_rounds >= 0.0, "decay_rounds must be >= 0");
  require(static_cast<int>(config.epochs.size()) == n,
          "one epoch count per client required");
  for (int e : config.epochs) require(e >= 1, "epochs must be >= 1");
  require(config.normalizers.size() == n, "one normalizer per client required");
  require((config.normalizers.array() > 0.0).all(),
          "normalizers must be positive");
  require(config.rule.agg_weights().size() == n,
          "one aggregation weight per client required");
  require(config.scheme.num_clients() == n,
          "sampling scheme and problem disagree on n");
  require(config.truncation.empty() ||
              static_cast<int>(config.truncation.size()) == n,
          "truncation needs one entry per client");
  for (size_t i = 0; i < config.truncation.size(); ++i) {
    const int total = config.epochs[i] * problem.client_size(static_cast<int>(i));
    require(config.truncation[i] >= 0 && config.truncation[i] < total,
            "truncation of client " + std::to_string(i) + " must lie in [0, " +
                std::to_string(total) + ")");
  }
  require(config.client_threads >= 1, "client_threads must be >= 1");
  require(config.x0.size() == 0 || config.x0.size() == problem.dim(),
          "x0 has the wrong dimension");
  const auto& m = config.momentum;
  require(m.a >= 0.0 && m.a <= 1.0, "momentum parameter a must lie in [0, 1]");
  require(m.coeff >= 0.0 && m.coeff < 1.0,
          "momentum coefficient must lie in [0, 1)");
  require(m.init_draws >= 0, "init_draws must be nonnegative");
  require(!(config.fixed_steps != FixedStepRule::kNone &&
            m.kind == MomentumKind::kMvr),
          "fixed step counts cannot be combined with MVR");
}

int FixedStepCount(const Problem& problem, std::span<const int> epochs,
                   const ClientSet& sampled, FixedStepRule rule) {
  if (sampled.empty()) throw std::invalid_argument("empty client set");
  long long lo = std::numeric_limits<long long>::max();
  long long sum = 0;
  for (int i : sampled) {
    const long long k = static_cast<long long>(epochs[i]) * problem.client_size(i);
    lo = std::min(lo, k);
    sum += k;
  }
  long long k = 0;
  switch (rule) {
    case FixedStepRule::kMin:
      k = lo;
      break;
    case FixedStepRule::kMean: {
      // Nearest integer to sum / |S|, ties up: floor((2 sum + |S|) / (2|S|)).
      const long long s = static_cast<long long>(sampled.size());
      k = (2 * sum + s) / (2 * s);
      break;
    }
    case FixedStepRule::kNone:
      throw std::invalid_argument("no fixed step rule selected");
  }
  if (k <= 0) throw std::invalid_argument("fixed step count K must be >= 1");
  return static_cast<int>(k);
}

Vector SampledGradient(const Problem& problem, const ClientSet& sampled,
                       const SamplingScheme& scheme, const Vector& x) {
  Vector g = Vector::Zero(problem.dim());
  const Vector& w = problem.weights();
  const Vector& p = scheme.inclusion();
  for (int i : sampled) g += (w(i) / p(i)) * problem.ClientGradient(i, x);
  return g;
}

MomentumState MvrInit(const Problem& problem, const SamplingScheme& scheme,
                      int draws, uint64_t seed, const Vector& x0, double a) {
  if (draws < 1) throw std::invalid_argument("need at least one draw");
  Rng rng(DeriveSeed(seed, {Tag(StreamTag::kMomentumInit)}));
  // Client gradients at x0 are fixed; cache them per client.
  std::map<int, Vector> cache;
  const Vector& w = problem.weights();
  const Vector& p = scheme.inclusion();
  Vector sum = Vector::Zero(problem.dim());
  for (int t = 0; t < draws; ++t) {
    for (int i : scheme.Draw(rng)) {
      auto it = cache.find(i);
      if (it == cache.end()) {
        it = cache.emplace(i, problem.ClientGradient(i, x0)).first;
      }
      sum += (w(i) / p(i)) * it->second;
    }
  }
  MomentumState state;
  state.m = sum / static_cast<double>(draws);
  state.a = a;
  state.initialized = true;
  return state;
}

MomentumState MvrMomentumUpdate(const MomentumState& state,
                                const ClientSet& sampled,
                                const Problem& problem, const Vector& x,
                                const Vector& x_prev,
                                const SamplingScheme& scheme) {
  if (!state.initialized) {
    throw StateError("momentum used before initialization");
  }
  const double a = state.a;
  const double b = 1.0 - a;
  const Vector g = SampledGradient(problem, sampled, scheme, x);
  const Vector g_prev = SampledGradient(problem, sampled, scheme, x_prev);
  MomentumState out = state;
  out.m = a * g + b * state.m + b * (g - g_prev);
  return out;
}

Vector PracticalGradientEstimate(const Vector& delta, int steps,
                                 double client_step) {
  if (!(client_step > 0.0)) {
    throw std::invalid_argument("gradient estimate needs a positive step");
  }
  if (steps < 1) throw std::invalid_argument("gradient estimate needs steps");
  return -delta / (steps * client_step);
}

RunLog Run(const GenConfig& config, const Problem& problem) {
  ValidateConfig(config, problem);
  const int n = problem.num_clients();
  const auto& mom = config.momentum;
  const bool mvr = mom.kind == MomentumKind::kMvr;
  const bool global = mom.kind == MomentumKind::kGlobal;

  Vector x = config.x0.size() ? config.x0 : Vector::Zero(problem.dim());
  const std::optional<Vector> x_star = problem.KnownMinimizer();
  const double f_star = x_star ? problem.FullValue(*x_star)
                               : std::numeric_limits<double>::quiet_NaN();

  RunLog log;
  log.method = config.method;
  log.outside_theory =
      mvr && n > 1 && config.scheme.kind() != SchemeKind::kOneClient;
  log.rounds.reserve(static_cast<size_t>(config.rounds));

  // Global momentum replaces the aggregate by a heavy-ball buffer over
  // unbiased gradient estimates. The buffer is scaled by the aggregate's
  // nominal total step W eta_l so both updates have the same magnitude.
  double work_scale = 0.0;
  if (global) {
    work_scale = EffectiveWeights(NominalSteps(problem, config.epochs),
                                  config.normalizers, config.rule,
                                  config.scheme)
                     .W;
  }
  Vector velocity = Vector::Zero(problem.dim());
  MomentumState momentum;
  Vector x_prev = x;

  const Vector& w = problem.weights();
  const Vector& p = config.scheme.inclusion();

  for (int r = 0; r < config.rounds; ++r) {
    if (config.keep_iterates) log.iterates.push_back(x);
    const double eta = config.eta_l.At(r);
    Rng sampler(DeriveSeed(config.seed,
                           {Tag(StreamTag::kSampling), static_cast<uint64_t>(r)}));
    const ClientSet sampled = config.scheme.Draw(sampler);

    if (mvr) {
      if (r == 0) {
        const int draws = mom.init_draws > 0 ? mom.init_draws : config.rounds;
        momentum = MvrInit(problem, config.scheme, draws, config.seed, x, mom.a);
      } else if (!mom.practical) {
        momentum = MvrMomentumUpdate(momentum, sampled, problem, x, x_prev,
                                     config.scheme);
      }
    }

    int fixed_k = 0;
    if (config.fixed_steps != FixedStepRule::kNone) {
      fixed_k = FixedStepCount(problem, config.epochs, sampled,
                               config.fixed_steps);
    }

    const int count = static_cast<int>(sampled.size());
    std::vector<LocalResult> results(static_cast<size_t>(count));
    ParallelFor(count, config.client_threads, [&](int t) {
      const int i = sampled[t];
      LocalWorkSpec spec;
      if (fixed_k > 0) {
        spec = FixedStepWork(problem, i, fixed_k, config.normalizers(i), eta);
      } else {
        spec.epochs = config.epochs[i];
        spec.normalizer = config.normalizers(i);
        spec.step = eta;
        spec.truncation = config.truncation.empty() ? 0 : config.truncation[i];
      }
      const PermutationPlan plan = MakePermutations(
          config.seed, r, i, spec.epochs, problem.client_size(i));
      if (mvr) {
        MvrDirection dir{mom.a, &momentum.m, &x};
        results[t] = RunLocalMvr(problem, i, x, spec, dir, plan);
      } else {
        results[t] = RunLocal(problem, i, x, spec, plan);
      }
    });

    RoundRecord rec;
    rec.round = r + 1;
    rec.sampled = sampled;
    std::map<int, Vector> deltas;
    for (int t = 0; t < count; ++t) {
      rec.steps.push_back(results[t].steps_taken);
      rec.steps_total += results[t].steps_taken;
      deltas.emplace(sampled[t], std::move(results[t].delta));
    }

    // Unbiased estimate of grad f(x^r) from the returned deltas.
    const auto delta_gradient = [&] {
      Vector g = Vector::Zero(problem.dim());
      for (int t = 0; t < count; ++t) {
        const int i = sampled[t];
        g += (w(i) / p(i)) *
             PracticalGradientEstimate(deltas.at(i), rec.steps[t],
                                       eta / config.normalizers(i));
      }
      return g;
    };

    Vector x_next;
    if (global) {
      const Vector g = mom.practical
                           ? delta_gradient()
                           : SampledGradient(problem, sampled, config.scheme, x);
      velocity = mom.coeff * velocity + (1.0 - mom.coeff) * g;
      x_next = x - (config.eta_g * eta * work_scale) * velocity;
    } else {
      const Vector delta = Aggregate(config.rule, sampled, deltas, config.scheme);
      x_next = x + config.eta_g * delta;
    }
    if (mvr && mom.practical) {
      momentum.m = mom.a * delta_gradient() + (1.0 - mom.a) * momentum.m;
    }

    x_prev = std::move(x);
    x = std::move(x_next);
    CheckFinite(x, r + 1);

    rec.f_gap = problem.FullValue(x) - f_star;
    rec.dist_sq = x_star ? (x - *x_star).squaredNorm()
                         : std::numeric_limits<double>::quiet_NaN();
    rec.grad_norm_sq = problem.FullGradient(x).squaredNorm();
    log.rounds.push_back(std::move(rec));
  }
  log.final_iterate = x;
  return log;
}

RunLog RunFixedSteps(GenConfig config, const Problem& problem,
                     FixedStepRule rule) {
  if (rule == FixedStepRule::kNone) {
    throw std::invalid_argument("choose the min or mean step rule");
  }
  config.fixed_steps = rule;
  return Run(config, problem);
}

Theorem2Params Theorem2Hyperparams(double delta, double g2_plus_sigma2,
                                   double F, int R, int E) {
  if (!(delta > 0.0)) {
    throw std::invalid_argument("Hessian similarity delta must be positive");
  }
  if (R < 1 || E < 1) throw std::invalid_argument("R and E must be >= 1");
  if (!(F >= 0.0) || !(g2_plus_sigma2 >= 0.0)) {
    throw std::invalid_argument("F and G^2 + sigma^2 must be nonnegative");
  }
  const double noise_arm =
      std::cbrt(F / (R * delta * delta * g2_plus_sigma2));  // +inf if noiseless
  Theorem2Params out;
  out.eta_l = std::min(1.0 / delta, noise_arm) / (40.0 * E);
  out.a = std::max(1152.0 * E * E * delta * delta * out.eta_l * out.eta_l,
                   1.0 / R);
  if (out.a > 1.0) {
    out.a = 1.0;
    out.clamped = true;
  }
  return out;
}

Theorem1Constants ComputeTheorem1Constants(const HeterogeneityConstants& hc,
                                           const Problem& problem,
                                           const SamplingScheme& scheme) {
  Theorem1Constants k;
  k.L = hc.L;
  k.B = hc.B;
  k.M = PartialParticipationConstant(scheme, problem.weights());
  double p2 = 0.0;
  double s2 = 0.0;
  for (int i = 0; i < problem.num_clients(); ++i) {
    const double Pi = i < static_cast<int>(hc.P.size()) ? hc.P[i] : 0.0;
    const double si = i < static_cast<int>(hc.sigma.size()) ? hc.sigma[i] : 0.0;
    p2 = std::max(p2, Pi * Pi / problem.client_size(i));
    s2 += si * si;
  }
  k.P = std::sqrt(p2);
  k.sigma2 = s2 / problem.total_size();
  return k;
}

double Theorem1MaxStep(const Theorem1Constants& k, double eta_g, int E) {
  if (!(k.L > 0.0) || !(eta_g > 0.0) || E < 1) {
    throw std::invalid_argument("need L > 0, eta_g > 0 and E >= 1");
  }
  return 1.0 / (4.0 * k.beta() * k.L * E * eta_g);
}

GenConstants ComputeGenConstants(const HeterogeneityConstants& hc,
                                 const Problem& problem,
                                 const GenConfig& config) {
  const int n = problem.num_clients();
  const Vector work = NominalSteps(problem, config.epochs);
  const EffectiveObjective eff =
      EffectiveWeights(work, config.normalizers, config.rule, config.scheme);
  const NormalizerStats st =
      ComputeNormalizerStats(config.scheme, config.rule.normalizer());
  const Vector& wt = config.rule.agg_weights();
  GenConstants k;
  double m2 = 0.0;
  double p2 = 0.0;
  k.kappa = 0.0;
  for (int i = 0; i < n; ++i) {
    const double Ei = config.epochs[i];
    const double Di = problem.client_size(i);
    const double Pi = i < static_cast<int>(hc.P.size()) ? hc.P[i] : 0.0;
    const double si = i < static_cast<int>(hc.sigma.size()) ? hc.sigma[i] : 0.0;
    k.M1 = std::max(k.M1, st.h(i) * st.s(i) * eff.w_hat(i));
    m2 = std::max(m2, wt(i) / (eff.W * eff.q(i) * config.normalizers(i)));
    p2 = std::max(p2, Pi * Pi / (3.0 * Di * Ei * Ei));
    k.sigma2 += eff.w_hat(i) * si * si / (3.0 * Di * Ei * Ei);
    k.kappa = std::max(k.kappa, work(i) / config.normalizers(i));
  }
  k.M2 = work.sum() * m2;
  k.P = std::sqrt(p2);
  k.beta = 1.0 + k.M2 + (1.0 + k.P) * hc.B + k.M1 * hc.B * hc.B;
  return k;
}

double AdmissibleLocalStep(const GenConstants& k, double L, double eta_g) {
  if (!(L > 0.0) || !(eta_g > 0.0)) {
    throw std::invalid_argument("need L > 0 and eta_g > 0");
  }
  return 1.0 / (4.0 * k.beta * L * eta_g * k.kappa);
}

Vector ClientStepSizes(const GenConfig& config, double eta_l) {
  return eta_l * config.normalizers.cwiseInverse();
}

std::vector<double> OutputWeights(int R, double mu, double eta_tilde) {
  if (R < 1) throw std::invalid_argument("no iterates to select from");
  if (!(mu >= 0.0)) throw std::invalid_argument("mu must be nonnegative");
  const double base = 1.0 - mu * eta_tilde / 2.0;
  if (!(base > 0.0)) {
    throw std::invalid_argument("mu * eta~ / 2 must be below one");
  }
  // v_r / v_{R-1} = base^{R-1-r}; the largest weight is the last one.
  std::vector<double> v(static_cast<size_t>(R));
  double total = 0.0;
  for (int r = 0; r < R; ++r) {
    v[r] = std::pow(base, R - 1 - r);
    total += v[r];
  }
  for (double& x : v) x /= total;
  return v;
}

int SelectOutputIndex(int R, double mu, double eta_tilde, Rng& rng) {
  const std::vector<double> v = OutputWeights(R, mu, eta_tilde);
  const double u = rng.Uniform();
  double acc = 0.0;
  for (int r = 0; r < R; ++r) {
    acc += v[r];
    if (u < acc) return r;
  }
  return R - 1;
}

Vector SelectOutput(std::span<const Vector> iterates, double mu,
                    double eta_tilde, uint64_t seed) {
  if (iterates.empty()) throw std::invalid_argument("no iterates to select");
  Rng rng(DeriveSeed(seed, {Tag(StreamTag::kOutputSelection)}));
  return iterates[SelectOutputIndex(static_cast<int>(iterates.size()), mu,
                                    eta_tilde, rng)];
}

}  // namespace fedsim
