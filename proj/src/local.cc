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

#include "fedsim/local.h"

#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

#include "fedsim/rng.h"

namespace fedsim {

PermutationPlan MakePermutations(uint64_t master_seed, int round, int client,
                                 int epochs, int size) {
  if (size < 1) throw std::invalid_argument("permutation size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("epochs must be nonnegative");
  PermutationPlan plan;
  plan.epochs.reserve(static_cast<size_t>(epochs));
  for (int e = 0; e < epochs; ++e) {
    Rng rng(DeriveSeed(master_seed,
                       {static_cast<uint64_t>(StreamTag::kPermutation),
                        static_cast<uint64_t>(round),
                        static_cast<uint64_t>(client),
                        static_cast<uint64_t>(e)}));
    std::vector<int> perm(static_cast<size_t>(size));
    std::iota(perm.begin(), perm.end(), 0);
    for (int t = size - 1; t > 0; --t) {
      const auto j = static_cast<int>(rng.Below(static_cast<uint64_t>(t) + 1));
      std::swap(perm[t], perm[j]);
    }
    plan.epochs.push_back(std::move(perm));
  }
  return plan;
}

void ValidateLocalWork(const Problem& problem, int client,
                       const LocalWorkSpec& spec, const PermutationPlan& plan) {
  const int size = problem.client_size(client);
  if (spec.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(spec.normalizer > 0.0)) {
    throw std::invalid_argument("step normalizer must be positive");
  }
  if (!(spec.step >= 0.0)) {
    throw std::invalid_argument("local step size must be nonnegative");
  }
  if (spec.truncation < 0 || spec.truncation >= spec.epochs * size) {
    throw std::invalid_argument(
        "truncation " + std::to_string(spec.truncation) +
        " must lie in [0, " + std::to_string(spec.epochs * size) + ")");
  }
  if (static_cast<int>(plan.epochs.size()) < spec.epochs) {
    throw std::invalid_argument("permutation plan covers too few epochs");
  }
  for (int e = 0; e < spec.epochs; ++e) {
    if (static_cast<int>(plan.epochs[e].size()) != size) {
      throw std::invalid_argument("permutation size differs from |D_i|");
    }
  }
}

int LocalStepCount(const Problem& problem, int client,
                   const LocalWorkSpec& spec) {
  return spec.epochs * problem.client_size(client) - spec.truncation;
}

LocalWorkSpec FixedStepWork(const Problem& problem, int client, int steps,
                            double normalizer, double step) {
  if (steps < 1) throw std::invalid_argument("fixed step count must be >= 1");
  const int size = problem.client_size(client);
  LocalWorkSpec spec;
  spec.epochs = (steps + size - 1) / size;
  spec.truncation = spec.epochs * size - steps;
  spec.normalizer = normalizer;
  spec.step = step;
  return spec;
}

namespace {

// Visits the first LocalStepCount() (epoch, sample) pairs in plan order.
template <typename Fn>
int ForEachStep(const Problem& problem, int client, const LocalWorkSpec& spec,
                const PermutationPlan& plan, Fn&& fn) {
  const int size = problem.client_size(client);
  const int total = spec.epochs * size - spec.truncation;
  int taken = 0;
  for (int e = 0; e < spec.epochs && taken < total; ++e) {
    for (int j = 0; j < size && taken < total; ++j, ++taken) {
      fn(plan.epochs[e][j]);
    }
  }
  return taken;
}

}  // namespace

LocalResult RunLocal(const Problem& problem, int client, const Vector& x_start,
                     const LocalWorkSpec& spec, const PermutationPlan& plan) {
  ValidateLocalWork(problem, client, spec, plan);
  const double step = spec.step / spec.normalizer;
  LocalResult out;
  out.y = x_start;
  out.steps_taken = ForEachStep(problem, client, spec, plan, [&](int sample) {
    out.y -= step * problem.Gradient(client, sample, out.y);
  });
  out.delta = out.y - x_start;
  return out;
}

LocalResult RunLocalMvr(const Problem& problem, int client,
                        const Vector& x_start, const LocalWorkSpec& spec,
                        const MvrDirection& mvr, const PermutationPlan& plan) {
  ValidateLocalWork(problem, client, spec, plan);
  if (mvr.momentum == nullptr || mvr.anchor == nullptr) {
    throw std::invalid_argument("momentum-corrected steps need m and x^r");
  }
  if (!(mvr.a >= 0.0 && mvr.a <= 1.0)) {
    throw std::invalid_argument("momentum parameter a must lie in [0, 1]");
  }
  if (mvr.momentum->size() != problem.dim() ||
      mvr.anchor->size() != problem.dim()) {
    throw std::invalid_argument("momentum or anchor has the wrong dimension");
  }
  const double step = spec.step / spec.normalizer;
  const double a = mvr.a;
  const double b = 1.0 - a;
  LocalResult out;
  out.y = x_start;
  out.steps_taken = ForEachStep(problem, client, spec, plan, [&](int sample) {
    const Vector g = problem.Gradient(client, sample, out.y);
    const Vector g_anchor = problem.Gradient(client, sample, *mvr.anchor);
    const Vector d = a * g + b * *mvr.momentum + b * (g - g_anchor);
    out.y -= step * d;
  });
  out.delta = out.y - x_start;
  return out;
}

}  // namespace fedsim
