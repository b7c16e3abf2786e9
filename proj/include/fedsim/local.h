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

#ifndef FEDSIM_LOCAL_H_
#define FEDSIM_LOCAL_H_

#include <cstdint>
#include <vector>

#include "fedsim/problems.h"

namespace fedsim {

// One random permutation of {0, ..., size - 1} per local epoch.
struct PermutationPlan {
  std::vector<std::vector<int>> epochs;
};

// Fisher-Yates shuffles, epoch e drawn from the stream keyed by
// (master_seed, round, client, e). Independent of call order.
PermutationPlan MakePermutations(uint64_t master_seed, int round, int client,
                                 int epochs, int size);

struct LocalWorkSpec {
  int epochs = 1;
  // Step normalizer c_i: every local step uses step / normalizer.
  double normalizer = 1.0;
  double step = 0.0;
  // Trailing steps of the final epoch that the client does not run.
  int truncation = 0;
};

// Momentum-corrected direction a g(y) + (1 - a) m + (1 - a)(g(y) - g(anchor)),
// g the sample gradient at the current permutation index.
struct MvrDirection {
  double a = 1.0;
  const Vector* momentum = nullptr;
  const Vector* anchor = nullptr;
};

struct LocalResult {
  Vector y;
  Vector delta;  // y - x_start
  int steps_taken = 0;
};

// Throws std::invalid_argument on an invalid spec or a plan that does not
// cover spec.epochs epochs of the client's samples.
void ValidateLocalWork(const Problem& problem, int client,
                       const LocalWorkSpec& spec, const PermutationPlan& plan);

LocalResult RunLocal(const Problem& problem, int client, const Vector& x_start,
                     const LocalWorkSpec& spec, const PermutationPlan& plan);

LocalResult RunLocalMvr(const Problem& problem, int client,
                        const Vector& x_start, const LocalWorkSpec& spec,
                        const MvrDirection& mvr, const PermutationPlan& plan);

// The plain local-step count E_i |D_i| - truncation.
int LocalStepCount(const Problem& problem, int client,
                   const LocalWorkSpec& spec);

// Work spec running exactly `steps` reshuffled steps: ceil(steps / |D_i|)
// epochs with the surplus of the last epoch truncated.
LocalWorkSpec FixedStepWork(const Problem& problem, int client, int steps,
                            double normalizer, double step);

}  // namespace fedsim

#endif  // FEDSIM_LOCAL_H_
