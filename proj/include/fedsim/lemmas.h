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

#ifndef FEDSIM_LEMMAS_H_
#define FEDSIM_LEMMAS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "fedsim/rng.h"
#include "fedsim/sampling.h"

namespace fedsim {

struct LemmaReport {
  std::string name;
  bool pass = true;
  int cases = 0;
  // Largest margin seen: lhs - rhs for bounds, absolute error for identities.
  double worst = 0.0;
};

// Every scheme kind on n clients with random parameters: full, uniform for
// each b, independent, one-client, and an explicit subset list.
std::vector<SamplingScheme> RandomSchemes(int n, Rng& rng);

// Exact enumeration checks over `trials` random vector sets per scheme:
//   var_arbitrary           lhs <= rhs and the P - pp^T eigen check
//   sampling_wo_replacement exact agreement of the k-subset variance
//   general_bound           lhs <= rhs and the H - 11^T eigen check, for the
//                           unbiased and sum-one normalizers
//   unbiased_mean           E[sum_{i in S} w_i zeta_i / p_i] = sum w_i zeta_i
// Requires 1 <= n <= kMaxEnumerableClients.
std::vector<LemmaReport> CheckLemmas(int n, int trials, uint64_t seed);

}  // namespace fedsim

#endif  // FEDSIM_LEMMAS_H_
