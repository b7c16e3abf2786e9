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

#ifndef FEDSIM_COMPARE_H_
#define FEDSIM_COMPARE_H_

#include <ostream>
#include <string>
#include <vector>

namespace fedsim {

// Seed-averaged summary of the CSVs of one method.
struct MethodSummary {
  std::string method;
  int runs = 0;
  int rounds = 0;
  double final_f_gap = 0.0;
  double best_f_gap = 0.0;
  double final_dist_sq = 0.0;
};

// "out/fedshuffle_seed3.csv" -> "fedshuffle".
std::string MethodOfPath(const std::string& path);

// Groups files by method and averages over seeds. Throws std::runtime_error
// when files disagree on schema or round count.
std::vector<MethodSummary> CompareRuns(const std::vector<std::string>& paths);

// Table sorted by final f_gap; equal values share a rank.
void PrintSummary(const std::vector<MethodSummary>& summaries,
                  std::ostream& out);

// Violations of the ordering an experiment preset is expected to show; empty
// when all hold. Throws std::invalid_argument for an unknown preset or a
// missing method.
std::vector<std::string> CheckExpectedOrder(
    const std::string& preset, const std::vector<MethodSummary>& summaries);

}  // namespace fedsim

#endif  // FEDSIM_COMPARE_H_
