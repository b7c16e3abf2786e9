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

#ifndef FEDSIM_EXPERIMENTS_H_
#define FEDSIM_EXPERIMENTS_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "fedsim/config.h"

namespace fedsim {

// One curve of an experiment: a method label (the CSV file stem) and the
// run configuration it expands to. Seeds are filled in at run time.
struct ExperimentMethod {
  std::string label;
  RunConfig config;
};

std::vector<std::string> ExperimentNames();

// Throws ConfigError for an unknown name.
std::vector<ExperimentMethod> ExpandExperiment(const std::string& name);

// Runs every method for every seed and writes <out_dir>/<label>_seed<k>.csv.
// All configurations are validated before the first run starts. Returns the
// written paths in (method, seed) order.
std::vector<std::string> RunExperiment(const std::string& name,
                                       const std::string& out_dir,
                                       const std::vector<uint64_t>& seeds,
                                       int threads);

}  // namespace fedsim

#endif  // FEDSIM_EXPERIMENTS_H_
