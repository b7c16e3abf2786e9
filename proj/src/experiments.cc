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

#include "fedsim/experiments.h"

#include <algorithm>
#include <exception>
#include <filesystem>
#include <memory>
#include <thread>

#include "fedsim/csv.h"

namespace fedsim {
namespace {

RunConfig Base(const std::string& problem, int rounds) {
  RunConfig c;
  c.problem.kind = problem;
  c.rounds = rounds;
  c.eta_l.auto_initial = true;
  c.eta_l.decay_rounds = 100.0;
  return c;
}

ExperimentMethod Method(const std::string& preset, RunConfig base) {
  base.algorithm.preset = preset;
  return {preset, std::move(base)};
}

}  // namespace

std::vector<std::string> ExperimentNames() {
  return {"fig1_left", "fig1_momentum", "fig1_sum_one", "fig1_importance",
          "appF_hybrid"};
}

std::vector<ExperimentMethod> ExpandExperiment(const std::string& name) {
  std::vector<ExperimentMethod> out;
  if (name == "fig1_left" || name == "fig1_momentum") {
    RunConfig base = Base("quad_obj", 2000);
    if (name == "fig1_momentum") {
      base.momentum.kind = "global";
      base.momentum.coeff = 0.9;
      base.momentum.practical = true;
    }
    for (const char* p : {"fedavg_rr", "fedavg_min", "fedavg_mean",
                          "fednova_rr", "fedshuffle"}) {
      out.push_back(Method(p, base));
    }
  } else if (name == "fig1_sum_one") {
    RunConfig base = Base("quad_obj", 5000);
    base.sampling.kind = "uniform_b";
    base.sampling.b = 2;
    out.push_back(Method("fedshuffle_so", base));
    out.push_back(Method("fedshuffle", base));
  } else if (name == "fig1_importance") {
    RunConfig base = Base("importance_quadratic", 2000);
    base.algorithm.preset = "fedshuffle";
    base.sampling.kind = "one_client";
    // Proportional to the client sizes (8, 1, 1).
    base.sampling.probabilities = {0.8, 0.1, 0.1};
    out.push_back({"fedshuffle_is", base});
    base.sampling.probabilities = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    out.push_back({"fedshuffle_uniform", base});
  } else if (name == "appF_hybrid") {
    RunConfig base = Base("quad_obj", 2000);
    // The single-sample client always finishes its round.
    base.truncation = {0, 1, 1};
    for (const char* p : {"fednova_rr", "fedshuffle", "fedshuffle_gen"}) {
      out.push_back(Method(p, base));
    }
  } else {
    throw ConfigError("unknown experiment preset '" + name + "'");
  }
  return out;
}

std::vector<std::string> RunExperiment(const std::string& name,
                                       const std::string& out_dir,
                                       const std::vector<uint64_t>& seeds,
                                       int threads) {
  const std::vector<ExperimentMethod> methods = ExpandExperiment(name);
  struct Job {
    std::shared_ptr<const Problem> problem;
    GenConfig config;
    std::string path;
  };
  std::vector<Job> jobs;
  for (const auto& m : methods) {
    std::shared_ptr<const Problem> problem = BuildProblem(m.config.problem);
    for (uint64_t seed : seeds) {
      GenConfig g = BuildGenConfig(m.config, *problem, seed);
      g.method = m.label;
      const std::string file = m.label + "_seed" + std::to_string(seed) + ".csv";
      jobs.push_back({problem, std::move(g),
                      (std::filesystem::path(out_dir) / file).string()});
    }
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory '" + out_dir +
                             "': " + ec.message());
  }

  const int count = static_cast<int>(jobs.size());
  const int workers = std::clamp(threads, 1, std::max(count, 1));
  std::vector<std::exception_ptr> errors(static_cast<size_t>(count));
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int t = w; t < count; t += workers) {
          try {
            WriteCsvFile(Run(jobs[t].config, *jobs[t].problem), jobs[t].path);
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
  std::vector<std::string> paths;
  for (const auto& j : jobs) paths.push_back(j.path);
  return paths;
}

}  // namespace fedsim
