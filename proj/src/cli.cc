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

#include "fedsim/cli.h"

#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fedsim/aggregation.h"
#include "fedsim/algorithms.h"
#include "fedsim/compare.h"
#include "fedsim/config.h"
#include "fedsim/csv.h"
#include "fedsim/experiments.h"
#include "fedsim/lemmas.h"

namespace fedsim {
namespace {

std::vector<uint64_t> RunSeeds(const RunConfig& config,
                               std::optional<uint64_t> override_seed) {
  if (override_seed) return {*override_seed};
  if (!config.seeds.empty()) return config.seeds;
  return {DefaultSeed()};
}

int DoRun(const std::string& path, std::optional<uint64_t> seed,
          std::ostream& out, std::ostream& err) {
  const RunConfig config = LoadRunConfig(path);
  const std::vector<uint64_t> seeds = RunSeeds(config, seed);
  if (config.output_path.empty() && seeds.size() > 1) {
    throw ConfigError("output_path is required when running several seeds");
  }
  const auto problem = BuildProblem(config.problem);
  std::vector<GenConfig> runs;
  for (uint64_t s : seeds) runs.push_back(BuildGenConfig(config, *problem, s));

  for (size_t t = 0; t < runs.size(); ++t) {
    const RunLog log = Run(runs[t], *problem);
    if (log.outside_theory) {
      err << "warning: MVR with several clients per round has no "
             "convergence guarantee\n";
    }
    if (config.output_path.empty()) {
      WriteCsv(log, out);
    } else {
      const std::string target = seeds.size() > 1
                                     ? SeededPath(config.output_path, seeds[t])
                                     : config.output_path;
      WriteCsvFile(log, target);
      out << target << '\n';
    }
  }
  return kExitOk;
}

int DoDiagnose(const std::string& path, std::ostream& out) {
  const RunConfig config = LoadRunConfig(path);
  const auto problem = BuildProblem(config.problem);
  const GenConfig g = BuildGenConfig(
      config, *problem, config.seeds.empty() ? 0 : config.seeds.front());
  Vector steps(problem->num_clients());
  for (int i = 0; i < problem->num_clients(); ++i) {
    steps(i) = g.epochs[i] * problem->client_size(i) -
               (g.truncation.empty() ? 0 : g.truncation[i]);
  }
  const EffectiveObjective eff =
      EffectiveWeights(steps, g.normalizers, g.rule, g.scheme);
  out << "client_id,w,w_hat\n";
  for (int i = 0; i < problem->num_clients(); ++i) {
    out << i << ',' << FormatDouble(problem->weights()(i)) << ','
        << FormatDouble(eff.w_hat(i)) << '\n';
  }
  return kExitOk;
}

int DoCheckLemmas(int n, int trials, uint64_t seed, std::ostream& out) {
  std::vector<LemmaReport> reports;
  try {
    reports = CheckLemmas(n, trials, seed);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  bool all = true;
  for (const auto& r : reports) {
    out << (r.pass ? "PASS " : "FAIL ") << r.name << " cases=" << r.cases
        << " worst=" << FormatDouble(r.worst) << '\n';
    all = all && r.pass;
  }
  return all ? kExitOk : kExitFailure;
}

int DoCompare(const std::vector<std::string>& files, const std::string& preset,
              std::ostream& out) {
  const std::vector<MethodSummary> summaries = CompareRuns(files);
  PrintSummary(summaries, out);
  if (preset.empty()) return kExitOk;
  std::vector<std::string> violations;
  try {
    violations = CheckExpectedOrder(preset, summaries);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  for (const auto& v : violations) out << "FAIL " << v << '\n';
  if (violations.empty()) out << "PASS " << preset << " ordering\n";
  return violations.empty() ? kExitOk : kExitFailure;
}

}  // namespace

int CliMain(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Deterministic federated optimization simulator", "fedsim"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<uint64_t> seed;
  app.add_option("--seed", seed, "Master seed override");

  auto* run = app.add_subcommand("run", "Run one configuration");
  std::string config_path;
  run->add_option("--config", config_path, "JSON run configuration")
      ->required();

  auto* experiment = app.add_subcommand("experiment", "Run a preset experiment");
  std::string preset;
  std::string out_dir = ".";
  int num_seeds = 1;
  int threads = 1;
  experiment->add_option("--preset", preset, "Experiment name")->required();
  experiment->add_option("--out", out_dir, "Output directory");
  experiment->add_option("--seeds", num_seeds, "Number of seeds")
      ->check(CLI::PositiveNumber);
  experiment->add_option("--threads", threads, "Concurrent runs")
      ->check(CLI::PositiveNumber);

  auto* diagnose =
      app.add_subcommand("diagnose-weights", "Print effective weights");
  diagnose->add_option("--config", config_path, "JSON run configuration")
      ->required();

  auto* lemmas = app.add_subcommand("check-lemmas", "Exact variance checks");
  int lemma_n = 5;
  int trials = 100;
  lemmas->add_option("--n", lemma_n, "Number of clients");
  lemmas->add_option("--trials", trials, "Random trials");

  auto* compare = app.add_subcommand("compare", "Summarize run CSVs");
  std::vector<std::string> files;
  std::string assert_preset;
  compare->add_option("files", files, "CSV files")->required();
  compare->add_option("--assert", assert_preset,
                      "Check the ordering expected for an experiment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (*run) return DoRun(config_path, seed, out, err);
    if (*diagnose) return DoDiagnose(config_path, out);
    if (*lemmas) return DoCheckLemmas(lemma_n, trials, seed.value_or(0), out);
    if (*compare) return DoCompare(files, assert_preset, out);
    if (*experiment) {
      const uint64_t base = seed ? *seed : DefaultSeed();
      std::vector<uint64_t> seeds;
      for (int k = 0; k < num_seeds; ++k) seeds.push_back(base + k);
      for (const auto& p : RunExperiment(preset, out_dir, seeds, threads)) {
        out << p << '\n';
      }
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const DivergenceError& e) {
    err << "diverged: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitConfigError;
}

}  // namespace fedsim
