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

#include "fedsim/compare.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <stdexcept>

#include "fedsim/csv.h"

namespace fedsim {
namespace {

struct OrderedPair {
  std::string better;
  std::string worse;
  bool strict;
  bool by_distance;  // final dist_sq instead of final f_gap
};

std::vector<OrderedPair> ExpectedPairs(const std::string& preset) {
  if (preset == "fig1_left") {
    return {{"fedshuffle", "fednova_rr", false, false},
            {"fednova_rr", "fedavg_rr", false, false}};
  }
  if (preset == "fig1_momentum") {
    return {{"fedshuffle", "fedavg_min", false, false},
            {"fedshuffle", "fedavg_mean", false, false},
            {"fedshuffle", "fednova_rr", false, false}};
  }
  if (preset == "fig1_sum_one") {
    return {{"fedshuffle", "fedshuffle_so", true, true}};
  }
  if (preset == "fig1_importance") {
    return {{"fedshuffle_is", "fedshuffle_uniform", false, false}};
  }
  if (preset == "appF_hybrid") {
    return {{"fedshuffle_gen", "fedshuffle", true, true}};
  }
  throw std::invalid_argument("no expected ordering for preset '" + preset +
                              "'");
}

}  // namespace

std::string MethodOfPath(const std::string& path) {
  const std::string stem = std::filesystem::path(path).stem().string();
  const auto pos = stem.rfind("_seed");
  return pos == std::string::npos ? stem : stem.substr(0, pos);
}

std::vector<MethodSummary> CompareRuns(const std::vector<std::string>& paths) {
  if (paths.size() < 2) {
    throw std::runtime_error("compare needs at least two CSV files");
  }
  std::map<std::string, MethodSummary> by_method;
  int rounds = -1;
  for (const auto& path : paths) {
    const std::vector<CsvRow> rows = ReadCsv(path);
    const int r = static_cast<int>(rows.size());
    if (rounds >= 0 && r != rounds) {
      throw std::runtime_error("'" + path + "' has " + std::to_string(r) +
                               " rounds, expected " + std::to_string(rounds));
    }
    rounds = r;
    MethodSummary& s = by_method[MethodOfPath(path)];
    s.method = MethodOfPath(path);
    s.rounds = r;
    ++s.runs;
    if (r == 0) continue;
    double best = rows.front().f_gap;
    for (const auto& row : rows) best = std::min(best, row.f_gap);
    s.final_f_gap += rows.back().f_gap;
    s.best_f_gap += best;
    s.final_dist_sq += rows.back().dist_sq;
  }
  std::vector<MethodSummary> out;
  for (auto& [name, s] : by_method) {
    s.final_f_gap /= s.runs;
    s.best_f_gap /= s.runs;
    s.final_dist_sq /= s.runs;
    out.push_back(s);
  }
  return out;
}

void PrintSummary(const std::vector<MethodSummary>& summaries,
                  std::ostream& out) {
  std::vector<MethodSummary> sorted = summaries;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const MethodSummary& a, const MethodSummary& b) {
                     return a.final_f_gap < b.final_f_gap;
                   });
  out << "rank,method,runs,rounds,final_f_gap,best_f_gap,final_dist_sq\n";
  int rank = 0;
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (i == 0 || sorted[i].final_f_gap != sorted[i - 1].final_f_gap) {
      rank = static_cast<int>(i) + 1;
    }
    const auto& s = sorted[i];
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%d,%s,%d,%d,%.6e,%.6e,%.6e\n", rank,
                  s.method.c_str(), s.runs, s.rounds, s.final_f_gap,
                  s.best_f_gap, s.final_dist_sq);
    out << buf;
  }
}

std::vector<std::string> CheckExpectedOrder(
    const std::string& preset, const std::vector<MethodSummary>& summaries) {
  const auto find = [&](const std::string& name) -> const MethodSummary& {
    for (const auto& s : summaries) {
      if (s.method == name) return s;
    }
    throw std::invalid_argument("no runs of method '" + name + "'");
  };
  std::vector<std::string> violations;
  for (const auto& pair : ExpectedPairs(preset)) {
    const MethodSummary& a = find(pair.better);
    const MethodSummary& b = find(pair.worse);
    const double va = pair.by_distance ? a.final_dist_sq : a.final_f_gap;
    const double vb = pair.by_distance ? b.final_dist_sq : b.final_f_gap;
    const bool ok = pair.strict ? va < vb : va <= vb;
    if (!ok) {
      char buf[256];
      std::snprintf(buf, sizeof(buf), "%s %s %s %s violated: %.6e vs %.6e",
                    pair.by_distance ? "final dist_sq" : "final f_gap",
                    pair.better.c_str(), pair.strict ? "<" : "<=",
                    pair.worse.c_str(), va, vb);
      violations.push_back(buf);
    }
  }
  return violations;
}

}  // namespace fedsim
