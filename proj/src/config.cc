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

#include "fedsim/config.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <utility>

namespace fedsim {
namespace {

using nlohmann::json;

void CheckKeys(const json& j, const std::set<std::string>& allowed,
               const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.contains(it.key())) {
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

const json& Field(const json& j, const std::string& key,
                  const std::string& where) {
  if (!j.contains(key)) {
    throw ConfigError("missing required key '" + key + "' in " + where);
  }
  return j.at(key);
}

std::string Path(const std::string& where, const std::string& key) {
  return where + "." + key;
}

int AsInt(const json& v, const std::string& what) {
  if (!v.is_number_integer()) throw ConfigError(what + " must be an integer");
  const auto x = v.get<int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ConfigError(what + " is out of range");
  }
  return static_cast<int>(x);
}

uint64_t AsU64(const json& v, const std::string& what) {
  if (v.is_number_unsigned()) return v.get<uint64_t>();
  if (v.is_number_integer() && v.get<int64_t>() >= 0) {
    return static_cast<uint64_t>(v.get<int64_t>());
  }
  throw ConfigError(what + " must be a nonnegative integer");
}

double AsDouble(const json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError(what + " must be a number");
  return v.get<double>();
}

std::string AsString(const json& v, const std::string& what) {
  if (!v.is_string()) throw ConfigError(what + " must be a string");
  return v.get<std::string>();
}

bool AsBool(const json& v, const std::string& what) {
  if (!v.is_boolean()) throw ConfigError(what + " must be true or false");
  return v.get<bool>();
}

const json& AsArray(const json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError(what + " must be an array");
  return v;
}

std::vector<int> AsIntArray(const json& v, const std::string& what) {
  std::vector<int> out;
  for (const auto& e : AsArray(v, what)) out.push_back(AsInt(e, what));
  return out;
}

std::vector<double> AsDoubleArray(const json& v, const std::string& what) {
  std::vector<double> out;
  for (const auto& e : AsArray(v, what)) out.push_back(AsDouble(e, what));
  return out;
}

std::vector<std::vector<double>> AsMatrix(const json& v,
                                          const std::string& what) {
  std::vector<std::vector<double>> out;
  for (const auto& e : AsArray(v, what)) out.push_back(AsDoubleArray(e, what));
  return out;
}

Vector ToVector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

ProblemSpec ParseProblem(const json& j) {
  const std::string where = "problem";
  if (!j.is_object()) throw ConfigError("problem must be a JSON object");
  ProblemSpec p;
  p.kind = AsString(Field(j, "kind", where), Path(where, "kind"));
  if (p.kind == "quad_obj" || p.kind == "importance_quadratic") {
    CheckKeys(j, {"kind", "weights"}, where);
  } else if (p.kind == "duplicated_quadratic") {
    CheckKeys(j, {"kind", "sizes", "anchors", "weights"}, where);
    p.sizes = AsIntArray(Field(j, "sizes", where), Path(where, "sizes"));
    if (j.contains("anchors")) {
      p.anchors = AsMatrix(j.at("anchors"), Path(where, "anchors"));
    }
  } else if (p.kind == "quadratic") {
    CheckKeys(j, {"kind", "anchors", "weights"}, where);
    for (const auto& client :
         AsArray(Field(j, "anchors", where), Path(where, "anchors"))) {
      p.sample_anchors.push_back(AsMatrix(client, Path(where, "anchors")));
    }
  } else if (p.kind == "logistic") {
    CheckKeys(j, {"kind", "sizes", "dim", "seed", "l2"}, where);
    p.sizes = AsIntArray(Field(j, "sizes", where), Path(where, "sizes"));
    p.dim = AsInt(Field(j, "dim", where), Path(where, "dim"));
    if (j.contains("seed")) p.seed = AsU64(j.at("seed"), Path(where, "seed"));
    if (j.contains("l2")) p.l2 = AsDouble(j.at("l2"), Path(where, "l2"));
  } else {
    throw ConfigError("unknown problem kind '" + p.kind + "'");
  }
  if (j.contains("weights")) {
    p.weights = AsDoubleArray(j.at("weights"), Path(where, "weights"));
  }
  for (int s : p.sizes) {
    if (s < 1) throw ConfigError("problem.sizes entries must be >= 1");
  }
  return p;
}

SamplingSpec ParseSampling(const json& j) {
  const std::string where = "sampling";
  if (!j.is_object()) throw ConfigError("sampling must be a JSON object");
  SamplingSpec s;
  s.kind = AsString(Field(j, "kind", where), Path(where, "kind"));
  if (s.kind == "full") {
    CheckKeys(j, {"kind"}, where);
  } else if (s.kind == "uniform_b") {
    CheckKeys(j, {"kind", "b"}, where);
    s.b = AsInt(Field(j, "b", where), Path(where, "b"));
  } else if (s.kind == "independent") {
    CheckKeys(j, {"kind", "p"}, where);
    s.probabilities = AsDoubleArray(Field(j, "p", where), Path(where, "p"));
  } else if (s.kind == "one_client") {
    CheckKeys(j, {"kind", "pi"}, where);
    s.probabilities = AsDoubleArray(Field(j, "pi", where), Path(where, "pi"));
  } else if (s.kind == "explicit") {
    CheckKeys(j, {"kind", "subsets"}, where);
    for (const auto& e :
         AsArray(Field(j, "subsets", where), Path(where, "subsets"))) {
      const std::string sub = "sampling.subsets[]";
      CheckKeys(e, {"clients", "probability"}, sub);
      s.subsets.push_back(
          {AsIntArray(Field(e, "clients", sub), Path(sub, "clients")),
           AsDouble(Field(e, "probability", sub), Path(sub, "probability"))});
    }
  } else {
    throw ConfigError("unknown sampling kind '" + s.kind + "'");
  }
  return s;
}

AlgorithmSpec ParseAlgorithm(const json& j) {
  const std::string where = "algorithm";
  CheckKeys(j,
            {"preset", "epochs", "normalizers", "agg_weights", "aggregation",
             "fixed_steps"},
            where);
  AlgorithmSpec a;
  a.preset = AsString(Field(j, "preset", where), Path(where, "preset"));
  try {
    ParsePreset(a.preset);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (j.contains("epochs")) {
    a.epochs = AsIntArray(j.at("epochs"), Path(where, "epochs"));
  }
  if (j.contains("normalizers")) {
    a.normalizers = AsDoubleArray(j.at("normalizers"), Path(where, "normalizers"));
  }
  if (j.contains("agg_weights")) {
    a.agg_weights = AsDoubleArray(j.at("agg_weights"), Path(where, "agg_weights"));
  }
  if (j.contains("aggregation")) {
    a.aggregation = AsString(j.at("aggregation"), Path(where, "aggregation"));
    if (a.aggregation != "unbiased" && a.aggregation != "sum_one") {
      throw ConfigError("algorithm.aggregation must be unbiased or sum_one");
    }
  }
  if (j.contains("fixed_steps")) {
    a.fixed_steps = AsString(j.at("fixed_steps"), Path(where, "fixed_steps"));
    if (a.fixed_steps != "none" && a.fixed_steps != "min" &&
        a.fixed_steps != "mean") {
      throw ConfigError("algorithm.fixed_steps must be none, min or mean");
    }
  }
  return a;
}

StepSpec ParseStep(const json& j) {
  StepSpec s;
  if (j.is_number()) {
    s.initial = j.get<double>();
  } else if (j.is_object()) {
    CheckKeys(j, {"initial", "decay_rounds"}, "eta_l");
    const json& init = Field(j, "initial", "eta_l");
    if (init.is_string()) {
      if (init.get<std::string>() != "auto") {
        throw ConfigError("eta_l.initial must be a number or \"auto\"");
      }
      s.auto_initial = true;
    } else {
      s.initial = AsDouble(init, "eta_l.initial");
    }
    if (j.contains("decay_rounds")) {
      s.decay_rounds = AsDouble(j.at("decay_rounds"), "eta_l.decay_rounds");
    }
  } else {
    throw ConfigError("eta_l must be a number or an object");
  }
  if (!(s.initial >= 0.0) || !std::isfinite(s.initial)) {
    throw ConfigError("eta_l.initial must be a finite nonnegative number");
  }
  if (!(s.decay_rounds >= 0.0)) {
    throw ConfigError("eta_l.decay_rounds must be nonnegative");
  }
  return s;
}

MomentumSpec ParseMomentum(const json& j) {
  const std::string where = "momentum";
  CheckKeys(j, {"kind", "coeff", "a", "practical", "init_draws"}, where);
  MomentumSpec m;
  m.kind = AsString(Field(j, "kind", where), Path(where, "kind"));
  if (m.kind != "none" && m.kind != "global" && m.kind != "mvr") {
    throw ConfigError("momentum.kind must be none, global or mvr");
  }
  if (j.contains("coeff")) m.coeff = AsDouble(j.at("coeff"), "momentum.coeff");
  if (j.contains("a")) m.a = AsDouble(j.at("a"), "momentum.a");
  if (j.contains("practical")) {
    m.practical = AsBool(j.at("practical"), "momentum.practical");
  }
  if (j.contains("init_draws")) {
    m.init_draws = AsInt(j.at("init_draws"), "momentum.init_draws");
  }
  return m;
}

}  // namespace

RunConfig ParseRunConfig(const json& j) {
  CheckKeys(j,
            {"problem", "algorithm", "sampling", "rounds", "seeds", "eta_l",
             "eta_g", "momentum", "truncation", "client_threads",
             "output_path"},
            "config");
  RunConfig c;
  c.problem = ParseProblem(Field(j, "problem", "config"));
  c.algorithm = ParseAlgorithm(Field(j, "algorithm", "config"));
  if (j.contains("sampling")) c.sampling = ParseSampling(j.at("sampling"));
  c.rounds = AsInt(Field(j, "rounds", "config"), "rounds");
  if (c.rounds < 0) throw ConfigError("rounds must be nonnegative");
  if (j.contains("seeds")) {
    for (const auto& s : AsArray(j.at("seeds"), "seeds")) {
      c.seeds.push_back(AsU64(s, "seeds"));
    }
  }
  c.eta_l = ParseStep(Field(j, "eta_l", "config"));
  if (j.contains("eta_g")) {
    c.eta_g = AsDouble(j.at("eta_g"), "eta_g");
    if (!(c.eta_g > 0.0)) throw ConfigError("eta_g must be positive");
  }
  if (j.contains("momentum")) c.momentum = ParseMomentum(j.at("momentum"));
  if (j.contains("truncation")) {
    c.truncation = AsIntArray(j.at("truncation"), "truncation");
  }
  if (j.contains("client_threads")) {
    c.client_threads = AsInt(j.at("client_threads"), "client_threads");
    if (c.client_threads < 1) throw ConfigError("client_threads must be >= 1");
  }
  if (j.contains("output_path")) {
    c.output_path = AsString(j.at("output_path"), "output_path");
  }
  return c;
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " +
                      e.what());
  }
  try {
    return ParseRunConfig(j);
  } catch (const ConfigError& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
}

json ToJson(const RunConfig& c) {
  json j;
  json p;
  p["kind"] = c.problem.kind;
  if (c.problem.kind == "duplicated_quadratic") {
    p["sizes"] = c.problem.sizes;
    if (!c.problem.anchors.empty()) p["anchors"] = c.problem.anchors;
  } else if (c.problem.kind == "quadratic") {
    p["anchors"] = c.problem.sample_anchors;
  } else if (c.problem.kind == "logistic") {
    p["sizes"] = c.problem.sizes;
    p["dim"] = c.problem.dim;
    p["seed"] = c.problem.seed;
    p["l2"] = c.problem.l2;
  }
  if (!c.problem.weights.empty()) p["weights"] = c.problem.weights;
  j["problem"] = p;

  json a;
  a["preset"] = c.algorithm.preset;
  if (!c.algorithm.epochs.empty()) a["epochs"] = c.algorithm.epochs;
  if (!c.algorithm.normalizers.empty()) {
    a["normalizers"] = c.algorithm.normalizers;
  }
  if (!c.algorithm.agg_weights.empty()) {
    a["agg_weights"] = c.algorithm.agg_weights;
  }
  if (!c.algorithm.aggregation.empty()) {
    a["aggregation"] = c.algorithm.aggregation;
  }
  if (!c.algorithm.fixed_steps.empty()) {
    a["fixed_steps"] = c.algorithm.fixed_steps;
  }
  j["algorithm"] = a;

  json s;
  s["kind"] = c.sampling.kind;
  if (c.sampling.kind == "uniform_b") s["b"] = c.sampling.b;
  if (c.sampling.kind == "independent") s["p"] = c.sampling.probabilities;
  if (c.sampling.kind == "one_client") s["pi"] = c.sampling.probabilities;
  if (c.sampling.kind == "explicit") {
    s["subsets"] = json::array();
    for (const auto& sub : c.sampling.subsets) {
      s["subsets"].push_back(
          {{"clients", sub.clients}, {"probability", sub.probability}});
    }
  }
  j["sampling"] = s;

  j["rounds"] = c.rounds;
  if (!c.seeds.empty()) j["seeds"] = c.seeds;
  if (c.eta_l.auto_initial || c.eta_l.decay_rounds > 0.0) {
    json e;
    if (c.eta_l.auto_initial) {
      e["initial"] = "auto";
    } else {
      e["initial"] = c.eta_l.initial;
    }
    e["decay_rounds"] = c.eta_l.decay_rounds;
    j["eta_l"] = e;
  } else {
    j["eta_l"] = c.eta_l.initial;
  }
  j["eta_g"] = c.eta_g;
  j["momentum"] = {{"kind", c.momentum.kind},
                   {"coeff", c.momentum.coeff},
                   {"a", c.momentum.a},
                   {"practical", c.momentum.practical},
                   {"init_draws", c.momentum.init_draws}};
  if (!c.truncation.empty()) j["truncation"] = c.truncation;
  j["client_threads"] = c.client_threads;
  if (!c.output_path.empty()) j["output_path"] = c.output_path;
  return j;
}

std::unique_ptr<Problem> BuildProblem(const ProblemSpec& spec) {
  try {
    if (spec.kind == "quad_obj" || spec.kind == "importance_quadratic") {
      QuadraticProblem base =
          spec.kind == "quad_obj" ? MakeQuadObj() : MakeImportanceQuadratic();
      if (spec.weights.empty()) {
        return std::make_unique<QuadraticProblem>(std::move(base));
      }
      std::vector<std::vector<Vector>> anchors;
      for (int i = 0; i < base.num_clients(); ++i) {
        anchors.emplace_back();
        for (int j = 0; j < base.client_size(i); ++j) {
          anchors.back().push_back(base.anchor(i, j));
        }
      }
      return std::make_unique<QuadraticProblem>(std::move(anchors),
                                                spec.weights);
    }
    if (spec.kind == "duplicated_quadratic") {
      if (spec.anchors.empty()) {
        QuadraticProblem canonical = MakeCanonicalDuplicated(spec.sizes);
        if (spec.weights.empty()) {
          return std::make_unique<QuadraticProblem>(std::move(canonical));
        }
        std::vector<Vector> anchors;
        for (int i = 0; i < canonical.num_clients(); ++i) {
          anchors.push_back(canonical.anchor(i, 0));
        }
        return std::make_unique<QuadraticProblem>(QuadraticProblem::Duplicated(
            std::move(anchors), spec.sizes, spec.weights));
      }
      std::vector<Vector> anchors;
      for (const auto& a : spec.anchors) anchors.push_back(ToVector(a));
      return std::make_unique<QuadraticProblem>(QuadraticProblem::Duplicated(
          std::move(anchors), spec.sizes, spec.weights));
    }
    if (spec.kind == "quadratic") {
      std::vector<std::vector<Vector>> anchors;
      for (const auto& client : spec.sample_anchors) {
        anchors.emplace_back();
        for (const auto& a : client) anchors.back().push_back(ToVector(a));
      }
      return std::make_unique<QuadraticProblem>(std::move(anchors),
                                                spec.weights);
    }
    if (spec.kind == "logistic") {
      return std::make_unique<LogisticProblem>(
          LogisticProblem::Synthetic(spec.seed, spec.sizes, spec.dim, spec.l2));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid problem: ") + e.what());
  }
  throw ConfigError("unknown problem kind '" + spec.kind + "'");
}

SamplingScheme BuildScheme(const SamplingSpec& spec, int num_clients) {
  try {
    if (spec.kind == "full") return SamplingScheme::Full(num_clients);
    if (spec.kind == "uniform_b") {
      return SamplingScheme::Uniform(num_clients, spec.b);
    }
    if (spec.kind == "independent" || spec.kind == "one_client") {
      if (static_cast<int>(spec.probabilities.size()) != num_clients) {
        throw ConfigError("sampling needs one probability per client");
      }
      return spec.kind == "independent"
                 ? SamplingScheme::Independent(spec.probabilities)
                 : SamplingScheme::OneClient(spec.probabilities);
    }
    if (spec.kind == "explicit") {
      std::vector<WeightedSubset> subsets;
      for (const auto& s : spec.subsets) {
        subsets.push_back({s.clients, s.probability});
      }
      return SamplingScheme::Explicit(num_clients, std::move(subsets));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid sampling: ") + e.what());
  }
  throw ConfigError("unknown sampling kind '" + spec.kind + "'");
}

double AutoLocalStep(const Problem& problem, const GenConfig& config) {
  std::vector<Vector> probes;
  probes.push_back(config.x0.size() ? config.x0 : Vector::Zero(problem.dim()));
  probes.push_back(Vector::Ones(problem.dim()));
  if (auto x = problem.KnownMinimizer()) probes.push_back(*x);
  // Fixed stream so the step does not depend on the run seed.
  Rng rng(DeriveSeed(0x70726f6265ULL, {}));
  for (int t = 0; t < 6; ++t) {
    Vector v(problem.dim());
    for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = 2.0 * rng.Uniform() - 1.0;
    probes.push_back(v);
  }
  const HeterogeneityConstants hc = EstimateConstants(problem, probes);
  return AdmissibleLocalStep(ComputeGenConstants(hc, problem, config), hc.L,
                             config.eta_g);
}

GenConfig BuildGenConfig(const RunConfig& c, const Problem& problem,
                         uint64_t seed) {
  const int n = problem.num_clients();
  try {
    const SamplingScheme scheme = BuildScheme(c.sampling, n);
    const Preset preset = ParsePreset(c.algorithm.preset);
    GenConfig g = MakePreset(preset, problem, scheme, c.rounds,
                             {c.eta_l.initial, c.eta_l.decay_rounds}, c.eta_g,
                             c.algorithm.epochs, c.truncation, seed);
    if (preset != Preset::kFedShuffleMvr) g.eta_g = c.eta_g;
    if (!c.algorithm.normalizers.empty()) {
      g.normalizers = ToVector(c.algorithm.normalizers);
    }
    if (!c.algorithm.agg_weights.empty() || !c.algorithm.aggregation.empty()) {
      const Vector weights = c.algorithm.agg_weights.empty()
                                 ? g.rule.agg_weights()
                                 : ToVector(c.algorithm.agg_weights);
      const bool sum_one =
          c.algorithm.aggregation.empty()
              ? g.rule.kind() == AggregationKind::kSumOne
              : c.algorithm.aggregation == "sum_one";
      g.rule = sum_one ? AggregationRule::SumOne(weights, scheme)
                       : AggregationRule::Unbiased(weights);
    }
    if (c.algorithm.fixed_steps == "none") g.fixed_steps = FixedStepRule::kNone;
    if (c.algorithm.fixed_steps == "min") g.fixed_steps = FixedStepRule::kMin;
    if (c.algorithm.fixed_steps == "mean") g.fixed_steps = FixedStepRule::kMean;
    if (c.momentum.kind == "none" && preset != Preset::kFedShuffleMvr) {
      g.momentum.kind = MomentumKind::kNone;
    } else if (c.momentum.kind == "global") {
      g.momentum.kind = MomentumKind::kGlobal;
    } else if (c.momentum.kind == "mvr") {
      g.momentum.kind = MomentumKind::kMvr;
    }
    g.momentum.coeff = c.momentum.coeff;
    g.momentum.a = c.momentum.a;
    g.momentum.practical = c.momentum.practical;
    g.momentum.init_draws = c.momentum.init_draws;
    g.client_threads = c.client_threads;
    if (c.eta_l.auto_initial) g.eta_l.initial = AutoLocalStep(problem, g);
    ValidateConfig(g, problem);
    return g;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid run configuration: ") + e.what());
  }
}

uint64_t DefaultSeed() {
  const char* env = std::getenv("FEDSIM_SEED");
  if (env == nullptr || *env == '\0') return 0;
  const std::string s(env);
  uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("FEDSIM_SEED must be an unsigned integer, got '" + s +
                      "'");
  }
  return v;
}

std::string SeededPath(const std::string& path, uint64_t seed) {
  std::filesystem::path p(path);
  const std::string name =
      p.stem().string() + "_seed" + std::to_string(seed) + p.extension().string();
  return (p.parent_path() / name).string();
}

}  // namespace fedsim
