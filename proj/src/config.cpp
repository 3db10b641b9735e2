// Copyright 2026 The fedad Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fedad/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"

#include "fedad/errors.hpp"

namespace fedad {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (known.count(key) == 0) {
      throw ConfigError("config: unknown key \"" + key + "\" in " + where);
    }
  }
}

}  // namespace

std::size_t default_heads_for(const std::string& dataset_name) {
  if (dataset_name == "nsl_kdd") return 2;
  if (dataset_name == "spambase") return 3;
  if (dataset_name == "shuttle") return 3;
  if (dataset_name == "arrhythmia") return 3;
  return 0;
}

void ExperimentConfig::validate() const {
  if (dataset.name.empty()) throw ConfigError("config: dataset.name is required");
  if (dataset.name != "synthetic" && (dataset.csv.empty() || dataset.schema.empty())) {
    throw ConfigError("config: dataset.csv and dataset.schema are required for " +
                      dataset.name);
  }
  if (devices == 0) throw ConfigError("config: devices must be >= 1");
  if (batch_size == 0 || batch_size % 2 != 0) {
    throw ConfigError("config: batch_size must be even and positive, got " +
                      std::to_string(batch_size));
  }
  if (learning_rate <= 0.0) throw ConfigError("config: learning_rate must be > 0");
  if (feature_dim == 0 && (feature_ratio <= 0.0 || feature_ratio > 1.0)) {
    throw ConfigError("config: feature_ratio must be in (0, 1], got " +
                      std::to_string(feature_ratio));
  }
  if (tau <= 0.0 || tau >= 1.0) throw ConfigError("config: tau must be in (0, 1)");
  if (participation <= 0.0 || participation > 1.0) {
    throw ConfigError("config: participation must be in (0, 1]");
  }
  if (dirichlet_alpha < 0.0) throw ConfigError("config: dirichlet_alpha must be >= 0");
  if (threads < 1) throw ConfigError("config: threads must be >= 1");
  if (rounds == 0) throw ConfigError("config: rounds must be >= 1");
  if (eval_every == 0) throw ConfigError("config: eval_every must be >= 1");
  if (dp.enabled) dp.validate();
  if (split.train_normal_fraction <= 0.0 || split.train_normal_fraction >= 1.0) {
    throw ConfigError("config: split.train_normal_fraction must be in (0, 1)");
  }
  if (split.noise_fraction < 0.0 || split.noise_fraction >= 1.0) {
    throw ConfigError("config: split.noise_fraction must be in [0, 1)");
  }
  if (split.labeled_anomalies == 0) {
    throw ConfigError("config: split.labeled_anomalies must be >= 1");
  }
  if (scorer.hidden1 == 0 || scorer.hidden2 == 0) {
    throw ConfigError("config: scorer hidden sizes must be positive");
  }
}

std::size_t ExperimentConfig::resolve_feature_dim(std::size_t input_dim) const {
  std::size_t m = feature_dim;
  if (m == 0) {
    m = static_cast<std::size_t>(
        std::ceil(feature_ratio * static_cast<double>(input_dim)));
  }
  if (m == 0 || m > input_dim) {
    throw ConfigError("config: feature dim " + std::to_string(m) +
                      " must be in [1, " + std::to_string(input_dim) + "]");
  }
  return m;
}

std::size_t ExperimentConfig::resolve_num_heads(std::size_t input_dim) const {
  std::size_t heads = num_heads;
  if (heads == 0) heads = default_heads_for(dataset.name);
  if (heads == 0) heads = 1;
  if (input_dim % heads != 0) {
    throw ConfigError("config: num_heads " + std::to_string(heads) +
                      " does not divide input dim " + std::to_string(input_dim));
  }
  return heads;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }

  ExperimentConfig cfg;
  try {
    reject_unknown_keys(j, {"dataset", "synthetic", "devices", "batch_size",
                            "learning_rate", "num_heads", "feature_dim",
                            "feature_ratio", "tau", "rounds", "eval_every", "seed",
                            "participation", "dirichlet_alpha", "batch_as_sequence",
                            "early_stop", "threads", "dp", "split", "scorer",
                            "output_dir", "run_name"},
                        path);

    const json& d = j.at("dataset");
    reject_unknown_keys(d, {"name", "csv", "schema"}, path + " dataset");
    cfg.dataset.name = d.at("name").get<std::string>();
    cfg.dataset.csv = d.value("csv", "");
    cfg.dataset.schema = d.value("schema", "");

    if (j.contains("synthetic")) {
      const json& s = j["synthetic"];
      reject_unknown_keys(s, {"dim", "normals", "anomalies", "seed"},
                          path + " synthetic");
      cfg.synthetic.dim = s.value("dim", cfg.synthetic.dim);
      cfg.synthetic.normals = s.value("normals", cfg.synthetic.normals);
      cfg.synthetic.anomalies = s.value("anomalies", cfg.synthetic.anomalies);
      cfg.synthetic.seed = s.value("seed", cfg.synthetic.seed);
    }

    cfg.devices = j.value("devices", cfg.devices);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.num_heads = j.value("num_heads", cfg.num_heads);
    cfg.feature_dim = j.value("feature_dim", cfg.feature_dim);
    cfg.feature_ratio = j.value("feature_ratio", cfg.feature_ratio);
    cfg.tau = j.value("tau", cfg.tau);
    cfg.rounds = j.value("rounds", cfg.rounds);
    cfg.eval_every = j.value("eval_every", cfg.eval_every);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.participation = j.value("participation", cfg.participation);
    cfg.dirichlet_alpha = j.value("dirichlet_alpha", cfg.dirichlet_alpha);
    cfg.batch_as_sequence = j.value("batch_as_sequence", cfg.batch_as_sequence);
    cfg.early_stop = j.value("early_stop", cfg.early_stop);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.run_name = j.value("run_name", cfg.run_name);

    if (j.contains("dp")) {
      const json& dp = j["dp"];
      reject_unknown_keys(dp, {"enabled", "epsilon", "delta", "clip_norm",
                               "sampling_rate"},
                          path + " dp");
      cfg.dp.enabled = dp.value("enabled", cfg.dp.enabled);
      cfg.dp.epsilon = dp.value("epsilon", cfg.dp.epsilon);
      cfg.dp.delta = dp.value("delta", cfg.dp.delta);
      cfg.dp.clip_norm = dp.value("clip_norm", cfg.dp.clip_norm);
      cfg.dp.sampling_rate = dp.value("sampling_rate", cfg.dp.sampling_rate);
    }

    if (j.contains("split")) {
      const json& s = j["split"];
      reject_unknown_keys(
          s, {"train_normal_fraction", "labeled_anomalies", "noise_fraction"},
          path + " split");
      cfg.split.train_normal_fraction =
          s.value("train_normal_fraction", cfg.split.train_normal_fraction);
      cfg.split.labeled_anomalies =
          s.value("labeled_anomalies", cfg.split.labeled_anomalies);
      cfg.split.noise_fraction = s.value("noise_fraction", cfg.split.noise_fraction);
    }

    if (j.contains("scorer")) {
      const json& s = j["scorer"];
      reject_unknown_keys(s, {"hidden1", "hidden2"}, path + " scorer");
      cfg.scorer.hidden1 = s.value("hidden1", cfg.scorer.hidden1);
      cfg.scorer.hidden2 = s.value("hidden2", cfg.scorer.hidden2);
    }
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }

  cfg.validate();
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["dataset"] = {{"name", cfg.dataset.name},
                  {"csv", cfg.dataset.csv},
                  {"schema", cfg.dataset.schema}};
  if (cfg.dataset.name == "synthetic") {
    j["synthetic"] = {{"dim", cfg.synthetic.dim},
                      {"normals", cfg.synthetic.normals},
                      {"anomalies", cfg.synthetic.anomalies},
                      {"seed", cfg.synthetic.seed}};
  }
  j["devices"] = cfg.devices;
  j["batch_size"] = cfg.batch_size;
  j["learning_rate"] = cfg.learning_rate;
  j["num_heads"] = cfg.num_heads;
  j["feature_dim"] = cfg.feature_dim;
  j["feature_ratio"] = cfg.feature_ratio;
  j["tau"] = cfg.tau;
  j["rounds"] = cfg.rounds;
  j["eval_every"] = cfg.eval_every;
  j["seed"] = cfg.seed;
  j["participation"] = cfg.participation;
  j["dirichlet_alpha"] = cfg.dirichlet_alpha;
  j["batch_as_sequence"] = cfg.batch_as_sequence;
  j["early_stop"] = cfg.early_stop;
  j["threads"] = cfg.threads;
  j["dp"] = {{"enabled", cfg.dp.enabled},
             {"epsilon", cfg.dp.epsilon},
             {"delta", cfg.dp.delta},
             {"clip_norm", cfg.dp.clip_norm},
             {"sampling_rate", cfg.dp.sampling_rate}};
  j["split"] = {{"train_normal_fraction", cfg.split.train_normal_fraction},
                {"labeled_anomalies", cfg.split.labeled_anomalies},
                {"noise_fraction", cfg.split.noise_fraction}};
  j["scorer"] = {{"hidden1", cfg.scorer.hidden1}, {"hidden2", cfg.scorer.hidden2}};
  j["output_dir"] = cfg.output_dir;
  j["run_name"] = cfg.run_name;
  return j.dump(2) + "\n";
}

}  // namespace fedad
