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

#pragma once

#include <cstdint>
#include <string>

#include "fedad/dataset.hpp"
#include "fedad/dp.hpp"
#include "fedad/scorer.hpp"

namespace fedad {

struct DatasetRef {
  std::string name;    // "synthetic" switches to the generator
  std::string csv;     // path, unused for synthetic
  std::string schema;  // path, unused for synthetic
};

struct ExperimentConfig {
  DatasetRef dataset;
  SyntheticConfig synthetic;  // used when dataset.name == "synthetic"

  std::size_t devices = 3;
  std::size_t batch_size = 32;
  double learning_rate = 1e-4;
  std::size_t num_heads = 0;   // 0 = apply the per-dataset default
  std::size_t feature_dim = 0; // 0 = derive from feature_ratio
  double feature_ratio = 0.5;  // m = ceil(ratio * d) when feature_dim == 0
  double tau = 0.5;
  std::uint32_t rounds = 1000;
  std::uint32_t eval_every = 10;
  std::uint64_t seed = 1;
  double participation = 1.0;  // per-round keep probability per device
  double dirichlet_alpha = 0.0;
  bool batch_as_sequence = false;
  bool early_stop = true;
  int threads = 1;  // 1 = strict serial mode (bitwise-reproducible runs)

  DpConfig dp;
  WeakSplitConfig split;
  ScorerConfig scorer;  // feature_dim filled in at run time

  std::string output_dir = "runs";
  std::string run_name;  // default: dataset name + seed

  // Field-range checks that do not need the dataset dimension.
  void validate() const;

  // Dimension-dependent resolution: returns m and verifies n_h | d, m <= d.
  std::size_t resolve_feature_dim(std::size_t input_dim) const;
  std::size_t resolve_num_heads(std::size_t input_dim) const;
};

// Reads a config JSON file; unknown keys are rejected so typos fail loudly.
ExperimentConfig load_config(const std::string& path);

// Serializes back to JSON (the archived copy stored beside run results).
std::string config_to_json(const ExperimentConfig& cfg);

// Per-dataset default head counts; 0 when the dataset has no default.
std::size_t default_heads_for(const std::string& dataset_name);

}  // namespace fedad
