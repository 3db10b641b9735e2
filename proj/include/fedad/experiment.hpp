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
#include <vector>

#include "fedad/config.hpp"
#include "fedad/dataset.hpp"

namespace fedad {

struct MetricsRecord {
  std::uint32_t round = 0;
  double auc_roc = 0.0;
  double auc_pr = 0.0;
  double global_loss = 0.0;
};

// Detects the first round at which the best global loss of the latest
// 50-round window improved on the previous window's best by less than 1e-5.
class ConvergenceMonitor {
 public:
  explicit ConvergenceMonitor(std::size_t window = 50, double min_improvement = 1e-5);

  // Returns true when this round completes the convergence rule.
  bool push(double loss);
  std::int64_t convergence_round() const { return convergence_round_; }

 private:
  std::size_t window_;
  double min_improvement_;
  std::vector<double> losses_;
  std::int64_t convergence_round_ = -1;
};

struct ExperimentResult {
  std::string run_dir;
  std::uint32_t rounds_run = 0;
  std::int64_t convergence_round = -1;  // -1 = rule never satisfied
  double final_auc_roc = 0.0;
  double final_auc_pr = 0.0;
  double final_loss = 0.0;
  std::uint64_t bytes_up = 0;
  std::uint64_t bytes_down = 0;
  std::uint64_t feature_payload_per_round = 0;
  double sigma = 0.0;  // 0 when DP is off
  std::vector<MetricsRecord> history;
};

// Everything run_experiment needs in memory: dataset, split, normalized
// views. Exposed so tests and the CLI can stage data once and reuse it.
struct PreparedData {
  Dataset dataset;
  WeakSupervisionSplit split;
  Normalizer normalizer;
  Matrix normalized;  // all rows, training-split statistics
  Matrix test_features;
  std::vector<int> test_labels;
};

PreparedData prepare_data(const ExperimentConfig& cfg);

// Trains per the config and writes the run directory: config.json,
// split_manifest.json, rounds.jsonl, metrics.jsonl, metrics.csv,
// run_meta.json, checkpoints/final.ckpt. Deterministic for threads = 1.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Reuses an already prepared dataset (sweeps share the load/split work).
ExperimentResult run_experiment(const ExperimentConfig& cfg, const PreparedData& data);

// Loads the checkpoint of a finished run and re-evaluates it on the test
// split reconstructed from the archived config.
MetricsRecord evaluate_run(const std::string& run_dir);

struct OverheadRow {
  double ratio = 0.0;
  std::size_t feature_dim = 0;
  std::uint64_t feature_payload_bytes = 0;  // per round, all devices
  double normalized = 0.0;                  // against the ratio-1.0 row
  std::int64_t convergence_round = -1;
  double final_auc_roc = 0.0;
};

// Runs the config at each m-ratio and normalizes the per-round feature
// payload against the ratio-1.0 run.
std::vector<OverheadRow> compare_overhead(const ExperimentConfig& base,
                                          const std::vector<double>& ratios);

struct SweepCell {
  std::size_t devices = 0;
  std::uint64_t seed = 0;
  ExperimentResult result;
};

// Grid over device counts and seeds, one run directory per cell.
std::vector<SweepCell> sweep_devices(const ExperimentConfig& base,
                                     const std::vector<std::size_t>& device_grid,
                                     const std::vector<std::uint64_t>& seeds);

}  // namespace fedad
