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

#include "fedad/matrix.hpp"
#include "fedad/rng.hpp"

namespace fedad {

// Column description for a CSV source. Exactly one of positive_labels /
// negative_labels must be non-empty: with positive_labels, a row is an
// anomaly iff its label cell is in the set; with negative_labels, iff it is
// NOT in the set (useful when anomalies span many raw names).
struct CsvSchema {
  std::string name;
  bool has_header = false;
  int label_column = -1;  // raw column index; negative counts from the end
  std::vector<std::string> positive_labels;
  std::vector<std::string> negative_labels;
  std::vector<std::size_t> categorical_columns;  // one-hot expanded in place
  std::vector<std::size_t> ignore_columns;       // dropped before expansion
  std::size_t expected_dim = 0;        // post-expansion width; 0 = unchecked
  std::size_t expected_normals = 0;    // 0 = unchecked
  std::size_t expected_anomalies = 0;  // 0 = unchecked
};

CsvSchema load_schema(const std::string& path);

struct Dataset {
  std::string name;
  Matrix features;          // n x d, raw (pre-normalization) values
  std::vector<int> labels;  // 1 = anomaly

  std::size_t size() const { return features.rows; }
  std::size_t dim() const { return features.cols; }
  std::size_t count_label(int value) const;
};

// Parses and validates a CSV against the schema. Categorical columns are
// expanded into one indicator column per sorted distinct value, in place.
Dataset load_csv(const std::string& csv_path, const CsvSchema& schema);

// Features plus the binary label as a final column, one row per line.
void write_csv(const std::string& path, const Dataset& ds);

// Per-column min-max scaling to [0,1], fit on a caller-chosen row subset
// (the training split) so evaluation rows never leak into the statistics.
// Zero-range columns map to 0.
struct Normalizer {
  std::vector<double> col_min, col_max;

  static Normalizer fit(const Matrix& features, const std::vector<std::size_t>& rows);
  Matrix apply(const Matrix& features) const;
  Matrix gather(const Matrix& features, const std::vector<std::size_t>& rows) const;
};

struct WeakSplitConfig {
  double train_normal_fraction = 0.8;
  std::size_t labeled_anomalies = 30;
  double noise_fraction = 0.02;  // of the unlabeled-normal pool, as hidden anomalies
};

// Index sets of the weak-supervision partition. Unlabeled rows are treated
// as normal during training even though `noise` rows are true anomalies.
struct WeakSupervisionSplit {
  std::vector<std::size_t> train_unlabeled;  // normals + noise, trained as label 0
  std::vector<std::size_t> train_labeled;    // known anomalies, label 1
  std::vector<std::size_t> test;             // held-out normals + remaining anomalies
  std::vector<std::size_t> noise;            // the hidden anomalies inside train_unlabeled
};

WeakSupervisionSplit make_split(const Dataset& ds, const WeakSplitConfig& cfg,
                                std::uint64_t seed);

// One device's slice of the training pools.
struct DeviceShard {
  std::vector<std::size_t> unlabeled;
  std::vector<std::size_t> labeled;
};

// Splits both training pools across K devices, disjoint and exhaustive.
// alpha = 0 gives near-equal IID shards (sizes differ by at most 1);
// alpha > 0 draws per-device pool proportions from Dirichlet(alpha) to
// simulate quantity skew, but every device keeps at least one sample per
// pool so its sampler stays well-defined.
std::vector<DeviceShard> shard(const WeakSupervisionSplit& split, std::size_t devices,
                               std::uint64_t seed, double alpha = 0.0);

struct Batch {
  Matrix features;
  std::vector<int> labels;
};

// Emits batches of exactly b/2 unlabeled rows (label 0, shuffled epoch
// cycle) and b/2 labeled-anomaly rows (label 1, sampled with replacement),
// with the row order shuffled.
class BatchSampler {
 public:
  BatchSampler(DeviceShard shard, std::size_t batch_size, Rng rng);

  Batch next(const Matrix& normalized_features);

 private:
  DeviceShard shard_;
  std::size_t batch_size_;
  Rng rng_;
  std::vector<std::size_t> unlabeled_order_;
  std::size_t unlabeled_pos_ = 0;
};

struct SyntheticConfig {
  std::size_t dim = 20;
  std::size_t normals = 5000;
  std::size_t anomalies = 200;
  std::uint64_t seed = 1;
};

// Two unit-variance Gaussian clusters of normal points plus uniform box
// outliers kept away from both cluster centers.
Dataset gen_synthetic(const SyntheticConfig& cfg);

}  // namespace fedad
