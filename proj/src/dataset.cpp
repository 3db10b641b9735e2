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

#include "fedad/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

#include "fedad/errors.hpp"

namespace fedad {

namespace {

using nlohmann::json;

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // Trim surrounding whitespace.
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    cells.push_back(first == std::string::npos ? std::string()
                                               : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, std::size_t line_no, std::size_t col) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw DataError("csv line " + std::to_string(line_no) + ", column " +
                    std::to_string(col + 1) + ": expected a number, got \"" + cell +
                    "\"");
  }
  return value;
}

}  // namespace

CsvSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("schema: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("schema " + path + ": " + e.what());
  }

  CsvSchema s;
  try {
    s.name = j.at("name").get<std::string>();
    s.has_header = j.value("has_header", false);
    s.label_column = j.value("label_column", -1);
    s.positive_labels = j.value("positive_labels", std::vector<std::string>{});
    s.negative_labels = j.value("negative_labels", std::vector<std::string>{});
    s.categorical_columns = j.value("categorical_columns", std::vector<std::size_t>{});
    s.ignore_columns = j.value("ignore_columns", std::vector<std::size_t>{});
    s.expected_dim = j.value("expected_dim", std::size_t{0});
    s.expected_normals = j.value("expected_normals", std::size_t{0});
    s.expected_anomalies = j.value("expected_anomalies", std::size_t{0});
  } catch (const json::exception& e) {
    throw DataError("schema " + path + ": " + e.what());
  }
  if (s.positive_labels.empty() == s.negative_labels.empty()) {
    throw DataError("schema " + path +
                    ": exactly one of positive_labels/negative_labels must be set");
  }
  return s;
}

std::size_t Dataset::count_label(int value) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), value));
}

Dataset load_csv(const std::string& csv_path, const CsvSchema& schema) {
  std::ifstream in(csv_path);
  if (!in) throw DataError("csv: cannot open " + csv_path);

  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && schema.has_header) continue;
    if (line.empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (width == 0) {
      width = cells.size();
      if (width < 2) {
        throw DataError("csv line " + std::to_string(line_no) +
                        ": need at least one feature and a label");
      }
    } else if (cells.size() != width) {
      throw DataError("csv line " + std::to_string(line_no) + ": expected " +
                      std::to_string(width) + " columns, got " +
                      std::to_string(cells.size()));
    }
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw DataError("csv " + csv_path + ": no data rows");

  const std::size_t label_col =
      schema.label_column >= 0
          ? static_cast<std::size_t>(schema.label_column)
          : width - static_cast<std::size_t>(-schema.label_column);
  if (label_col >= width) {
    throw DataError("csv " + csv_path + ": label column " +
                    std::to_string(schema.label_column) + " out of range for width " +
                    std::to_string(width));
  }

  std::set<std::size_t> dropped(schema.ignore_columns.begin(),
                                schema.ignore_columns.end());
  dropped.insert(label_col);
  std::set<std::size_t> categorical(schema.categorical_columns.begin(),
                                    schema.categorical_columns.end());

  // Feature columns in original order, with their kind.
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < width; ++c) {
    if (dropped.count(c) == 0) feature_cols.push_back(c);
  }

  // Sorted vocabulary per categorical column.
  std::map<std::size_t, std::vector<std::string>> vocab;
  for (std::size_t c : feature_cols) {
    if (categorical.count(c) == 0) continue;
    std::set<std::string> values;
    for (const auto& r : rows) values.insert(r[c]);
    vocab[c] = std::vector<std::string>(values.begin(), values.end());
  }

  std::size_t dim = 0;
  for (std::size_t c : feature_cols) {
    dim += categorical.count(c) ? vocab[c].size() : 1;
  }
  if (schema.expected_dim != 0 && dim != schema.expected_dim) {
    throw DataError("csv " + csv_path + ": expanded dimension " + std::to_string(dim) +
                    " does not match schema expected_dim " +
                    std::to_string(schema.expected_dim));
  }

  const std::set<std::string> pos(schema.positive_labels.begin(),
                                  schema.positive_labels.end());
  const std::set<std::string> neg(schema.negative_labels.begin(),
                                  schema.negative_labels.end());

  Dataset ds;
  ds.name = schema.name;
  ds.features = Matrix(rows.size(), dim);
  ds.labels.resize(rows.size());

  const std::size_t header_offset = schema.has_header ? 2 : 1;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t file_line = r + header_offset;
    std::size_t out = 0;
    for (std::size_t c : feature_cols) {
      if (categorical.count(c)) {
        const auto& vals = vocab[c];
        const auto it = std::lower_bound(vals.begin(), vals.end(), rows[r][c]);
        const std::size_t hot = static_cast<std::size_t>(it - vals.begin());
        for (std::size_t v = 0; v < vals.size(); ++v) {
          ds.features(r, out + v) = (v == hot) ? 1.0 : 0.0;
        }
        out += vals.size();
      } else {
        ds.features(r, out) = parse_cell(rows[r][c], file_line, c);
        ++out;
      }
    }
    const std::string& raw = rows[r][label_col];
    ds.labels[r] = pos.empty() ? (neg.count(raw) ? 0 : 1) : (pos.count(raw) ? 1 : 0);
  }

  if (schema.expected_normals != 0 && ds.count_label(0) != schema.expected_normals) {
    throw DataError("csv " + csv_path + ": " + std::to_string(ds.count_label(0)) +
                    " normals, schema expects " + std::to_string(schema.expected_normals));
  }
  if (schema.expected_anomalies != 0 &&
      ds.count_label(1) != schema.expected_anomalies) {
    throw DataError("csv " + csv_path + ": " + std::to_string(ds.count_label(1)) +
                    " anomalies, schema expects " +
                    std::to_string(schema.expected_anomalies));
  }
  return ds;
}

void write_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw DataError("csv: cannot write " + path);
  out.precision(17);
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (std::size_t c = 0; c < ds.dim(); ++c) out << ds.features(r, c) << ',';
    out << ds.labels[r] << '\n';
  }
  if (!out) throw DataError("csv: write failed for " + path);
}

Normalizer Normalizer::fit(const Matrix& features, const std::vector<std::size_t>& rows) {
  if (rows.empty()) throw DataError("normalizer: empty fitting subset");
  Normalizer n;
  n.col_min.assign(features.cols, std::numeric_limits<double>::infinity());
  n.col_max.assign(features.cols, -std::numeric_limits<double>::infinity());
  for (std::size_t r : rows) {
    if (r >= features.rows) {
      throw DataError("normalizer: row index " + std::to_string(r) + " out of range");
    }
    for (std::size_t c = 0; c < features.cols; ++c) {
      n.col_min[c] = std::min(n.col_min[c], features(r, c));
      n.col_max[c] = std::max(n.col_max[c], features(r, c));
    }
  }
  return n;
}

Matrix Normalizer::apply(const Matrix& features) const {
  if (features.cols != col_min.size()) {
    throw ShapeError("normalizer: fitted on " + std::to_string(col_min.size()) +
                     " columns, got " + features.shape_str());
  }
  Matrix out(features.rows, features.cols);
  for (std::size_t r = 0; r < features.rows; ++r) {
    for (std::size_t c = 0; c < features.cols; ++c) {
      const double range = col_max[c] - col_min[c];
      out(r, c) = range > 0.0 ? (features(r, c) - col_min[c]) / range : 0.0;
    }
  }
  return out;
}

Matrix Normalizer::gather(const Matrix& features, const std::vector<std::size_t>& rows)
    const {
  Matrix out(rows.size(), features.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < features.cols; ++c) {
      const double range = col_max[c] - col_min[c];
      out(i, c) = range > 0.0 ? (features(rows[i], c) - col_min[c]) / range : 0.0;
    }
  }
  return out;
}

WeakSupervisionSplit make_split(const Dataset& ds, const WeakSplitConfig& cfg,
                                std::uint64_t seed) {
  if (cfg.train_normal_fraction <= 0.0 || cfg.train_normal_fraction >= 1.0) {
    throw ConfigError("split: train_normal_fraction must be in (0,1)");
  }
  if (cfg.noise_fraction < 0.0 || cfg.noise_fraction >= 1.0) {
    throw ConfigError("split: noise_fraction must be in [0,1)");
  }

  std::vector<std::size_t> normals, anomalies;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (ds.labels[i] == 1 ? anomalies : normals).push_back(i);
  }

  Rng split_rng = Rng(seed).derive("split");
  split_rng.shuffle(normals);
  split_rng.shuffle(anomalies);

  const std::size_t train_normals = static_cast<std::size_t>(
      cfg.train_normal_fraction * static_cast<double>(normals.size()));
  const std::size_t noise_count = static_cast<std::size_t>(
      cfg.noise_fraction * static_cast<double>(train_normals));
  if (anomalies.size() <= cfg.labeled_anomalies + noise_count) {
    throw ConfigError("split: dataset has " + std::to_string(anomalies.size()) +
                      " anomalies, needs more than " +
                      std::to_string(cfg.labeled_anomalies + noise_count) +
                      " (labeled + noise, leaving at least one for test)");
  }
  if (train_normals == 0 || train_normals == normals.size()) {
    throw ConfigError("split: degenerate normal-pool split");
  }

  WeakSupervisionSplit out;
  out.train_labeled.assign(anomalies.begin(),
                           anomalies.begin() + static_cast<std::ptrdiff_t>(cfg.labeled_anomalies));
  out.noise.assign(anomalies.begin() + static_cast<std::ptrdiff_t>(cfg.labeled_anomalies),
                   anomalies.begin() +
                       static_cast<std::ptrdiff_t>(cfg.labeled_anomalies + noise_count));

  out.train_unlabeled.assign(normals.begin(),
                             normals.begin() + static_cast<std::ptrdiff_t>(train_normals));
  out.train_unlabeled.insert(out.train_unlabeled.end(), out.noise.begin(),
                             out.noise.end());
  split_rng.shuffle(out.train_unlabeled);

  out.test.assign(normals.begin() + static_cast<std::ptrdiff_t>(train_normals),
                  normals.end());
  out.test.insert(out.test.end(),
                  anomalies.begin() +
                      static_cast<std::ptrdiff_t>(cfg.labeled_anomalies + noise_count),
                  anomalies.end());
  return out;
}

namespace {

// Deals `pool` into K disjoint parts. With alpha = 0 the deal is round-robin
// (sizes differ by at most 1); otherwise part sizes follow Dirichlet(alpha)
// proportions with a floor of one sample per device.
std::vector<std::vector<std::size_t>> deal_pool(std::vector<std::size_t> pool,
                                                std::size_t devices, Rng& rng,
                                                double alpha) {
  rng.shuffle(pool);
  std::vector<std::vector<std::size_t>> parts(devices);
  if (alpha <= 0.0) {
    for (std::size_t i = 0; i < pool.size(); ++i) {
      parts[i % devices].push_back(pool[i]);
    }
    return parts;
  }

  // Dirichlet via normalized Gamma(alpha, 1) draws (Marsaglia-Tsang, with
  // the alpha < 1 boost).
  auto gamma_draw = [&rng](double shape) {
    double boost = 1.0;
    double a = shape;
    if (a < 1.0) {
      boost = std::pow(rng.next_double() + 1e-12, 1.0 / a);
      a += 1.0;
    }
    const double d = a - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
      const double x = rng.next_gaussian();
      const double v = std::pow(1.0 + c * x, 3);
      if (v <= 0.0) continue;
      const double u = rng.next_double();
      if (u < 1.0 - 0.0331 * x * x * x * x ||
          std::log(u + 1e-300) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
        return boost * d * v;
      }
    }
  };

  std::vector<double> weights(devices);
  double total = 0.0;
  for (double& w : weights) {
    w = gamma_draw(alpha);
    total += w;
  }

  // One sample per device first, remainder by largest cumulative deficit.
  std::vector<std::size_t> counts(devices, 1);
  std::size_t assigned = devices;
  while (assigned < pool.size()) {
    std::size_t best = 0;
    double best_deficit = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < devices; ++k) {
      const double target = weights[k] / total * static_cast<double>(pool.size());
      const double deficit = target - static_cast<double>(counts[k]);
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = k;
      }
    }
    ++counts[best];
    ++assigned;
  }

  std::size_t pos = 0;
  for (std::size_t k = 0; k < devices; ++k) {
    for (std::size_t i = 0; i < counts[k]; ++i) parts[k].push_back(pool[pos++]);
  }
  return parts;
}

}  // namespace

std::vector<DeviceShard> shard(const WeakSupervisionSplit& split, std::size_t devices,
                               std::uint64_t seed, double alpha) {
  if (devices == 0) throw ConfigError("shard: need at least one device");
  if (devices > split.train_unlabeled.size() || devices > split.train_labeled.size()) {
    throw ConfigError("shard: " + std::to_string(devices) +
                      " devices exceed pool sizes (" +
                      std::to_string(split.train_unlabeled.size()) + " unlabeled, " +
                      std::to_string(split.train_labeled.size()) + " labeled)");
  }

  Rng rng = Rng(seed).derive("shard");
  auto unlabeled_parts = deal_pool(split.train_unlabeled, devices, rng, alpha);
  auto labeled_parts = deal_pool(split.train_labeled, devices, rng, alpha);

  std::vector<DeviceShard> shards(devices);
  for (std::size_t k = 0; k < devices; ++k) {
    shards[k].unlabeled = std::move(unlabeled_parts[k]);
    shards[k].labeled = std::move(labeled_parts[k]);
  }
  return shards;
}

BatchSampler::BatchSampler(DeviceShard shard, std::size_t batch_size, Rng rng)
    : shard_(std::move(shard)), batch_size_(batch_size), rng_(rng) {
  if (batch_size_ == 0 || batch_size_ % 2 != 0) {
    throw ConfigError("sampler: batch size must be even and positive, got " +
                      std::to_string(batch_size_));
  }
  if (shard_.unlabeled.empty() || shard_.labeled.empty()) {
    throw ConfigError("sampler: device has an empty training pool");
  }
  unlabeled_order_.resize(shard_.unlabeled.size());
  std::iota(unlabeled_order_.begin(), unlabeled_order_.end(), std::size_t{0});
  rng_.shuffle(unlabeled_order_);
}

Batch BatchSampler::next(const Matrix& normalized_features) {
  const std::size_t half = batch_size_ / 2;
  std::vector<std::size_t> chosen;
  std::vector<int> labels;
  chosen.reserve(batch_size_);
  labels.reserve(batch_size_);

  for (std::size_t i = 0; i < half; ++i) {
    if (unlabeled_pos_ == unlabeled_order_.size()) {
      rng_.shuffle(unlabeled_order_);
      unlabeled_pos_ = 0;
    }
    chosen.push_back(shard_.unlabeled[unlabeled_order_[unlabeled_pos_++]]);
    labels.push_back(0);
  }
  for (std::size_t i = 0; i < half; ++i) {
    const std::size_t j = static_cast<std::size_t>(rng_.next_below(shard_.labeled.size()));
    chosen.push_back(shard_.labeled[j]);
    labels.push_back(1);
  }

  std::vector<std::size_t> order(batch_size_);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng_.shuffle(order);

  Batch batch;
  batch.features = Matrix(batch_size_, normalized_features.cols);
  batch.labels.resize(batch_size_);
  for (std::size_t i = 0; i < batch_size_; ++i) {
    const std::size_t src = chosen[order[i]];
    batch.labels[i] = labels[order[i]];
    for (std::size_t c = 0; c < normalized_features.cols; ++c) {
      batch.features(i, c) = normalized_features(src, c);
    }
  }
  return batch;
}

Dataset gen_synthetic(const SyntheticConfig& cfg) {
  if (cfg.dim == 0 || cfg.normals == 0 || cfg.anomalies == 0) {
    throw ConfigError("synthetic: dim, normals, and anomalies must be positive");
  }
  Rng rng = Rng(cfg.seed).derive("synthetic");

  // Cluster centers at +/-2 on every axis; anomalies fill the box [-8, 8]^d
  // but stay at least L2 distance 6 from both centers.
  std::vector<double> center_a(cfg.dim, 2.0), center_b(cfg.dim, -2.0);

  Dataset ds;
  ds.name = "synthetic";
  ds.features = Matrix(cfg.normals + cfg.anomalies, cfg.dim);
  ds.labels.assign(cfg.normals + cfg.anomalies, 0);

  for (std::size_t i = 0; i < cfg.normals; ++i) {
    const std::vector<double>& center = (rng.next_double() < 0.5) ? center_a : center_b;
    for (std::size_t c = 0; c < cfg.dim; ++c) {
      ds.features(i, c) = center[c] + rng.next_gaussian();
    }
  }

  const double min_dist = 6.0;
  for (std::size_t i = 0; i < cfg.anomalies; ++i) {
    const std::size_t row = cfg.normals + i;
    ds.labels[row] = 1;
    while (true) {
      double da = 0.0, db = 0.0;
      std::vector<double> point(cfg.dim);
      for (std::size_t c = 0; c < cfg.dim; ++c) {
        point[c] = rng.next_double() * 16.0 - 8.0;
        da += (point[c] - center_a[c]) * (point[c] - center_a[c]);
        db += (point[c] - center_b[c]) * (point[c] - center_b[c]);
      }
      if (std::sqrt(da) >= min_dist && std::sqrt(db) >= min_dist) {
        for (std::size_t c = 0; c < cfg.dim; ++c) ds.features(row, c) = point[c];
        break;
      }
    }
  }
  return ds;
}

}  // namespace fedad
