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

#include "fedad/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "fedad/checkpoint.hpp"
#include "fedad/errors.hpp"
#include "fedad/kernels.hpp"
#include "fedad/metrics.hpp"
#include "fedad/protocol.hpp"

namespace fedad {
namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::ofstream open_for_write(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  return out;
}

ordered_json index_json(const std::vector<std::size_t>& rows) {
  ordered_json arr = ordered_json::array();
  for (std::size_t r : rows) arr.push_back(r);
  return arr;
}

void write_split_manifest(const fs::path& path, const ExperimentConfig& cfg,
                          const WeakSupervisionSplit& split,
                          const std::vector<DeviceShard>& shards) {
  ordered_json j;
  j["seed"] = cfg.seed;
  j["counts"] = {{"train_unlabeled", split.train_unlabeled.size()},
                 {"train_labeled", split.train_labeled.size()},
                 {"test", split.test.size()},
                 {"noise", split.noise.size()}};
  j["train_unlabeled"] = index_json(split.train_unlabeled);
  j["train_labeled"] = index_json(split.train_labeled);
  j["test"] = index_json(split.test);
  j["noise"] = index_json(split.noise);
  ordered_json shard_arr = ordered_json::array();
  for (const DeviceShard& s : shards) {
    shard_arr.push_back({{"unlabeled", index_json(s.unlabeled)},
                         {"labeled", index_json(s.labeled)}});
  }
  j["shards"] = std::move(shard_arr);
  open_for_write(path) << j.dump(2) << "\n";
}

std::string default_run_name(const ExperimentConfig& cfg) {
  return cfg.dataset.name + "-s" + std::to_string(cfg.seed);
}

void save_final_checkpoint(const fs::path& path, const std::vector<EdgeDevice>& devices,
                           const Coordinator& coord) {
  std::vector<std::pair<std::string, const Matrix*>> entries;
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const std::string prefix = "device" + std::to_string(i) + "/";
    for (const auto& [name, param] : devices[i].learner().named_parameters()) {
      entries.emplace_back(prefix + name, param);
    }
  }
  for (const auto& [name, param] : coord.scorer().named_parameters()) {
    entries.emplace_back("scorer/" + name, param);
  }
  save_checkpoint(path.string(), entries);
}

struct Topology {
  std::vector<DeviceShard> shards;
  std::vector<EdgeDevice> devices;
  Coordinator coord;
};

Topology build_topology(const ExperimentConfig& cfg, const PreparedData& data) {
  const std::size_t d = data.dataset.dim();
  EncoderConfig enc;
  enc.input_dim = d;
  enc.num_heads = cfg.resolve_num_heads(d);
  enc.feature_dim = cfg.resolve_feature_dim(d);
  enc.batch_as_sequence = cfg.batch_as_sequence;

  ScorerConfig sc = cfg.scorer;
  sc.feature_dim = enc.feature_dim;

  AdamConfig adam;
  adam.learning_rate = cfg.learning_rate;

  const Rng root(cfg.seed);
  Topology topo{shard(data.split, cfg.devices, cfg.seed, cfg.dirichlet_alpha),
                {},
                Coordinator(sc, adam, root)};
  topo.devices.reserve(cfg.devices);
  for (std::size_t i = 0; i < cfg.devices; ++i) {
    topo.devices.emplace_back(static_cast<std::uint16_t>(i), topo.shards[i],
                              &data.normalized, enc, cfg.dp, cfg.batch_size, adam, root);
  }
  return topo;
}

MetricsRecord evaluate(std::vector<EdgeDevice>& devices, Coordinator& coord,
                       const PreparedData& data, double tau, std::uint32_t round,
                       double global_loss) {
  const DetectionReport report = detect(devices, coord, data.test_features, tau, round);
  MetricsRecord rec;
  rec.round = round;
  rec.auc_roc = auc_roc(report.mean_scores, data.test_labels);
  rec.auc_pr = auc_pr(report.mean_scores, data.test_labels);
  rec.global_loss = global_loss;
  return rec;
}

}  // namespace

ConvergenceMonitor::ConvergenceMonitor(std::size_t window, double min_improvement)
    : window_(window), min_improvement_(min_improvement) {}

bool ConvergenceMonitor::push(double loss) {
  losses_.push_back(loss);
  if (convergence_round_ >= 0 || losses_.size() < 2 * window_) return false;
  const std::size_t n = losses_.size();
  const auto prev_begin = losses_.begin() + static_cast<std::ptrdiff_t>(n - 2 * window_);
  const auto cur_begin = losses_.begin() + static_cast<std::ptrdiff_t>(n - window_);
  const double prev_best = *std::min_element(prev_begin, cur_begin);
  const double cur_best = *std::min_element(cur_begin, losses_.end());
  if (prev_best - cur_best < min_improvement_) {
    convergence_round_ = static_cast<std::int64_t>(n - 1);
    return true;
  }
  return false;
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  PreparedData data;
  if (cfg.dataset.name == "synthetic") {
    data.dataset = gen_synthetic(cfg.synthetic);
  } else {
    CsvSchema schema = load_schema(cfg.dataset.schema);
    data.dataset = load_csv(cfg.dataset.csv, schema);
  }
  data.split = make_split(data.dataset, cfg.split, cfg.seed);

  std::vector<std::size_t> train_rows = data.split.train_unlabeled;
  train_rows.insert(train_rows.end(), data.split.train_labeled.begin(),
                    data.split.train_labeled.end());
  data.normalizer = Normalizer::fit(data.dataset.features, train_rows);
  data.normalized = data.normalizer.apply(data.dataset.features);
  data.test_features = data.normalizer.gather(data.dataset.features, data.split.test);
  data.test_labels.reserve(data.split.test.size());
  for (std::size_t row : data.split.test) {
    data.test_labels.push_back(data.dataset.labels[row]);
  }
  return data;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const PreparedData data = prepare_data(cfg);
  return run_experiment(cfg, data);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const PreparedData& data) {
  cfg.validate();
  kernels::set_threads(cfg.threads);

  const auto run_start = std::chrono::steady_clock::now();
  const std::string run_name = cfg.run_name.empty() ? default_run_name(cfg) : cfg.run_name;
  const fs::path run_dir = fs::path(cfg.output_dir) / run_name;
  fs::create_directories(run_dir / "checkpoints");

  Topology topo = build_topology(cfg, data);
  const std::size_t m = topo.coord.scorer().config().feature_dim;

  open_for_write(run_dir / "config.json") << config_to_json(cfg) << "\n";
  write_split_manifest(run_dir / "split_manifest.json", cfg, data.split, topo.shards);

  std::ofstream rounds_out = open_for_write(run_dir / "rounds.jsonl");
  std::ofstream metrics_out = open_for_write(run_dir / "metrics.jsonl");
  std::ofstream csv_out = open_for_write(run_dir / "metrics.csv");
  csv_out << "round,auc_roc,auc_pr,global_loss\n" << std::setprecision(17);

  ExperimentResult result;
  result.run_dir = run_dir.string();
  result.feature_payload_per_round =
      static_cast<std::uint64_t>(cfg.devices) * cfg.batch_size * m * sizeof(double);
  if (cfg.dp.enabled) result.sigma = compute_sigma(cfg.dp);

  ConvergenceMonitor monitor;
  std::uint64_t payload_total = 0;
  double last_loss = 0.0;
  std::int64_t last_eval_round = -1;

  auto record_metrics = [&](std::vector<EdgeDevice>& devices, Coordinator& coord,
                            std::uint32_t round, double loss) {
    const MetricsRecord rec = evaluate(devices, coord, data, cfg.tau, round, loss);
    ordered_json line = {{"round", rec.round},
                         {"auc_roc", rec.auc_roc},
                         {"auc_pr", rec.auc_pr},
                         {"global_loss", rec.global_loss},
                         {"dataset", data.dataset.name}};
    metrics_out << line.dump() << "\n";
    csv_out << rec.round << "," << rec.auc_roc << "," << rec.auc_pr << ","
            << rec.global_loss << "\n";
    result.history.push_back(rec);
    last_eval_round = rec.round;
  };

  for (std::uint32_t t = 0; t < cfg.rounds; ++t) {
    RoundConfig rc;
    rc.round = t;
    rc.dropout_prob = 1.0 - cfg.participation;
    const RoundRecord rec = run_round(topo.devices, topo.coord, rc);
    if (!std::isfinite(rec.global_loss)) {
      throw NumericError("global loss diverged at round " + std::to_string(t));
    }

    ordered_json line = {{"round", rec.round},
                         {"global_loss", rec.global_loss},
                         {"participants", rec.participants},
                         {"device_losses", rec.device_losses},
                         {"bytes_up", rec.bytes_up},
                         {"bytes_down", rec.bytes_down},
                         {"feature_payload_bytes", rec.feature_payload_bytes},
                         {"wall_time_ms", rec.wall_time_ms}};
    rounds_out << line.dump() << "\n";

    result.bytes_up += rec.bytes_up;
    result.bytes_down += rec.bytes_down;
    payload_total += rec.feature_payload_bytes;
    result.rounds_run = t + 1;
    last_loss = rec.global_loss;

    const bool converged_now = monitor.push(rec.global_loss);
    const bool stop = converged_now && cfg.early_stop;
    if ((t + 1) % cfg.eval_every == 0 || t + 1 == cfg.rounds || stop) {
      record_metrics(topo.devices, topo.coord, t, rec.global_loss);
    }
    if (stop) break;
  }

  if (result.rounds_run > 0 &&
      last_eval_round != static_cast<std::int64_t>(result.rounds_run) - 1) {
    record_metrics(topo.devices, topo.coord, result.rounds_run - 1, last_loss);
  }

  result.convergence_round = monitor.convergence_round();
  result.final_loss = last_loss;
  if (!result.history.empty()) {
    result.final_auc_roc = result.history.back().auc_roc;
    result.final_auc_pr = result.history.back().auc_pr;
  }

  save_final_checkpoint(run_dir / "checkpoints" / "final.ckpt", topo.devices, topo.coord);

  const auto run_end = std::chrono::steady_clock::now();
  ordered_json meta;
  meta["dataset"] = {{"name", data.dataset.name},
                     {"rows", data.dataset.size()},
                     {"dim", data.dataset.dim()},
                     {"normals", data.dataset.count_label(0)},
                     {"anomalies", data.dataset.count_label(1)}};
  meta["devices"] = cfg.devices;
  meta["batch_size"] = cfg.batch_size;
  meta["feature_dim"] = m;
  meta["num_heads"] = cfg.resolve_num_heads(data.dataset.dim());
  meta["dp_enabled"] = cfg.dp.enabled;
  meta["sigma"] = result.sigma;
  meta["rounds_requested"] = cfg.rounds;
  meta["rounds_run"] = result.rounds_run;
  meta["convergence_round"] = result.convergence_round;
  meta["final_eval_round"] = last_eval_round;
  meta["final_auc_roc"] = result.final_auc_roc;
  meta["final_auc_pr"] = result.final_auc_pr;
  meta["final_global_loss"] = result.final_loss;
  meta["bytes_up"] = result.bytes_up;
  meta["bytes_down"] = result.bytes_down;
  meta["feature_payload_bytes"] = payload_total;
  meta["feature_payload_per_round"] = result.feature_payload_per_round;
  meta["wall_time_total_ms"] =
      std::chrono::duration<double, std::milli>(run_end - run_start).count();
  open_for_write(run_dir / "run_meta.json") << meta.dump(2) << "\n";

  return result;
}

MetricsRecord evaluate_run(const std::string& run_dir) {
  const fs::path dir(run_dir);
  ExperimentConfig cfg = load_config((dir / "config.json").string());
  cfg.validate();
  kernels::set_threads(cfg.threads);

  std::ifstream meta_in(dir / "run_meta.json");
  if (!meta_in) throw DataError("cannot open run_meta.json in " + run_dir);
  const auto meta = nlohmann::json::parse(meta_in, nullptr, true);
  const std::uint32_t eval_round = meta.at("final_eval_round").get<std::uint32_t>();
  const double global_loss = meta.at("final_global_loss").get<double>();

  const PreparedData data = prepare_data(cfg);
  Topology topo = build_topology(cfg, data);

  const auto loaded = load_checkpoint((dir / "checkpoints" / "final.ckpt").string());
  for (std::size_t i = 0; i < topo.devices.size(); ++i) {
    restore_parameters(loaded, topo.devices[i].learner().named_parameters(),
                       "device" + std::to_string(i) + "/");
  }
  restore_parameters(loaded, topo.coord.scorer().named_parameters(), "scorer/");

  return evaluate(topo.devices, topo.coord, data, cfg.tau, eval_round, global_loss);
}

std::vector<OverheadRow> compare_overhead(const ExperimentConfig& base,
                                          const std::vector<double>& ratios) {
  std::vector<double> grid = ratios;
  if (std::find(grid.begin(), grid.end(), 1.0) == grid.end()) grid.push_back(1.0);

  const std::string base_name =
      base.run_name.empty() ? default_run_name(base) : base.run_name;
  std::vector<OverheadRow> rows;
  std::uint64_t reference_payload = 0;
  for (double ratio : grid) {
    ExperimentConfig cfg = base;
    cfg.feature_ratio = ratio;
    cfg.feature_dim = 0;
    std::ostringstream name;
    name << base_name << "-ratio-" << ratio;
    cfg.run_name = name.str();

    const PreparedData data = prepare_data(cfg);
    const ExperimentResult result = run_experiment(cfg, data);

    OverheadRow row;
    row.ratio = ratio;
    row.feature_dim = cfg.resolve_feature_dim(data.dataset.dim());
    row.feature_payload_bytes = result.feature_payload_per_round;
    row.convergence_round = result.convergence_round;
    row.final_auc_roc = result.final_auc_roc;
    rows.push_back(row);
    if (ratio == 1.0) reference_payload = result.feature_payload_per_round;
  }
  for (OverheadRow& row : rows) {
    row.normalized = static_cast<double>(row.feature_payload_bytes) /
                     static_cast<double>(reference_payload);
  }
  return rows;
}

std::vector<SweepCell> sweep_devices(const ExperimentConfig& base,
                                     const std::vector<std::size_t>& device_grid,
                                     const std::vector<std::uint64_t>& seeds) {
  const std::string base_name =
      base.run_name.empty() ? default_run_name(base) : base.run_name;
  std::vector<SweepCell> cells;
  for (std::size_t k : device_grid) {
    for (std::uint64_t seed : seeds) {
      ExperimentConfig cfg = base;
      cfg.devices = k;
      cfg.seed = seed;
      cfg.run_name =
          base_name + "-k" + std::to_string(k) + "-seed" + std::to_string(seed);
      SweepCell cell;
      cell.devices = k;
      cell.seed = seed;
      cell.result = run_experiment(cfg);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace fedad
