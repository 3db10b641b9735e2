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

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fedad/config.hpp"
#include "fedad/dataset.hpp"
#include "fedad/errors.hpp"
#include "fedad/experiment.hpp"
#include "fedad/grad_check.hpp"
#include "fedad/protocol.hpp"
#include "fedad/scorer.hpp"

namespace {

using fedad::ExperimentConfig;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> rounds;
  std::optional<std::size_t> devices;
  std::optional<std::size_t> batch_size;
  std::optional<double> learning_rate;
  std::optional<std::size_t> num_heads;
  std::optional<std::size_t> feature_dim;
  std::optional<double> feature_ratio;
  std::optional<double> tau;
  std::optional<std::uint32_t> eval_every;
  std::optional<double> participation;
  std::optional<double> dirichlet_alpha;
  std::optional<int> threads;
  std::optional<bool> dp_enabled;
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<double> clip_norm;
  std::optional<bool> early_stop;
  std::optional<bool> batch_as_sequence;
  std::optional<std::string> output_dir;
  std::optional<std::string> run_name;
};

void add_override_flags(CLI::App& cmd, Overrides& ov) {
  cmd.add_option("--seed", ov.seed, "Root seed");
  cmd.add_option("--rounds", ov.rounds, "Maximum training rounds");
  cmd.add_option("--devices", ov.devices, "Number of edge devices");
  cmd.add_option("--batch", ov.batch_size, "Per-device batch size (even)");
  cmd.add_option("--lr", ov.learning_rate, "Adam learning rate");
  cmd.add_option("--heads", ov.num_heads, "Attention heads (0 = dataset default)");
  cmd.add_option("--feature-dim", ov.feature_dim, "Compressed width m (0 = from ratio)");
  cmd.add_option("--feature-ratio", ov.feature_ratio, "m as a fraction of d");
  cmd.add_option("--tau", ov.tau, "Pseudo-label threshold");
  cmd.add_option("--eval-every", ov.eval_every, "Evaluation cadence in rounds");
  cmd.add_option("--participation", ov.participation, "Per-round keep probability");
  cmd.add_option("--alpha", ov.dirichlet_alpha, "Dirichlet quantity-skew (0 = IID)");
  cmd.add_option("--threads", ov.threads, "Kernel threads (1 = serial, reproducible)");
  cmd.add_flag("--dp,!--no-dp", ov.dp_enabled, "Toggle the Gaussian mechanism");
  cmd.add_option("--epsilon", ov.epsilon, "DP epsilon");
  cmd.add_option("--delta", ov.delta, "DP delta");
  cmd.add_option("--clip", ov.clip_norm, "DP per-row L2 clip norm");
  cmd.add_flag("--early-stop,!--no-early-stop", ov.early_stop,
               "Stop at the convergence rule");
  cmd.add_flag("--seq", ov.batch_as_sequence, "Treat the batch as one sequence");
  cmd.add_option("--out", ov.output_dir, "Output directory (or FEDAD_OUT)");
  cmd.add_option("--name", ov.run_name, "Run directory name");
}

ExperimentConfig load_with_overrides(const std::string& config_path, const Overrides& ov) {
  ExperimentConfig cfg = fedad::load_config(config_path);
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.rounds) cfg.rounds = *ov.rounds;
  if (ov.devices) cfg.devices = *ov.devices;
  if (ov.batch_size) cfg.batch_size = *ov.batch_size;
  if (ov.learning_rate) cfg.learning_rate = *ov.learning_rate;
  if (ov.num_heads) cfg.num_heads = *ov.num_heads;
  if (ov.feature_dim) cfg.feature_dim = *ov.feature_dim;
  if (ov.feature_ratio) cfg.feature_ratio = *ov.feature_ratio;
  if (ov.tau) cfg.tau = *ov.tau;
  if (ov.eval_every) cfg.eval_every = *ov.eval_every;
  if (ov.participation) cfg.participation = *ov.participation;
  if (ov.dirichlet_alpha) cfg.dirichlet_alpha = *ov.dirichlet_alpha;
  if (ov.threads) cfg.threads = *ov.threads;
  if (ov.dp_enabled) cfg.dp.enabled = *ov.dp_enabled;
  if (ov.epsilon) cfg.dp.epsilon = *ov.epsilon;
  if (ov.delta) cfg.dp.delta = *ov.delta;
  if (ov.clip_norm) cfg.dp.clip_norm = *ov.clip_norm;
  if (ov.early_stop) cfg.early_stop = *ov.early_stop;
  if (ov.batch_as_sequence) cfg.batch_as_sequence = *ov.batch_as_sequence;
  if (ov.output_dir) {
    cfg.output_dir = *ov.output_dir;
  } else if (const char* env = std::getenv("FEDAD_OUT")) {
    cfg.output_dir = env;
  }
  if (ov.run_name) cfg.run_name = *ov.run_name;
  return cfg;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& csv) {
  std::vector<std::uint64_t> out;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    std::size_t comma = csv.find(',', pos);
    if (comma == std::string::npos) comma = csv.size();
    out.push_back(std::stoull(csv.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    std::size_t comma = csv.find(',', pos);
    if (comma == std::string::npos) comma = csv.size();
    out.push_back(std::stod(csv.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return out;
}

int cmd_run(const std::string& config_path, const Overrides& ov) {
  const ExperimentConfig cfg = load_with_overrides(config_path, ov);
  const fedad::ExperimentResult result = fedad::run_experiment(cfg);
  nlohmann::ordered_json summary = {
      {"run_dir", result.run_dir},
      {"rounds_run", result.rounds_run},
      {"convergence_round", result.convergence_round},
      {"final_auc_roc", result.final_auc_roc},
      {"final_auc_pr", result.final_auc_pr},
      {"final_global_loss", result.final_loss},
      {"bytes_up", result.bytes_up},
      {"bytes_down", result.bytes_down}};
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_eval(const std::string& run_dir) {
  const fedad::MetricsRecord rec = fedad::evaluate_run(run_dir);
  nlohmann::ordered_json out = {{"round", rec.round},
                                {"auc_roc", rec.auc_roc},
                                {"auc_pr", rec.auc_pr},
                                {"global_loss", rec.global_loss}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const Overrides& ov,
              const std::string& devices_csv, const std::string& seeds_csv,
              const std::string& ratios_csv, bool dp_compare) {
  const ExperimentConfig base = load_with_overrides(config_path, ov);
  const int chosen = (!devices_csv.empty() ? 1 : 0) + (!ratios_csv.empty() ? 1 : 0) +
                     (dp_compare ? 1 : 0);
  if (chosen != 1) {
    throw fedad::ConfigError(
        "sweep needs exactly one of --devices-grid, --ratios, --dp-compare");
  }

  std::cout << std::setprecision(17);
  if (!devices_csv.empty()) {
    std::vector<std::size_t> grid;
    for (std::uint64_t k : parse_u64_list(devices_csv)) grid.push_back(k);
    std::vector<std::uint64_t> seeds =
        seeds_csv.empty() ? std::vector<std::uint64_t>{base.seed}
                          : parse_u64_list(seeds_csv);
    std::cout << "devices,seed,rounds_run,convergence_round,auc_roc,auc_pr\n";
    for (const fedad::SweepCell& cell : fedad::sweep_devices(base, grid, seeds)) {
      std::cout << cell.devices << "," << cell.seed << "," << cell.result.rounds_run
                << "," << cell.result.convergence_round << ","
                << cell.result.final_auc_roc << "," << cell.result.final_auc_pr << "\n";
    }
    return 0;
  }
  if (!ratios_csv.empty()) {
    std::cout << "ratio,feature_dim,payload_bytes_per_round,normalized,"
                 "convergence_round,auc_roc\n";
    for (const fedad::OverheadRow& row :
         fedad::compare_overhead(base, parse_double_list(ratios_csv))) {
      std::cout << row.ratio << "," << row.feature_dim << ","
                << row.feature_payload_bytes << "," << row.normalized << ","
                << row.convergence_round << "," << row.final_auc_roc << "\n";
    }
    return 0;
  }
  std::cout << "dp,auc_roc,auc_pr,rounds_run\n";
  for (bool dp_on : {false, true}) {
    ExperimentConfig cfg = base;
    cfg.dp.enabled = dp_on;
    cfg.run_name = (base.run_name.empty() ? base.dataset.name : base.run_name) +
                   (dp_on ? "-dp-on" : "-dp-off");
    const fedad::ExperimentResult r = fedad::run_experiment(cfg);
    std::cout << (dp_on ? 1 : 0) << "," << r.final_auc_roc << "," << r.final_auc_pr
              << "," << r.rounds_run << "\n";
  }
  return 0;
}

int cmd_grad_check(std::uint64_t seed, std::size_t input_dim, std::size_t heads,
                   std::size_t feature_dim, std::size_t batch, double tol, bool seq) {
  fedad::Rng root(seed);
  fedad::EncoderConfig enc;
  enc.input_dim = input_dim;
  enc.num_heads = heads;
  enc.feature_dim = feature_dim;
  enc.batch_as_sequence = seq;
  fedad::Rng enc_rng = root.derive("encoder_init", 0);
  fedad::FeatureLearner learner(enc, enc_rng);

  fedad::ScorerConfig sc;
  sc.feature_dim = feature_dim;
  fedad::Rng sc_rng = root.derive("scorer_init");
  fedad::MlpScorer scorer(sc, sc_rng);

  fedad::Rng data_rng = root.derive("sampling", 0);
  fedad::Matrix x(batch, input_dim);
  for (double& v : x.data) v = data_rng.next_double();
  std::vector<int> labels(batch, 0);
  for (std::size_t i = 0; i < batch / 2; ++i) labels[i] = 1;

  const auto loss_fn = [&]() {
    return fedad::bce_loss(scorer.score_const(learner.forward(x)), labels);
  };

  fedad::EncoderTape tape;
  const fedad::Matrix features = learner.forward(x, tape);
  scorer.score_forward(features);
  const fedad::ScorerBackward back = scorer.backward(labels);
  const fedad::EncoderGrads enc_grads = learner.backward(tape, back.feature_grad);

  std::vector<std::pair<std::string, fedad::Matrix*>> params;
  std::vector<fedad::Matrix> analytic;
  for (auto& [name, param] : learner.named_parameters()) params.emplace_back(name, param);
  for (const fedad::Matrix* g : enc_grads.ordered()) analytic.push_back(*g);
  for (auto& [name, param] : scorer.named_parameters()) params.emplace_back(name, param);
  for (const fedad::Matrix* g : back.grads.ordered()) analytic.push_back(*g);

  const fedad::GradCheckReport report = fedad::grad_check(loss_fn, params, analytic, tol);
  std::cout << report.summary();
  return report.passed ? 0 : 4;
}

int cmd_gen_synth(const std::string& out_path, std::size_t dim, std::size_t normals,
                  std::size_t anomalies, std::uint64_t seed) {
  fedad::SyntheticConfig cfg;
  cfg.dim = dim;
  cfg.normals = normals;
  cfg.anomalies = anomalies;
  cfg.seed = seed;
  const fedad::Dataset ds = fedad::gen_synthetic(cfg);
  fedad::write_csv(out_path, ds);
  std::cout << "wrote " << ds.size() << " rows (" << ds.count_label(1) << " anomalies, d="
            << ds.dim() << ") to " << out_path << "\n";
  return 0;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Federated weakly-supervised anomaly detection simulator"};
  app.require_subcommand(1);

  Overrides ov;
  std::string config_path;
  std::string run_dir;
  std::string devices_csv, seeds_csv, ratios_csv;
  bool dp_compare = false;

  CLI::App* run = app.add_subcommand("run", "Train one experiment from a config file");
  run->add_option("--config", config_path, "Experiment config JSON")->required();
  add_override_flags(*run, ov);

  CLI::App* eval = app.add_subcommand("eval", "Re-evaluate a finished run directory");
  eval->add_option("--run", run_dir, "Run directory with checkpoint")->required();

  CLI::App* sweep = app.add_subcommand("sweep", "Grid over K, m-ratio, or DP on/off");
  sweep->add_option("--config", config_path, "Base experiment config JSON")->required();
  sweep->add_option("--devices-grid", devices_csv, "Comma-separated device counts");
  sweep->add_option("--seeds", seeds_csv, "Comma-separated seeds (devices grid only)");
  sweep->add_option("--ratios", ratios_csv, "Comma-separated m ratios");
  sweep->add_flag("--dp-compare", dp_compare, "Run DP off vs on");
  add_override_flags(*sweep, ov);

  std::uint64_t gc_seed = 1;
  std::size_t gc_dim = 8, gc_heads = 2, gc_feature = 4, gc_batch = 4;
  double gc_tol = 1e-4;
  bool gc_seq = false;
  CLI::App* gc = app.add_subcommand("grad-check", "Finite-difference gradient audit");
  gc->add_option("--seed", gc_seed, "Seed");
  gc->add_option("--dim", gc_dim, "Input dimension d");
  gc->add_option("--heads", gc_heads, "Attention heads");
  gc->add_option("--feature-dim", gc_feature, "Compressed width m");
  gc->add_option("--batch", gc_batch, "Batch rows");
  gc->add_option("--tol", gc_tol, "Relative tolerance");
  gc->add_flag("--seq", gc_seq, "Batch-as-sequence attention");

  std::string synth_out = "synthetic.csv";
  std::size_t synth_dim = 20, synth_normals = 5000, synth_anomalies = 200;
  std::uint64_t synth_seed = 1;
  CLI::App* synth = app.add_subcommand("gen-synth", "Write the synthetic benchmark CSV");
  synth->add_option("--out", synth_out, "Output CSV path");
  synth->add_option("--dim", synth_dim, "Feature dimension");
  synth->add_option("--normals", synth_normals, "Normal sample count");
  synth->add_option("--anomalies", synth_anomalies, "Anomaly sample count");
  synth->add_option("--seed", synth_seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (run->parsed()) return cmd_run(config_path, ov);
  if (eval->parsed()) return cmd_eval(run_dir);
  if (sweep->parsed())
    return cmd_sweep(config_path, ov, devices_csv, seeds_csv, ratios_csv, dp_compare);
  if (gc->parsed())
    return cmd_grad_check(gc_seed, gc_dim, gc_heads, gc_feature, gc_batch, gc_tol, gc_seq);
  return cmd_gen_synth(synth_out, synth_dim, synth_normals, synth_anomalies, synth_seed);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const fedad::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fedad::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const fedad::MetricError& e) {
    std::cerr << "metric error: " << e.what() << "\n";
    return 5;
  } catch (const fedad::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
