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
//
// End-to-end acceptance gate. Each criterion prints exactly one line:
//   [PASS] criterion N: <name> (<evidence>)
//   [FAIL] criterion N: <name> (<evidence>)
// The process exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fedad/adam.hpp"
#include "fedad/checkpoint.hpp"
#include "fedad/config.hpp"
#include "fedad/dataset.hpp"
#include "fedad/dp.hpp"
#include "fedad/encoder.hpp"
#include "fedad/errors.hpp"
#include "fedad/experiment.hpp"
#include "fedad/grad_check.hpp"
#include "fedad/matrix.hpp"
#include "fedad/metrics.hpp"
#include "fedad/protocol.hpp"
#include "fedad/rng.hpp"
#include "fedad/scorer.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << std::fixed << v;
  return os.str();
}

struct Gate {
  int failures = 0;

  void report(int n, const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << n << ": " << name
              << " (" << detail << ")" << std::endl;
    if (!pass) ++failures;
  }

  void run(int n, const std::string& name,
           const std::function<std::pair<bool, std::string>()>& body) {
    try {
      const auto [pass, detail] = body();
      report(n, name, pass, detail);
    } catch (const std::exception& e) {
      report(n, name, false, std::string("exception: ") + e.what());
    }
  }
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------------------
// Criterion 1: gradient integrity.

fedad::GradCheckReport run_grad_check(std::uint64_t seed, bool batch_as_sequence) {
  fedad::Rng root(seed);
  fedad::EncoderConfig enc;
  enc.input_dim = 8;
  enc.num_heads = 2;
  enc.feature_dim = 4;
  enc.batch_as_sequence = batch_as_sequence;
  fedad::Rng enc_rng = root.derive("encoder_init", 0);
  fedad::FeatureLearner learner(enc, enc_rng);

  fedad::ScorerConfig sc;
  sc.feature_dim = enc.feature_dim;
  fedad::Rng sc_rng = root.derive("scorer_init");
  fedad::MlpScorer scorer(sc, sc_rng);

  fedad::Rng data_rng = root.derive("sampling", 0);
  fedad::Matrix x(4, enc.input_dim);
  for (double& v : x.data) v = data_rng.next_double();
  std::vector<int> labels = {1, 1, 0, 0};

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

  return fedad::grad_check(loss_fn, params, analytic, 1e-4);
}

std::pair<bool, std::string> criterion_gradients() {
  const auto start = Clock::now();
  double worst = 0.0;
  bool all_passed = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (const bool seq : {false, true}) {
      const fedad::GradCheckReport report = run_grad_check(seed, seq);
      all_passed = all_passed && report.passed;
      worst = std::max(worst, report.max_rel_error);
    }
  }
  const double elapsed = seconds_since(start);
  const bool pass = all_passed && elapsed < 30.0;
  return {pass, "max rel err " + fmt(worst, 12) + " over 5 seeds x 2 modes, tol 1e-4, " +
                    fmt(elapsed, 1) + "s"};
}

// ---------------------------------------------------------------------------
// Criterion 2: one K=1 protocol round equals a fused monolithic update.

std::pair<bool, std::string> criterion_split_equivalence() {
  const std::uint64_t seed = 7;
  fedad::Rng data_rng(2025);
  fedad::Matrix features(10, 6);
  for (double& v : features.data) v = data_rng.next_double();

  fedad::DeviceShard shard;
  shard.unlabeled = {0, 1, 2, 3, 4, 5};
  shard.labeled = {6, 7, 8, 9};

  fedad::EncoderConfig enc;
  enc.input_dim = 6;
  enc.num_heads = 2;
  enc.feature_dim = 3;

  fedad::ScorerConfig sc;
  sc.feature_dim = 3;

  fedad::AdamConfig adam;
  adam.learning_rate = 1e-3;

  fedad::DpConfig dp;  // disabled

  // Federated side: one device, one coordinator, one full wire round.
  const fedad::Rng root(seed);
  std::vector<fedad::EdgeDevice> devices;
  devices.emplace_back(0, shard, &features, enc, dp, 4, adam, root);
  fedad::Coordinator coord(sc, adam, root);
  fedad::RoundConfig rc;
  rc.round = 0;
  fedad::run_round(devices, coord, rc);

  // Fused side: identical init streams, one monolithic forward/backward,
  // the same two Adam steps applied directly.
  fedad::Rng enc_rng = root.derive("encoder_init", 0);
  fedad::FeatureLearner learner(enc, enc_rng);
  fedad::Rng sc_rng = root.derive("scorer_init");
  fedad::MlpScorer scorer(sc, sc_rng);
  fedad::BatchSampler sampler(shard, 4, root.derive("sampling", 0));
  const fedad::Batch batch = sampler.next(features);

  fedad::EncoderTape tape;
  const fedad::Matrix encoded = learner.forward(batch.features, tape);
  scorer.score_forward(encoded);
  const fedad::ScorerBackward back = scorer.backward(batch.labels);
  const fedad::EncoderGrads enc_grads = learner.backward(tape, back.feature_grad);

  fedad::AdamState learner_adam(adam), scorer_adam(adam);
  std::vector<fedad::Matrix*> lp;
  for (auto& [name, p] : learner.named_parameters()) lp.push_back(p);
  learner_adam.step(lp, enc_grads.ordered());
  std::vector<fedad::Matrix*> sp;
  for (auto& [name, p] : scorer.named_parameters()) sp.push_back(p);
  scorer_adam.step(sp, back.grads.ordered());

  double max_delta = 0.0;
  const auto fed_learner = devices[0].learner().named_parameters();
  const auto fused_learner = learner.named_parameters();
  for (std::size_t i = 0; i < fed_learner.size(); ++i) {
    for (std::size_t j = 0; j < fed_learner[i].second->size(); ++j) {
      max_delta = std::max(max_delta, std::abs(fed_learner[i].second->data[j] -
                                               fused_learner[i].second->data[j]));
    }
  }
  const auto fed_scorer = coord.scorer().named_parameters();
  const auto fused_scorer = scorer.named_parameters();
  for (std::size_t i = 0; i < fed_scorer.size(); ++i) {
    for (std::size_t j = 0; j < fed_scorer[i].second->size(); ++j) {
      max_delta = std::max(max_delta, std::abs(fed_scorer[i].second->data[j] -
                                               fused_scorer[i].second->data[j]));
    }
  }
  return {max_delta <= 1e-10,
          "max-abs parameter delta " + fmt(max_delta, 17) + " <= 1e-10"};
}

// ---------------------------------------------------------------------------
// Criterion 3: Gaussian mechanism calibration.

std::pair<bool, std::string> criterion_dp_sigma() {
  fedad::DpConfig cfg;
  cfg.enabled = true;
  cfg.epsilon = 1.0;
  cfg.delta = 1e-3;
  cfg.clip_norm = 1.0;
  const double sigma = fedad::compute_sigma(cfg);
  const double reference = std::sqrt(2.0 * std::log(1.25 / 1e-3));
  const double closed_form_err = std::abs(sigma - reference);

  fedad::Rng rng = fedad::Rng(99).derive("dp_noise", 0, 0);
  const fedad::Matrix zeros(1000000, 1);
  const fedad::Matrix noisy = fedad::apply_dp(zeros, cfg, rng);
  double sum = 0.0;
  for (double v : noisy.data) sum += v;
  const double mean = sum / static_cast<double>(noisy.size());
  double sq = 0.0;
  for (double v : noisy.data) sq += (v - mean) * (v - mean);
  const double std_dev = std::sqrt(sq / static_cast<double>(noisy.size() - 1));
  const double std_rel_err = std::abs(std_dev - sigma) / sigma;

  const bool pass = closed_form_err <= 1e-9 && std_rel_err <= 0.01;
  return {pass, "sigma " + fmt(sigma, 12) + ", closed-form err " +
                    fmt(closed_form_err, 15) + ", empirical std rel err " +
                    fmt(std_rel_err, 5) + " over 1e6 draws"};
}

// ---------------------------------------------------------------------------
// Criterion 4: AUC implementations versus brute-force oracles.

double roc_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
  double pairs = 0.0, wins = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

double pr_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::set<double, std::greater<double>> thresholds(scores.begin(), scores.end());
  const double positives =
      static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  double ap = 0.0, prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) (labels[i] == 1 ? tp : fp) += 1.0;
    }
    const double recall = tp / positives;
    const double precision = tp / (tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

std::pair<bool, std::string> criterion_auc_oracles() {
  fedad::Rng rng(404);
  double worst_roc = 0.0, worst_pr = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.next_below(199));
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    const bool discrete = trial % 3 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = discrete ? static_cast<double>(rng.next_below(8)) / 7.0
                           : rng.next_double();
      labels[i] = rng.next_below(2) == 0 ? 0 : 1;
    }
    labels[0] = 1;
    labels[n - 1] = 0;
    worst_roc = std::max(
        worst_roc, std::abs(fedad::auc_roc(scores, labels) - roc_oracle(scores, labels)));
    worst_pr = std::max(
        worst_pr, std::abs(fedad::auc_pr(scores, labels) - pr_oracle(scores, labels)));
  }
  const bool pass = worst_roc <= 1e-9 && worst_pr <= 1e-9;
  return {pass, "1000 instances, max |diff| roc " + fmt(worst_roc, 15) + ", pr " +
                    fmt(worst_pr, 15) + ", tol 1e-9"};
}

// ---------------------------------------------------------------------------
// Criteria 5-10: end-to-end experiments.

fedad::ExperimentConfig base_config(const std::string& path, const fs::path& out) {
  fedad::ExperimentConfig cfg = fedad::load_config(path);
  cfg.output_dir = out.string();
  return cfg;
}

std::pair<bool, std::string> criterion_synthetic(const fs::path& out) {
  const auto start = Clock::now();
  fedad::ExperimentConfig cfg = base_config("configs/synthetic.json", out);
  cfg.run_name = "accept-synthetic";
  const fedad::ExperimentResult res = fedad::run_experiment(cfg);
  const double elapsed = seconds_since(start);
  const bool pass = res.final_auc_roc >= 0.99 && res.rounds_run <= 200 && elapsed < 120.0;
  return {pass, "AUC-ROC " + fmt(res.final_auc_roc) + " >= 0.99 in " +
                    std::to_string(res.rounds_run) + " rounds, " + fmt(elapsed, 1) + "s"};
}

std::pair<bool, std::string> criterion_spambase(const fs::path& out) {
  const auto start = Clock::now();
  fedad::ExperimentConfig cfg = base_config("configs/spambase.json", out);
  cfg.rounds = 2000;
  cfg.run_name = "accept-spambase";
  const fedad::ExperimentResult res = fedad::run_experiment(cfg);
  const double elapsed = seconds_since(start);
  const bool pass =
      res.final_auc_roc >= 0.88 && res.final_auc_pr >= 0.85 && elapsed < 1800.0;
  return {pass, "AUC-ROC " + fmt(res.final_auc_roc) + " >= 0.88, AUC-PR " +
                    fmt(res.final_auc_pr) + " >= 0.85, " + fmt(elapsed, 1) + "s"};
}

std::pair<bool, std::string> criterion_shuttle_dp(const fs::path& out) {
  fedad::ExperimentConfig cfg = base_config("configs/shuttle.json", out);
  cfg.rounds = 1500;
  cfg.early_stop = false;

  cfg.dp.enabled = false;
  cfg.run_name = "accept-shuttle";
  const fedad::ExperimentResult plain = fedad::run_experiment(cfg);

  cfg.dp.enabled = true;
  cfg.dp.epsilon = 8.0;
  cfg.dp.delta = 1e-3;
  cfg.dp.clip_norm = 1.0;
  cfg.run_name = "accept-shuttle-dp";
  const fedad::ExperimentResult private_run = fedad::run_experiment(cfg);

  const double degradation = plain.final_auc_roc - private_run.final_auc_roc;
  const bool pass = plain.final_auc_roc >= 0.97 && degradation <= 0.03;
  return {pass, "AUC-ROC " + fmt(plain.final_auc_roc) + " >= 0.97, DP(eps=8) " +
                    fmt(private_run.final_auc_roc) + ", degradation " +
                    fmt(degradation) + " <= 0.03"};
}

std::pair<bool, std::string> criterion_device_sweep(const fs::path& out) {
  fedad::ExperimentConfig cfg = base_config("configs/shuttle.json", out);
  cfg.rounds = 1500;
  cfg.early_stop = true;
  const std::vector<std::size_t> grid = {3, 6, 10};
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  const std::vector<fedad::SweepCell> cells = fedad::sweep_devices(cfg, grid, seeds);

  std::map<std::size_t, std::vector<double>> auc_by_k;
  std::map<std::uint64_t, std::map<std::size_t, std::int64_t>> conv;
  for (const fedad::SweepCell& cell : cells) {
    auc_by_k[cell.devices].push_back(cell.result.final_auc_roc);
    conv[cell.seed][cell.devices] = cell.result.convergence_round;
  }

  double lo = 1.0, hi = 0.0;
  for (const auto& [k, aucs] : auc_by_k) {
    double mean = 0.0;
    for (double a : aucs) mean += a;
    mean /= static_cast<double>(aucs.size());
    lo = std::min(lo, mean);
    hi = std::max(hi, mean);
  }
  const double spread = hi - lo;

  int monotone_seeds = 0;
  bool all_converged = true;
  for (const auto& [seed, by_k] : conv) {
    std::int64_t prev = -1;
    bool monotone = true;
    for (std::size_t k : grid) {
      const std::int64_t c = by_k.at(k);
      if (c < 0) all_converged = false;
      if (c < prev) monotone = false;
      prev = c;
    }
    if (monotone) ++monotone_seeds;
  }

  const bool pass = spread <= 0.01 && monotone_seeds >= 2 && all_converged;
  return {pass, "AUC spread over K " + fmt(spread) + " <= 0.01, rounds-to-convergence "
                    "non-decreasing in " + std::to_string(monotone_seeds) +
                    "/3 seeds (need >= 2)"};
}

std::pair<bool, std::string> criterion_overhead(const fs::path& out) {
  fedad::ExperimentConfig cfg = base_config("configs/synthetic.json", out);
  cfg.rounds = 5;
  cfg.eval_every = 5;
  cfg.early_stop = false;
  cfg.run_name = "accept-overhead";
  const std::vector<double> ratios = {0.25, 0.5, 0.75, 1.0};
  const std::vector<fedad::OverheadRow> rows = fedad::compare_overhead(cfg, ratios);

  bool exact = rows.size() == ratios.size();
  std::string got = "normalized {";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    exact = exact && rows[i].normalized == ratios[i];
    got += (i ? ", " : "") + fmt(rows[i].normalized, 2);
  }
  got += "}";
  return {exact, got + " equals {0.25, 0.50, 0.75, 1.00} exactly"};
}

std::pair<bool, std::string> criterion_determinism(const fs::path& out) {
  fedad::ExperimentConfig cfg = base_config("configs/synthetic.json", out);
  cfg.threads = 1;

  cfg.run_name = "accept-repro-a";
  const fedad::ExperimentResult a = fedad::run_experiment(cfg);
  cfg.run_name = "accept-repro-b";
  const fedad::ExperimentResult b = fedad::run_experiment(cfg);

  const std::string jsonl_a = read_file(fs::path(a.run_dir) / "metrics.jsonl");
  const std::string jsonl_b = read_file(fs::path(b.run_dir) / "metrics.jsonl");
  const std::string csv_a = read_file(fs::path(a.run_dir) / "metrics.csv");
  const std::string csv_b = read_file(fs::path(b.run_dir) / "metrics.csv");

  const bool identical = !jsonl_a.empty() && jsonl_a == jsonl_b && csv_a == csv_b;
  const bool no_walltime = jsonl_a.find("wall") == std::string::npos &&
                           csv_a.find("wall") == std::string::npos &&
                           jsonl_a.find("time") == std::string::npos &&
                           csv_a.find("time") == std::string::npos;
  const bool pass = identical && no_walltime;
  return {pass, std::string("metrics.jsonl ") +
                    (jsonl_a == jsonl_b ? "bitwise identical" : "DIFFERS") +
                    " across reruns (" + std::to_string(jsonl_a.size()) +
                    " bytes); wall time " +
                    (no_walltime ? "absent" : "PRESENT") + " from metrics files"};
}

}  // namespace

int main() {
  std::cout.setf(std::ios::unitbuf);  // stream results as they land
  const fs::path out =
      fs::temp_directory_path() / ("fedad_accept_" + std::to_string(::getpid()));
  fs::create_directories(out);

  Gate gate;
  gate.run(1, "gradient integrity", criterion_gradients);
  gate.run(2, "split/fused equivalence", criterion_split_equivalence);
  gate.run(3, "dp mechanism calibration", criterion_dp_sigma);
  gate.run(4, "auc oracle agreement", criterion_auc_oracles);
  gate.run(5, "synthetic end-to-end", [&] { return criterion_synthetic(out); });
  gate.run(6, "spambase desk-scale", [&] { return criterion_spambase(out); });
  gate.run(7, "shuttle with dp", [&] { return criterion_shuttle_dp(out); });
  gate.run(8, "device-count scalability", [&] { return criterion_device_sweep(out); });
  gate.run(9, "communication accounting", [&] { return criterion_overhead(out); });
  gate.run(10, "bitwise determinism", [&] { return criterion_determinism(out); });

  std::error_code ec;
  fs::remove_all(out, ec);

  if (gate.failures != 0) {
    std::cout << gate.failures << " of 10 criteria failed" << std::endl;
    return 1;
  }
  std::cout << "all 10 criteria passed" << std::endl;
  return 0;
}
