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
#include <memory>
#include <string>
#include <vector>

#include "fedad/adam.hpp"
#include "fedad/dataset.hpp"
#include "fedad/dp.hpp"
#include "fedad/encoder.hpp"
#include "fedad/matrix.hpp"
#include "fedad/rng.hpp"
#include "fedad/scorer.hpp"
#include "fedad/wire.hpp"

namespace fedad {

struct LossReport {
  double loss = 0.0;
  std::uint32_t sample_count = 0;
};

// FedAvg weighting: sum of p_k * loss_k with p_k = n_k / sum n_j.
double aggregate_losses(const std::vector<LossReport>& reports);

struct RoundRecord {
  std::uint32_t round = 0;
  double global_loss = 0.0;
  std::vector<std::uint16_t> participants;
  std::vector<double> device_losses;  // parallel to participants
  std::uint64_t bytes_up = 0;
  std::uint64_t bytes_down = 0;
  // f64 payload bytes of the FeatureBatch matrices only; the quantity the
  // communication-overhead comparison normalizes.
  std::uint64_t feature_payload_bytes = 0;
  double wall_time_ms = 0.0;
};

// One simulated edge holder of a private shard. All randomness is derived
// from the root seed: encoder init from ("encoder_init", id), batch
// sampling from ("sampling", id), upload noise from ("dp_noise", id, round),
// evaluation noise from ("eval_noise", id, tag).
class EdgeDevice {
 public:
  EdgeDevice(std::uint16_t id, DeviceShard shard, const Matrix* train_features,
             const EncoderConfig& encoder_cfg, const DpConfig& dp,
             std::size_t batch_size, const AdamConfig& adam_cfg, const Rng& root);

  std::uint16_t id() const { return id_; }
  FeatureLearner& learner() { return learner_; }
  const FeatureLearner& learner() const { return learner_; }
  const DeviceShard& shard() const { return shard_; }
  std::size_t local_sample_count() const;
  double last_global_loss() const { return last_global_loss_; }

  // Round step 1-3: sample a batch, encode, apply DP, frame the upload.
  std::vector<std::uint8_t> upload_features(std::uint32_t round);

  // Round step 5: consume the returned scores, compute the local BCE loss,
  // frame the LossReport.
  std::vector<std::uint8_t> report_loss(const std::vector<std::uint8_t>& score_frame);

  // Round step 6 (device side): record the broadcast global loss.
  void receive_global_loss(const std::vector<std::uint8_t>& frame);

  // Round step 7: backprop the returned feature gradient and apply Adam.
  void apply_feature_grad(const std::vector<std::uint8_t>& grad_frame);

  // Simulation seam: the trainable cloud update needs d(loss)/d(score),
  // which only the label holder can supply. The round driver hands these
  // labels to the coordinator's backward pass in process; they are never
  // framed for the wire, keeping the uploaded message set to features,
  // losses, and counts only.
  const std::vector<int>& round_labels() const { return batch_labels_; }

  // Evaluation path (out of band, no wire traffic): encode `features`,
  // apply DP when enabled, and score with `scorer`.
  std::vector<double> eval_scores(const Matrix& features, const MlpScorer& scorer,
                                  std::uint32_t eval_tag);

 private:
  std::uint16_t id_;
  DeviceShard shard_;
  const Matrix* train_features_;
  FeatureLearner learner_;
  DpConfig dp_;
  BatchSampler sampler_;
  AdamState adam_;
  Rng root_;
  std::uint32_t current_round_ = 0;
  bool round_open_ = false;
  EncoderTape tape_;
  std::vector<int> batch_labels_;
  std::size_t uploaded_rows_ = 0;
  double last_global_loss_ = 0.0;
};

// The simulated cloud: scores uploads, aggregates losses, owns the single
// per-round Adam step of the scorer, and produces the per-device feature
// gradients from the pre-update parameters (so a K=1 round matches a fused
// monolithic update exactly).
class Coordinator {
 public:
  Coordinator(const ScorerConfig& scorer_cfg, const AdamConfig& adam_cfg,
              const Rng& root);

  MlpScorer& scorer() { return scorer_; }
  const MlpScorer& scorer() const { return scorer_; }
  const Rng& root() const { return root_; }

  // Round step 4: decode one device upload, score it, frame the ScoreBatch.
  std::vector<std::uint8_t> score_upload(const std::vector<std::uint8_t>& feature_frame);

  // Round step 6 (cloud side, first half): collect a LossReport.
  void receive_loss(const std::vector<std::uint8_t>& loss_frame);

  // Aggregates collected reports into the broadcast GlobalLoss frame.
  std::vector<std::uint8_t> broadcast_global_loss();

  // Round step 6 (cloud side, second half): per-device backward passes with
  // pre-update parameters, one weighted Adam step, framed FeatureGrads in
  // upload order. `labels_per_device` comes from the round driver's seam.
  std::vector<std::vector<std::uint8_t>> update_and_return_grads(
      const std::vector<std::vector<int>>& labels_per_device);

  double last_global_loss() const { return last_global_loss_; }

 private:
  struct PendingUpload {
    std::uint16_t device_id = 0;
    Matrix features;
  };

  MlpScorer scorer_;
  AdamState adam_;
  Rng root_;
  std::uint32_t current_round_ = 0;
  bool round_open_ = false;
  std::vector<PendingUpload> uploads_;
  std::vector<LossReport> reports_;
  double last_global_loss_ = 0.0;
};

struct RoundConfig {
  std::uint32_t round = 0;
  // Probability that a device sits the round out; participants are
  // re-drawn if the sample would empty the round.
  double dropout_prob = 0.0;
};

// Executes round steps 1-7 over all participants in ascending
// device order, moving every exchange through the wire codec so the byte
// counts are honest.
RoundRecord run_round(std::vector<EdgeDevice>& devices, Coordinator& coord,
                      const RoundConfig& cfg);

struct DeviceDetection {
  std::uint16_t device_id = 0;
  std::vector<double> scores;
  std::vector<int> pseudo_labels;
  std::vector<std::size_t> alerts;  // sample indices with score strictly > tau
};

struct DetectionReport {
  std::vector<DeviceDetection> per_device;
  std::vector<double> mean_scores;  // per-sample average over devices
  std::vector<std::size_t> alerts;  // on mean scores, strictly > tau
};

// Full forward pass of every device's encoder plus the cloud scorer over a
// held-out feature matrix.
DetectionReport detect(std::vector<EdgeDevice>& devices, Coordinator& coord,
                       const Matrix& features, double tau, std::uint32_t eval_tag);

}  // namespace fedad
