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

#include "fedad/protocol.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "fedad/errors.hpp"

namespace fedad {

double aggregate_losses(const std::vector<LossReport>& reports) {
  if (reports.empty()) {
    throw ProtocolError("aggregate_losses: no reports for this round");
  }
  double total_samples = 0.0;
  for (const LossReport& r : reports) {
    if (r.sample_count == 0) {
      throw ProtocolError("aggregate_losses: zero sample count in report");
    }
    total_samples += static_cast<double>(r.sample_count);
  }
  double loss = 0.0;
  for (const LossReport& r : reports) {
    loss += static_cast<double>(r.sample_count) / total_samples * r.loss;
  }
  return loss;
}

EdgeDevice::EdgeDevice(std::uint16_t id, DeviceShard shard, const Matrix* train_features,
                       const EncoderConfig& encoder_cfg, const DpConfig& dp,
                       std::size_t batch_size, const AdamConfig& adam_cfg,
                       const Rng& root)
    : id_(id),
      shard_(std::move(shard)),
      train_features_(train_features),
      learner_([&] {
        Rng init = root.derive("encoder_init", id);
        return FeatureLearner(encoder_cfg, init);
      }()),
      dp_(dp),
      sampler_(shard_, batch_size, root.derive("sampling", id)),
      adam_(adam_cfg),
      root_(root) {
  if (dp_.enabled) dp_.validate();
}

std::size_t EdgeDevice::local_sample_count() const {
  return shard_.unlabeled.size() + shard_.labeled.size();
}

std::vector<std::uint8_t> EdgeDevice::upload_features(std::uint32_t round) {
  if (round < current_round_) {
    throw ProtocolError("device " + std::to_string(id_) + ": round " +
                        std::to_string(round) + " is behind round " +
                        std::to_string(current_round_));
  }
  current_round_ = round;
  round_open_ = true;

  Batch batch = sampler_.next(*train_features_);
  batch_labels_ = std::move(batch.labels);
  Matrix features = learner_.forward(batch.features, tape_);
  if (!features.all_finite()) {
    throw NumericError("device " + std::to_string(id_) +
                       ": non-finite features at round " + std::to_string(round));
  }
  Rng noise = root_.derive("dp_noise", id_, round);
  Matrix upload = apply_dp(features, dp_, noise);
  uploaded_rows_ = upload.rows;

  wire::Frame frame;
  frame.tag = wire::Tag::kFeatureBatch;
  frame.round = round;
  frame.device_id = id_;
  frame.matrix = std::move(upload);
  return wire::encode(frame);
}

std::vector<std::uint8_t> EdgeDevice::report_loss(
    const std::vector<std::uint8_t>& score_frame) {
  const wire::Frame frame = wire::decode(score_frame);
  if (frame.tag != wire::Tag::kScoreBatch || frame.device_id != id_ ||
      frame.round != current_round_ || !round_open_) {
    throw ProtocolError("device " + std::to_string(id_) +
                        ": unexpected score frame (tag " +
                        std::to_string(static_cast<int>(frame.tag)) + ", round " +
                        std::to_string(frame.round) + ")");
  }
  if (frame.matrix.cols != 1 || frame.matrix.rows != batch_labels_.size()) {
    throw ProtocolError("device " + std::to_string(id_) + ": score batch shape " +
                        frame.matrix.shape_str() + " does not match batch size " +
                        std::to_string(batch_labels_.size()));
  }
  std::vector<double> scores(frame.matrix.data.begin(), frame.matrix.data.end());
  const double loss = bce_loss(scores, batch_labels_);
  if (!std::isfinite(loss)) {
    throw NumericError("device " + std::to_string(id_) + ": non-finite loss");
  }

  wire::Frame report;
  report.tag = wire::Tag::kLossReport;
  report.round = current_round_;
  report.device_id = id_;
  report.loss = loss;
  report.sample_count = static_cast<std::uint32_t>(batch_labels_.size());
  return wire::encode(report);
}

void EdgeDevice::receive_global_loss(const std::vector<std::uint8_t>& bytes) {
  const wire::Frame frame = wire::decode(bytes);
  if (frame.tag != wire::Tag::kGlobalLoss || frame.round != current_round_) {
    throw ProtocolError("device " + std::to_string(id_) +
                        ": unexpected global-loss frame");
  }
  last_global_loss_ = frame.loss;
}

void EdgeDevice::apply_feature_grad(const std::vector<std::uint8_t>& grad_frame) {
  const wire::Frame frame = wire::decode(grad_frame);
  if (frame.tag != wire::Tag::kFeatureGrad || frame.device_id != id_ ||
      frame.round != current_round_ || !round_open_) {
    throw ProtocolError("device " + std::to_string(id_) +
                        ": unexpected feature-grad frame");
  }
  if (frame.matrix.rows != uploaded_rows_ ||
      frame.matrix.cols != learner_.config().feature_dim) {
    throw ProtocolError("device " + std::to_string(id_) + ": feature grad " +
                        frame.matrix.shape_str() + " does not match upload shape");
  }

  EncoderGrads grads = learner_.backward(tape_, frame.matrix);
  auto params = learner_.named_parameters();
  std::vector<Matrix*> param_ptrs;
  param_ptrs.reserve(params.size());
  for (auto& [name, ptr] : params) param_ptrs.push_back(ptr);
  adam_.step(param_ptrs, grads.ordered());
  round_open_ = false;
}

std::vector<double> EdgeDevice::eval_scores(const Matrix& features,
                                            const MlpScorer& scorer,
                                            std::uint32_t eval_tag) {
  Matrix encoded = learner_.forward(features);
  Rng noise = root_.derive("eval_noise", id_, eval_tag);
  Matrix uploaded = apply_dp(encoded, dp_, noise);
  return scorer.score_const(uploaded);
}

Coordinator::Coordinator(const ScorerConfig& scorer_cfg, const AdamConfig& adam_cfg,
                         const Rng& root)
    : scorer_([&] {
        Rng init = root.derive("scorer_init");
        return MlpScorer(scorer_cfg, init);
      }()),
      adam_(adam_cfg),
      root_(root) {}

std::vector<std::uint8_t> Coordinator::score_upload(
    const std::vector<std::uint8_t>& feature_frame) {
  const wire::Frame frame = wire::decode(feature_frame);
  if (frame.tag != wire::Tag::kFeatureBatch) {
    throw ProtocolError("coordinator: expected FeatureBatch, got tag " +
                        std::to_string(static_cast<int>(frame.tag)));
  }
  if (frame.round < current_round_) {
    throw ProtocolError("coordinator: round " + std::to_string(frame.round) +
                        " is behind round " + std::to_string(current_round_));
  }
  if (frame.round > current_round_ || !round_open_) {
    current_round_ = frame.round;
    round_open_ = true;
    uploads_.clear();
    reports_.clear();
  }
  if (frame.matrix.cols != scorer_.config().feature_dim) {
    throw ProtocolError("coordinator: upload has " + std::to_string(frame.matrix.cols) +
                        " feature columns, scorer expects " +
                        std::to_string(scorer_.config().feature_dim));
  }
  for (const PendingUpload& u : uploads_) {
    if (u.device_id == frame.device_id) {
      throw ProtocolError("coordinator: duplicate upload from device " +
                          std::to_string(frame.device_id));
    }
  }

  ScoreBatch scored = scorer_.score_forward(frame.matrix);

  uploads_.push_back(PendingUpload{frame.device_id, frame.matrix});

  wire::Frame reply;
  reply.tag = wire::Tag::kScoreBatch;
  reply.round = frame.round;
  reply.device_id = frame.device_id;
  reply.matrix = Matrix(scored.scores.size(), 1);
  for (std::size_t i = 0; i < scored.scores.size(); ++i) {
    reply.matrix(i, 0) = scored.scores[i];
  }
  return wire::encode(reply);
}

void Coordinator::receive_loss(const std::vector<std::uint8_t>& loss_frame) {
  const wire::Frame frame = wire::decode(loss_frame);
  if (frame.tag != wire::Tag::kLossReport || frame.round != current_round_ ||
      !round_open_) {
    throw ProtocolError("coordinator: unexpected loss report");
  }
  reports_.push_back(LossReport{frame.loss, frame.sample_count});
}

std::vector<std::uint8_t> Coordinator::broadcast_global_loss() {
  std::vector<LossReport> reports = reports_;
  last_global_loss_ = aggregate_losses(reports);

  wire::Frame frame;
  frame.tag = wire::Tag::kGlobalLoss;
  frame.round = current_round_;
  frame.device_id = wire::kBroadcastId;
  frame.loss = last_global_loss_;
  return wire::encode(frame);
}

std::vector<std::vector<std::uint8_t>> Coordinator::update_and_return_grads(
    const std::vector<std::vector<int>>& labels_per_device) {
  if (!round_open_) {
    throw ProtocolError("coordinator: no open round to update");
  }
  if (labels_per_device.size() != uploads_.size()) {
    throw ProtocolError("coordinator: " + std::to_string(labels_per_device.size()) +
                        " label sets for " + std::to_string(uploads_.size()) +
                        " uploads");
  }

  double total_samples = 0.0;
  for (const PendingUpload& u : uploads_) {
    total_samples += static_cast<double>(u.features.rows);
  }

  // Backward passes all use the pre-update parameters; the single Adam step
  // below consumes the sample-weighted aggregate.
  ScorerGrads aggregate;
  std::vector<std::vector<std::uint8_t>> grad_frames;
  grad_frames.reserve(uploads_.size());
  for (std::size_t k = 0; k < uploads_.size(); ++k) {
    const PendingUpload& upload = uploads_[k];
    (void)scorer_.score_forward(upload.features);
    ScorerBackward back = scorer_.backward(labels_per_device[k]);
    const double weight = static_cast<double>(upload.features.rows) / total_samples;
    aggregate.accumulate(back.grads, weight);

    wire::Frame frame;
    frame.tag = wire::Tag::kFeatureGrad;
    frame.round = current_round_;
    frame.device_id = upload.device_id;
    frame.matrix = std::move(back.feature_grad);
    grad_frames.push_back(wire::encode(frame));
  }

  auto params = scorer_.named_parameters();
  std::vector<Matrix*> param_ptrs;
  param_ptrs.reserve(params.size());
  for (auto& [name, ptr] : params) param_ptrs.push_back(ptr);
  adam_.step(param_ptrs, aggregate.ordered());

  round_open_ = false;
  uploads_.clear();
  reports_.clear();
  return grad_frames;
}

RoundRecord run_round(std::vector<EdgeDevice>& devices, Coordinator& coord,
                      const RoundConfig& cfg) {
  if (devices.empty()) throw ProtocolError("run_round: no devices");
  if (cfg.dropout_prob < 0.0 || cfg.dropout_prob >= 1.0) {
    throw ConfigError("run_round: dropout_prob must be in [0, 1)");
  }
  const auto start = std::chrono::steady_clock::now();

  // Participation draw; re-drawn when it would empty the round.
  std::vector<std::size_t> active;
  if (cfg.dropout_prob == 0.0) {
    active.resize(devices.size());
    for (std::size_t i = 0; i < devices.size(); ++i) active[i] = i;
  } else {
    Rng dropout = coord.root().derive("dropout", cfg.round);
    while (active.empty()) {
      for (std::size_t i = 0; i < devices.size(); ++i) {
        if (dropout.next_double() >= cfg.dropout_prob) active.push_back(i);
      }
    }
  }
  std::sort(active.begin(), active.end(), [&devices](std::size_t a, std::size_t b) {
    return devices[a].id() < devices[b].id();
  });

  RoundRecord record;
  record.round = cfg.round;

  std::vector<std::vector<int>> labels_per_device;
  labels_per_device.reserve(active.size());

  for (std::size_t idx : active) {
    EdgeDevice& device = devices[idx];

    const std::vector<std::uint8_t> upload = device.upload_features(cfg.round);
    record.bytes_up += upload.size();
    record.feature_payload_bytes += 8u * wire::decode(upload).matrix.size();

    const std::vector<std::uint8_t> scores = coord.score_upload(upload);
    record.bytes_down += scores.size();

    const std::vector<std::uint8_t> loss_report = device.report_loss(scores);
    record.bytes_up += loss_report.size();
    coord.receive_loss(loss_report);
    record.participants.push_back(device.id());
    record.device_losses.push_back(wire::decode(loss_report).loss);

    labels_per_device.push_back(device.round_labels());
  }

  const std::vector<std::uint8_t> global_loss = coord.broadcast_global_loss();
  for (std::size_t idx : active) {
    devices[idx].receive_global_loss(global_loss);
    record.bytes_down += global_loss.size();
  }

  const std::vector<std::vector<std::uint8_t>> grads =
      coord.update_and_return_grads(labels_per_device);
  for (std::size_t i = 0; i < active.size(); ++i) {
    record.bytes_down += grads[i].size();
    devices[active[i]].apply_feature_grad(grads[i]);
  }

  record.global_loss = coord.last_global_loss();

  const auto end = std::chrono::steady_clock::now();
  record.wall_time_ms =
      std::chrono::duration<double, std::milli>(end - start).count();
  return record;
}

DetectionReport detect(std::vector<EdgeDevice>& devices, Coordinator& coord,
                       const Matrix& features, double tau, std::uint32_t eval_tag) {
  if (devices.empty()) throw ProtocolError("detect: no devices");
  if (tau <= 0.0 || tau >= 1.0) {
    throw ConfigError("detect: tau must be in (0, 1), got " + std::to_string(tau));
  }

  DetectionReport report;
  report.mean_scores.assign(features.rows, 0.0);
  for (EdgeDevice& device : devices) {
    DeviceDetection d;
    d.device_id = device.id();
    d.scores = device.eval_scores(features, coord.scorer(), eval_tag);
    d.pseudo_labels = pseudo_label(d.scores, tau);
    for (std::size_t i = 0; i < d.scores.size(); ++i) {
      report.mean_scores[i] += d.scores[i];
      if (d.scores[i] > tau) d.alerts.push_back(i);
    }
    report.per_device.push_back(std::move(d));
  }
  for (double& s : report.mean_scores) s /= static_cast<double>(devices.size());
  for (std::size_t i = 0; i < report.mean_scores.size(); ++i) {
    if (report.mean_scores[i] > tau) report.alerts.push_back(i);
  }
  return report;
}

}  // namespace fedad
