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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "fedad/errors.hpp"
#include "fedad/matrix.hpp"
#include "fedad/protocol.hpp"
#include "fedad/rng.hpp"
#include "fedad/wire.hpp"

using fedad::AdamConfig;
using fedad::Coordinator;
using fedad::DeviceShard;
using fedad::DpConfig;
using fedad::EdgeDevice;
using fedad::EncoderConfig;
using fedad::LossReport;
using fedad::Matrix;
using fedad::ProtocolError;
using fedad::Rng;
using fedad::RoundConfig;
using fedad::RoundRecord;
using fedad::ScorerConfig;

namespace wire = fedad::wire;

namespace {

constexpr std::size_t kInputDim = 4;
constexpr std::size_t kFeatureDim = 2;
constexpr std::size_t kBatch = 4;

struct Federation {
  Matrix features;
  std::vector<EdgeDevice> devices;
  Coordinator coord;
};

// Hand-built two-pool shards over a small random feature table; labeled
// rows are the pool the sampler treats as anomalies.
Federation make_federation(std::size_t num_devices, std::uint64_t seed,
                           double learning_rate = 1e-3, bool dp = false) {
  Rng data_rng(900 + seed);
  Matrix features(6 * num_devices, kInputDim);
  for (double& v : features.data) v = data_rng.next_double();

  EncoderConfig enc;
  enc.input_dim = kInputDim;
  enc.num_heads = 2;
  enc.feature_dim = kFeatureDim;

  ScorerConfig sc;
  sc.feature_dim = kFeatureDim;

  AdamConfig adam;
  adam.learning_rate = learning_rate;

  DpConfig dp_cfg;
  dp_cfg.enabled = dp;
  dp_cfg.epsilon = 2.0;
  dp_cfg.delta = 1e-3;
  dp_cfg.clip_norm = 1.0;

  const Rng root(seed);
  Federation fed{std::move(features), {}, Coordinator(sc, adam, root)};
  fed.devices.reserve(num_devices);
  for (std::size_t i = 0; i < num_devices; ++i) {
    DeviceShard shard;
    for (std::size_t r = 0; r < 4; ++r) shard.unlabeled.push_back(6 * i + r);
    shard.labeled = {6 * i + 4, 6 * i + 5};
    fed.devices.emplace_back(static_cast<std::uint16_t>(i), shard, &fed.features, enc,
                             dp_cfg, kBatch, adam, root);
  }
  return fed;
}

std::vector<Matrix> snapshot_params(const Federation& fed) {
  std::vector<Matrix> out;
  for (const EdgeDevice& d : fed.devices) {
    for (const auto& [name, p] : d.learner().named_parameters()) out.push_back(*p);
  }
  for (const auto& [name, p] : fed.coord.scorer().named_parameters()) out.push_back(*p);
  return out;
}

}  // namespace

TEST_CASE("global-loss frame bytes are frozen") {
  wire::Frame frame;
  frame.tag = wire::Tag::kGlobalLoss;
  frame.round = 7;
  frame.device_id = wire::kBroadcastId;
  frame.loss = 1.5;
  const std::vector<std::uint8_t> want = {
      0x0F, 0x00, 0x00, 0x00,                          // length 15
      0x04,                                            // tag
      0x07, 0x00, 0x00, 0x00,                          // round
      0xFF, 0xFF,                                      // broadcast id
      0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xF8, 0x3F,  // 1.5 LE
  };
  CHECK(wire::encode(frame) == want);
}

TEST_CASE("loss-report frame bytes are frozen") {
  wire::Frame frame;
  frame.tag = wire::Tag::kLossReport;
  frame.round = 2;
  frame.device_id = 3;
  frame.loss = 0.5;
  frame.sample_count = 10;
  const std::vector<std::uint8_t> want = {
      0x13, 0x00, 0x00, 0x00,                          // length 19
      0x03,                                            // tag
      0x02, 0x00, 0x00, 0x00,                          // round
      0x03, 0x00,                                      // device
      0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xE0, 0x3F,  // 0.5 LE
      0x0A, 0x00, 0x00, 0x00,                          // count
  };
  CHECK(wire::encode(frame) == want);
}

TEST_CASE("feature-batch frame bytes are frozen") {
  wire::Frame frame;
  frame.tag = wire::Tag::kFeatureBatch;
  frame.round = 1;
  frame.device_id = 0;
  frame.matrix = Matrix::from_rows({{1.0, -2.0}});
  const std::vector<std::uint8_t> want = {
      0x1F, 0x00, 0x00, 0x00,                          // length 31
      0x01,                                            // tag
      0x01, 0x00, 0x00, 0x00,                          // round
      0x00, 0x00,                                      // device
      0x01, 0x00, 0x00, 0x00,                          // rows
      0x02, 0x00, 0x00, 0x00,                          // cols
      0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xF0, 0x3F,  // 1.0
      0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xC0,  // -2.0
  };
  CHECK(wire::encode(frame) == want);
}

TEST_CASE("every tag round-trips byte-exactly") {
  Rng rng(44);
  for (const wire::Tag tag :
       {wire::Tag::kFeatureBatch, wire::Tag::kScoreBatch, wire::Tag::kLossReport,
        wire::Tag::kGlobalLoss, wire::Tag::kFeatureGrad}) {
    wire::Frame frame;
    frame.tag = tag;
    frame.round = static_cast<std::uint32_t>(rng.next_below(1 << 30));
    frame.device_id = static_cast<std::uint16_t>(rng.next_below(0x10000));
    frame.loss = rng.next_gaussian() * 1e3;
    frame.sample_count = static_cast<std::uint32_t>(rng.next_below(1 << 20));
    frame.matrix = Matrix(3, 5);
    for (double& v : frame.matrix.data) v = rng.next_gaussian();

    const std::vector<std::uint8_t> bytes = wire::encode(frame);
    const wire::Frame back = wire::decode(bytes);
    CHECK(back.tag == frame.tag);
    CHECK(back.round == frame.round);
    CHECK(back.device_id == frame.device_id);
    if (tag == wire::Tag::kFeatureBatch || tag == wire::Tag::kScoreBatch ||
        tag == wire::Tag::kFeatureGrad) {
      CHECK(back.matrix.data == frame.matrix.data);
    } else {
      CHECK(back.loss == frame.loss);
    }
    if (tag == wire::Tag::kLossReport) CHECK(back.sample_count == frame.sample_count);
    CHECK(wire::encode(back) == bytes);
  }
}

TEST_CASE("malformed frames are rejected") {
  wire::Frame frame;
  frame.tag = wire::Tag::kGlobalLoss;
  frame.loss = 2.0;
  std::vector<std::uint8_t> bytes = wire::encode(frame);

  for (std::size_t cut = 1; cut < bytes.size(); ++cut) {
    std::vector<std::uint8_t> truncated(bytes.begin(),
                                        bytes.begin() + static_cast<long>(cut));
    CHECK_THROWS_AS(wire::decode(truncated), ProtocolError);
  }

  std::vector<std::uint8_t> trailing = bytes;
  trailing.push_back(0x00);
  CHECK_THROWS_AS(wire::decode(trailing), ProtocolError);

  std::vector<std::uint8_t> bad_tag = bytes;
  bad_tag[4] = 9;
  CHECK_THROWS_AS(wire::decode(bad_tag), ProtocolError);
  bad_tag[4] = 0;
  CHECK_THROWS_AS(wire::decode(bad_tag), ProtocolError);

  wire::Frame mat;
  mat.tag = wire::Tag::kFeatureBatch;
  mat.matrix = Matrix(2, 2, 1.0);
  std::vector<std::uint8_t> lying = wire::encode(mat);
  lying[11] = 3;  // rows header now disagrees with the payload size
  CHECK_THROWS_AS(wire::decode(lying), ProtocolError);
}

TEST_CASE("aggregate_losses is the sample-weighted mean") {
  CHECK(fedad::aggregate_losses({{1.0, 5}, {2.0, 5}}) == 1.5);
  CHECK(fedad::aggregate_losses({{1.0, 10}, {2.0, 30}}) == doctest::Approx(1.75));
  CHECK(fedad::aggregate_losses({{0.25, 123}}) == 0.25);
  CHECK_THROWS_AS(fedad::aggregate_losses({}), ProtocolError);
  CHECK_THROWS_AS(fedad::aggregate_losses({{1.0, 0}}), ProtocolError);
}

TEST_CASE("round byte accounting matches the frame arithmetic") {
  Federation fed = make_federation(3, 17);
  RoundConfig rc;
  rc.round = 0;
  const RoundRecord rec = fedad::run_round(fed.devices, fed.coord, rc);

  const std::uint64_t bm8 = 8ull * kBatch * kFeatureDim;
  const std::uint64_t up_per_device = (19 + bm8) + 23;
  const std::uint64_t down_per_device = (19 + 8ull * kBatch) + 19 + (19 + bm8);
  CHECK(rec.bytes_up == 3 * up_per_device);
  CHECK(rec.bytes_down == 3 * down_per_device);
  CHECK(rec.feature_payload_bytes == 3 * bm8);
  CHECK(rec.participants == std::vector<std::uint16_t>{0, 1, 2});
  CHECK(rec.device_losses.size() == 3);

  // Equal sample counts: the global loss is the plain mean.
  const double mean =
      std::accumulate(rec.device_losses.begin(), rec.device_losses.end(), 0.0) / 3.0;
  CHECK(rec.global_loss == doctest::Approx(mean).epsilon(1e-15));
}

TEST_CASE("upload frames expose only compressed features and scalar losses") {
  Federation fed = make_federation(2, 23, 1e-3, true);
  EdgeDevice& device = fed.devices[0];

  const std::vector<std::uint8_t> upload = device.upload_features(0);
  const wire::Frame up = wire::decode(upload);
  CHECK(up.tag == wire::Tag::kFeatureBatch);
  CHECK(up.matrix.cols == kFeatureDim);   // compressed width, not the raw dim
  CHECK(up.matrix.rows == kBatch);
  CHECK(up.matrix.cols < kInputDim);

  const std::vector<std::uint8_t> scores = fed.coord.score_upload(upload);
  const std::vector<std::uint8_t> report = device.report_loss(scores);
  const wire::Frame rep = wire::decode(report);
  CHECK(rep.tag == wire::Tag::kLossReport);
  CHECK(rep.matrix.size() == 0);  // nothing but the scalar and the count
  CHECK(rep.sample_count == kBatch);
  CHECK(std::isfinite(rep.loss));
}

TEST_CASE("uploads with DP enabled are clipped before noise") {
  Federation fed = make_federation(1, 29, 1e-3, true);
  const wire::Frame up = wire::decode(fed.devices[0].upload_features(0));
  // sigma for epsilon=2, C=1: every row norm is bounded by C plus noise of
  // scale sigma * sqrt(m); 60 sigma is an astronomically safe ceiling.
  const double sigma = 0.5 * std::sqrt(2.0 * std::log(1250.0));
  for (std::size_t i = 0; i < up.matrix.rows; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < up.matrix.cols; ++j) {
      sq += up.matrix(i, j) * up.matrix(i, j);
    }
    CHECK(std::sqrt(sq) < 1.0 + 60.0 * sigma);
  }
}

TEST_CASE("device round numbers must not regress") {
  Federation fed = make_federation(1, 31);
  fed.devices[0].upload_features(5);
  CHECK_THROWS_AS(fed.devices[0].upload_features(4), ProtocolError);
  CHECK_NOTHROW(fed.devices[0].upload_features(5));
  CHECK_NOTHROW(fed.devices[0].upload_features(6));
}

TEST_CASE("coordinator rejects duplicate uploads within a round") {
  Federation fed = make_federation(2, 37);
  const std::vector<std::uint8_t> upload = fed.devices[0].upload_features(0);
  fed.coord.score_upload(upload);
  CHECK_THROWS_AS(fed.coord.score_upload(upload), ProtocolError);
}

TEST_CASE("zero learning rate freezes every parameter") {
  Federation fed = make_federation(2, 41, 0.0);
  const std::vector<Matrix> before = snapshot_params(fed);
  for (std::uint32_t t = 0; t < 3; ++t) {
    RoundConfig rc;
    rc.round = t;
    fedad::run_round(fed.devices, fed.coord, rc);
  }
  const std::vector<Matrix> after = snapshot_params(fed);
  REQUIRE(before.size() == after.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(before[i].data == after[i].data);
  }
}

TEST_CASE("training actually moves parameters and reduces the loss") {
  Federation fed = make_federation(2, 43, 5e-3);
  double first = 0.0, last = 0.0;
  for (std::uint32_t t = 0; t < 120; ++t) {
    RoundConfig rc;
    rc.round = t;
    const RoundRecord rec = fedad::run_round(fed.devices, fed.coord, rc);
    if (t == 0) first = rec.global_loss;
    last = rec.global_loss;
  }
  CHECK(last < first);
  CHECK(last < 0.35);  // separable toy pools: loss falls well below ln 2
}

TEST_CASE("fifty rounds are bitwise deterministic across rebuilds") {
  Federation a = make_federation(3, 47, 1e-3, true);
  Federation b = make_federation(3, 47, 1e-3, true);
  for (std::uint32_t t = 0; t < 50; ++t) {
    RoundConfig rc;
    rc.round = t;
    const RoundRecord ra = fedad::run_round(a.devices, a.coord, rc);
    const RoundRecord rb = fedad::run_round(b.devices, b.coord, rc);
    CHECK(ra.global_loss == rb.global_loss);
    CHECK(ra.device_losses == rb.device_losses);
    CHECK(ra.bytes_up == rb.bytes_up);
    CHECK(ra.bytes_down == rb.bytes_down);
  }
  const std::vector<Matrix> pa = snapshot_params(a);
  const std::vector<Matrix> pb = snapshot_params(b);
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].data == pb[i].data);
}

TEST_CASE("dropout keeps rounds non-empty and renormalizes the aggregate") {
  Federation fed = make_federation(4, 53);
  std::size_t total_participants = 0;
  for (std::uint32_t t = 0; t < 40; ++t) {
    RoundConfig rc;
    rc.round = t;
    rc.dropout_prob = 0.5;
    const RoundRecord rec = fedad::run_round(fed.devices, fed.coord, rc);
    CHECK(rec.participants.size() >= 1);
    CHECK(rec.participants.size() <= 4);
    total_participants += rec.participants.size();

    const double mean = std::accumulate(rec.device_losses.begin(),
                                        rec.device_losses.end(), 0.0) /
                        static_cast<double>(rec.device_losses.size());
    CHECK(rec.global_loss == doctest::Approx(mean).epsilon(1e-12));
  }
  const double avg = static_cast<double>(total_participants) / 40.0;
  CHECK(avg > 1.2);
  CHECK(avg < 3.2);
}

TEST_CASE("detection reports per-device and ensemble alerts") {
  Federation fed = make_federation(2, 59);
  for (std::uint32_t t = 0; t < 30; ++t) {
    RoundConfig rc;
    rc.round = t;
    fedad::run_round(fed.devices, fed.coord, rc);
  }
  Rng rng(60);
  Matrix probe(10, kInputDim);
  for (double& v : probe.data) v = rng.next_double();
  const fedad::DetectionReport rep =
      fedad::detect(fed.devices, fed.coord, probe, 0.5, 999);
  REQUIRE(rep.per_device.size() == 2);
  CHECK(rep.mean_scores.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    const double mean =
        (rep.per_device[0].scores[i] + rep.per_device[1].scores[i]) / 2.0;
    CHECK(rep.mean_scores[i] == doctest::Approx(mean).epsilon(1e-15));
  }
  for (std::size_t idx : rep.alerts) CHECK(rep.mean_scores[idx] > 0.5);
  for (const auto& d : rep.per_device) {
    for (std::size_t i = 0; i < d.scores.size(); ++i) {
      CHECK(d.pseudo_labels[i] == (d.scores[i] >= 0.5 ? 1 : 0));
      const bool alerted =
          std::find(d.alerts.begin(), d.alerts.end(), i) != d.alerts.end();
      CHECK(alerted == (d.scores[i] > 0.5));
    }
  }

  // The evaluation path must not advance protocol state.
  RoundConfig rc;
  rc.round = 30;
  CHECK_NOTHROW(fedad::run_round(fed.devices, fed.coord, rc));
}
