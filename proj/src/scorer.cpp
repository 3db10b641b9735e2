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

#include "fedad/scorer.hpp"

#include <cmath>
#include <string>

#include "fedad/errors.hpp"
#include "fedad/kernels.hpp"

namespace fedad {

namespace k = kernels;

namespace {

constexpr double kScoreClamp = 1e-12;

Matrix uniform_init(Rng& rng, std::size_t rows, std::size_t cols) {
  const double limit = std::sqrt(1.0 / static_cast<double>(rows));
  Matrix m(rows, cols);
  for (double& v : m.data) v = (2.0 * rng.next_double() - 1.0) * limit;
  return m;
}

double clamp_score(double s) {
  if (s < kScoreClamp) return kScoreClamp;
  if (s > 1.0 - kScoreClamp) return 1.0 - kScoreClamp;
  return s;
}

}  // namespace

std::vector<const Matrix*> ScorerGrads::ordered() const {
  return {&w1, &b1, &w2, &b2, &w3, &b3};
}

void ScorerGrads::accumulate(const ScorerGrads& other, double weight) {
  auto add_scaled = [weight](Matrix& dst, const Matrix& src) {
    if (dst.size() == 0) {
      dst = Matrix(src.rows, src.cols, 0.0);
    }
    require_same_shape(dst, src, "scorer grads accumulate");
    for (std::size_t i = 0; i < dst.size(); ++i) dst.data[i] += weight * src.data[i];
  };
  add_scaled(w1, other.w1);
  add_scaled(b1, other.b1);
  add_scaled(w2, other.w2);
  add_scaled(b2, other.b2);
  add_scaled(w3, other.w3);
  add_scaled(b3, other.b3);
}

MlpScorer::MlpScorer(ScorerConfig config, Rng& rng) : config_(config) {
  if (config_.feature_dim == 0 || config_.hidden1 == 0 || config_.hidden2 == 0) {
    throw ConfigError("scorer: all layer widths must be positive");
  }
  w1 = uniform_init(rng, config_.feature_dim, config_.hidden1);
  b1 = Matrix(1, config_.hidden1, 0.0);
  w2 = uniform_init(rng, config_.hidden1, config_.hidden2);
  b2 = Matrix(1, config_.hidden2, 0.0);
  w3 = uniform_init(rng, config_.hidden2, 1);
  b3 = Matrix(1, 1, 0.0);
}

ScoreBatch MlpScorer::score_forward(const Matrix& features) {
  if (features.cols != config_.feature_dim) {
    throw ShapeError("score_forward: expected " + std::to_string(config_.feature_dim) +
                     " columns, got " + features.shape_str());
  }
  tape_.input = features;
  tape_.z1 = k::add_row_broadcast(k::matmul(features, w1), b1);
  tape_.a1 = k::relu(tape_.z1);
  tape_.z2 = k::add_row_broadcast(k::matmul(tape_.a1, w2), b2);
  tape_.a2 = k::relu(tape_.z2);
  Matrix z3 = k::add_row_broadcast(k::matmul(tape_.a2, w3), b3);

  ScoreBatch out;
  out.scores.resize(features.rows);
  for (std::size_t i = 0; i < features.rows; ++i) {
    out.scores[i] = 1.0 / (1.0 + std::exp(-z3(i, 0)));
  }
  tape_.scores = out.scores;
  tape_.valid = true;
  return out;
}

std::vector<double> MlpScorer::score_const(const Matrix& features) const {
  if (features.cols != config_.feature_dim) {
    throw ShapeError("score_const: expected " + std::to_string(config_.feature_dim) +
                     " columns, got " + features.shape_str());
  }
  Matrix a1 = k::relu(k::add_row_broadcast(k::matmul(features, w1), b1));
  Matrix a2 = k::relu(k::add_row_broadcast(k::matmul(a1, w2), b2));
  Matrix z3 = k::add_row_broadcast(k::matmul(a2, w3), b3);
  std::vector<double> scores(features.rows);
  for (std::size_t i = 0; i < features.rows; ++i) {
    scores[i] = 1.0 / (1.0 + std::exp(-z3(i, 0)));
  }
  return scores;
}

ScorerBackward MlpScorer::backward(const std::vector<int>& labels) const {
  if (!tape_.valid) {
    throw TapeError("scorer backward: no forward tape for this batch");
  }
  const std::size_t b = tape_.scores.size();
  if (labels.size() != b) {
    throw ShapeError("scorer backward: " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(b) + " scores");
  }

  // Mean BCE through the sigmoid: d(loss)/d(logit) = (score - label) / b.
  Matrix d_z3(b, 1);
  for (std::size_t i = 0; i < b; ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw DataError("scorer backward: label must be 0 or 1, got " +
                      std::to_string(labels[i]));
    }
    d_z3(i, 0) = (tape_.scores[i] - static_cast<double>(labels[i])) /
                 static_cast<double>(b);
  }

  ScorerBackward out;
  out.grads.w3 = k::matmul_tn(tape_.a2, d_z3);
  out.grads.b3 = k::col_sums(d_z3);
  Matrix d_a2 = k::matmul_nt(d_z3, w3);
  Matrix d_z2 = k::relu_backward(tape_.z2, d_a2);
  out.grads.w2 = k::matmul_tn(tape_.a1, d_z2);
  out.grads.b2 = k::col_sums(d_z2);
  Matrix d_a1 = k::matmul_nt(d_z2, w2);
  Matrix d_z1 = k::relu_backward(tape_.z1, d_a1);
  out.grads.w1 = k::matmul_tn(tape_.input, d_z1);
  out.grads.b1 = k::col_sums(d_z1);
  out.feature_grad = k::matmul_nt(d_z1, w1);
  return out;
}

std::vector<std::pair<std::string, Matrix*>> MlpScorer::named_parameters() {
  return {{"w1", &w1}, {"b1", &b1}, {"w2", &w2},
          {"b2", &b2}, {"w3", &w3}, {"b3", &b3}};
}

std::vector<std::pair<std::string, const Matrix*>> MlpScorer::named_parameters() const {
  return {{"w1", &w1}, {"b1", &b1}, {"w2", &w2},
          {"b2", &b2}, {"w3", &w3}, {"b3", &b3}};
}

std::vector<int> pseudo_label(const std::vector<double>& scores, double tau) {
  std::vector<int> labels(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    labels[i] = scores[i] >= tau ? 1 : 0;
  }
  return labels;
}

double bce_loss(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("bce_loss: " + std::to_string(scores.size()) + " scores vs " +
                     std::to_string(labels.size()) + " labels");
  }
  if (scores.empty()) throw ShapeError("bce_loss: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw DataError("bce_loss: label must be 0 or 1, got " + std::to_string(labels[i]));
    }
    const double x = clamp_score(scores[i]);
    total += labels[i] == 1 ? -std::log(x) : -std::log(1.0 - x);
  }
  return total / static_cast<double>(scores.size());
}

}  // namespace fedad
