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
#include <utility>
#include <vector>

#include "fedad/matrix.hpp"
#include "fedad/rng.hpp"

namespace fedad {

struct ScorerConfig {
  std::size_t feature_dim = 0;  // m, width of uploaded features
  std::size_t hidden1 = 64;
  std::size_t hidden2 = 32;
};

// Anomaly scores for one uploaded feature batch.
struct ScoreBatch {
  std::uint16_t device_id = 0;
  std::uint32_t round = 0;
  std::vector<double> scores;  // each strictly in (0, 1)
};

struct ScorerGrads {
  Matrix w1, b1, w2, b2, w3, b3;

  std::vector<const Matrix*> ordered() const;
  // grads += other * weight; used for the coordinator's weighted aggregate.
  void accumulate(const ScorerGrads& other, double weight);
};

struct ScorerBackward {
  ScorerGrads grads;
  Matrix feature_grad;  // d(loss)/d(features), shape of the scored batch
};

// Cloud-side decoder: MLP m -> hidden1 -> hidden2 -> 1 with ReLU hidden
// activations and a sigmoid output. Retains the forward intermediates of the
// most recent batch so backward can run without re-presenting the features.
class MlpScorer {
 public:
  MlpScorer(ScorerConfig config, Rng& rng);

  const ScorerConfig& config() const { return config_; }

  // Scores a feature batch and retains the tape for backward.
  ScoreBatch score_forward(const Matrix& features);

  // Scores without touching the retained tape (evaluation path).
  std::vector<double> score_const(const Matrix& features) const;

  // Gradients of the mean binary cross-entropy between the retained scores
  // and `labels`, for both the MLP parameters and the input features.
  ScorerBackward backward(const std::vector<int>& labels) const;

  std::vector<std::pair<std::string, Matrix*>> named_parameters();
  std::vector<std::pair<std::string, const Matrix*>> named_parameters() const;

  Matrix w1, b1, w2, b2, w3, b3;

 private:
  struct Tape {
    bool valid = false;
    Matrix input, z1, a1, z2, a2;
    std::vector<double> scores;
  };

  ScorerConfig config_;
  Tape tape_;
};

// Elementwise threshold: 1 if score >= tau, else 0 (ties count as anomalous).
std::vector<int> pseudo_label(const std::vector<double>& scores, double tau);

// Mean binary cross-entropy; scores are clamped to [1e-12, 1 - 1e-12]
// before the logs.
double bce_loss(const std::vector<double>& scores, const std::vector<int>& labels);

}  // namespace fedad
