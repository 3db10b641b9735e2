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

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "fedad/kernels.hpp"
#include "fedad/matrix.hpp"
#include "fedad/rng.hpp"

namespace fedad {

struct EncoderConfig {
  std::size_t input_dim = 0;    // d, the raw feature count
  std::size_t num_heads = 1;    // must divide input_dim exactly
  std::size_t feature_dim = 0;  // m, the compressed output width
  // When false (default), every sample is its own length-1 sequence and
  // attention over a single token is the identity. When true, the b samples
  // of a batch form one b-token sequence; this couples samples within a
  // batch and is kept only for exploration.
  bool batch_as_sequence = false;
};

// Forward intermediates needed by the reverse pass.
struct EncoderTape {
  bool batch_as_sequence = false;
  std::size_t batch_rows = 0;
  Matrix x_pe;               // input plus positional encoding
  Matrix q, k;               // per-token queries/keys (sequence mode only)
  Matrix v;                  // per-token values
  std::vector<Matrix> attn;  // one attention-weight matrix per head
  Matrix concat;             // concatenated head outputs, pre-W^0
  kernels::LayerNormCache ln1;
  Matrix u;                  // first sublayer output
  Matrix h_pre;              // feed-forward pre-activation
  Matrix h_relu;             // feed-forward hidden activation
  kernels::LayerNormCache ln2;
  Matrix encoded;            // second sublayer output, input to compression
};

// Gradients for every learnable parameter, in the same order as
// FeatureLearner::named_parameters().
struct EncoderGrads {
  Matrix wq, wk, wv, wo;
  Matrix w_ff1, b_ff1, w_ff2, b_ff2;
  Matrix ln1_gain, ln1_bias, ln2_gain, ln2_bias;
  Matrix w_comp, b_comp;

  std::vector<const Matrix*> ordered() const;
};

// Edge-side representation learner: one Transformer block (multi-head
// self-attention, residual + layer norm, position-wise feed-forward,
// residual + layer norm) followed by a linear compression layer that maps
// the d-wide encoding down to m features.
class FeatureLearner {
 public:
  // Initializes weights uniform in (-sqrt(1/fan_in), +sqrt(1/fan_in)),
  // biases zero, layer-norm gain 1 bias 0.
  FeatureLearner(EncoderConfig config, Rng& rng);

  const EncoderConfig& config() const { return config_; }
  std::size_t head_dim() const { return config_.input_dim / config_.num_heads; }
  std::size_t ff_dim() const { return 2 * config_.input_dim; }

  // Sinusoidal position table of shape (seq_len, dim): even columns
  // sin(p * w_j), odd columns cos(p * w_{j-1}), w_j = 10000^(-j/dim).
  static Matrix positional_encoding(std::size_t seq_len, std::size_t dim);

  // Attention sublayer on already position-encoded input; records the
  // intermediates it will need for the reverse pass on `tape`.
  Matrix multi_head_attention(const Matrix& x, EncoderTape& tape) const;

  // Full block: returns the (b, m) feature batch and fills `tape`.
  Matrix forward(const Matrix& batch, EncoderTape& tape) const;
  Matrix forward(const Matrix& batch) const;

  // Exact reverse of forward. `feature_grad` is d(loss)/d(features) for the
  // batch the tape was recorded on.
  EncoderGrads backward(const EncoderTape& tape, const Matrix& feature_grad) const;

  // Stable name/pointer list; order is the serialization and optimizer order.
  std::vector<std::pair<std::string, Matrix*>> named_parameters();
  std::vector<std::pair<std::string, const Matrix*>> named_parameters() const;

  Matrix wq, wk, wv, wo;
  Matrix w_ff1, b_ff1, w_ff2, b_ff2;
  Matrix ln1_gain, ln1_bias, ln2_gain, ln2_bias;
  Matrix w_comp, b_comp;

 private:
  EncoderConfig config_;
};

}  // namespace fedad
