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

#include "fedad/encoder.hpp"

#include <cmath>
#include <string>

#include "fedad/errors.hpp"

namespace fedad {

namespace k = kernels;

namespace {

constexpr double kLayerNormEps = 1e-5;

Matrix uniform_init(Rng& rng, std::size_t rows, std::size_t cols) {
  const double limit = std::sqrt(1.0 / static_cast<double>(rows));
  Matrix m(rows, cols);
  for (double& v : m.data) v = (2.0 * rng.next_double() - 1.0) * limit;
  return m;
}

Matrix col_block(const Matrix& m, std::size_t start, std::size_t width) {
  Matrix out(m.rows, width);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < width; ++j) out(i, j) = m(i, start + j);
  }
  return out;
}

void add_into_col_block(Matrix& dst, const Matrix& block, std::size_t start) {
  for (std::size_t i = 0; i < block.rows; ++i) {
    for (std::size_t j = 0; j < block.cols; ++j) dst(i, start + j) += block(i, j);
  }
}

// Softmax reverse per row: dS = A o (dA - rowsum(dA o A)).
Matrix softmax_backward(const Matrix& attn, const Matrix& d_attn) {
  Matrix out(attn.rows, attn.cols);
  for (std::size_t i = 0; i < attn.rows; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < attn.cols; ++j) dot += d_attn(i, j) * attn(i, j);
    for (std::size_t j = 0; j < attn.cols; ++j) {
      out(i, j) = attn(i, j) * (d_attn(i, j) - dot);
    }
  }
  return out;
}

}  // namespace

std::vector<const Matrix*> EncoderGrads::ordered() const {
  return {&wq, &wk, &wv, &wo, &w_ff1, &b_ff1, &w_ff2, &b_ff2,
          &ln1_gain, &ln1_bias, &ln2_gain, &ln2_bias, &w_comp, &b_comp};
}

FeatureLearner::FeatureLearner(EncoderConfig config, Rng& rng) : config_(config) {
  const std::size_t d = config_.input_dim;
  if (d == 0) throw ConfigError("encoder: input_dim must be positive");
  if (config_.num_heads == 0 || d % config_.num_heads != 0) {
    throw ConfigError("encoder: num_heads " + std::to_string(config_.num_heads) +
                      " must divide input_dim " + std::to_string(d));
  }
  if (config_.feature_dim == 0 || config_.feature_dim > d) {
    throw ConfigError("encoder: feature_dim " + std::to_string(config_.feature_dim) +
                      " must be in [1, input_dim " + std::to_string(d) + "]");
  }
  const std::size_t d_ff = 2 * d;
  wq = uniform_init(rng, d, d);
  wk = uniform_init(rng, d, d);
  wv = uniform_init(rng, d, d);
  wo = uniform_init(rng, d, d);
  w_ff1 = uniform_init(rng, d, d_ff);
  b_ff1 = Matrix(1, d_ff, 0.0);
  w_ff2 = uniform_init(rng, d_ff, d);
  b_ff2 = Matrix(1, d, 0.0);
  ln1_gain = Matrix(1, d, 1.0);
  ln1_bias = Matrix(1, d, 0.0);
  ln2_gain = Matrix(1, d, 1.0);
  ln2_bias = Matrix(1, d, 0.0);
  w_comp = uniform_init(rng, d, config_.feature_dim);
  b_comp = Matrix(1, config_.feature_dim, 0.0);
}

Matrix FeatureLearner::positional_encoding(std::size_t seq_len, std::size_t dim) {
  Matrix pe(seq_len, dim);
  for (std::size_t p = 0; p < seq_len; ++p) {
    for (std::size_t j = 0; j < dim; ++j) {
      const std::size_t pair = j - (j % 2);
      const double omega =
          std::pow(10000.0, -static_cast<double>(pair) / static_cast<double>(dim));
      const double angle = static_cast<double>(p) * omega;
      pe(p, j) = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

Matrix FeatureLearner::multi_head_attention(const Matrix& x, EncoderTape& tape) const {
  const std::size_t d = config_.input_dim;
  if (x.cols != d) {
    throw ShapeError("multi_head_attention: expected " + std::to_string(d) +
                     " columns, got " + x.shape_str());
  }
  const std::size_t b = x.rows;
  const std::size_t d_h = head_dim();

  tape.v = k::matmul(x, wv);
  tape.attn.clear();
  tape.attn.reserve(config_.num_heads);

  if (!config_.batch_as_sequence) {
    // Each sample is a single token: softmax over one key is exactly 1, so
    // every head's output is its value block and queries/keys drop out of
    // both passes.
    tape.q = Matrix();
    tape.k = Matrix();
    for (std::size_t h = 0; h < config_.num_heads; ++h) {
      tape.attn.emplace_back(b, 1, 1.0);
    }
    tape.concat = tape.v;
    return k::matmul(tape.concat, wo);
  }

  tape.q = k::matmul(x, wq);
  tape.k = k::matmul(x, wk);
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(d_h));
  Matrix concat(b, d, 0.0);
  for (std::size_t h = 0; h < config_.num_heads; ++h) {
    const std::size_t start = h * d_h;
    Matrix qh = col_block(tape.q, start, d_h);
    Matrix kh = col_block(tape.k, start, d_h);
    Matrix vh = col_block(tape.v, start, d_h);
    Matrix scores = k::scale(k::matmul_nt(qh, kh), inv_sqrt_dk);
    Matrix weights = k::softmax_rows(scores);
    Matrix head = k::matmul(weights, vh);
    add_into_col_block(concat, head, start);
    tape.attn.push_back(std::move(weights));
  }
  tape.concat = std::move(concat);
  return k::matmul(tape.concat, wo);
}

Matrix FeatureLearner::forward(const Matrix& batch, EncoderTape& tape) const {
  const std::size_t d = config_.input_dim;
  if (batch.cols != d) {
    throw ShapeError("encoder_forward: expected " + std::to_string(d) +
                     " columns, got " + batch.shape_str());
  }
  if (!batch.all_finite()) {
    throw DataError("encoder_forward: non-finite value in input batch");
  }

  tape.batch_as_sequence = config_.batch_as_sequence;
  tape.batch_rows = batch.rows;

  const std::size_t pe_rows = config_.batch_as_sequence ? batch.rows : 1;
  const Matrix pe = positional_encoding(pe_rows, d);
  Matrix x_pe(batch.rows, d);
  for (std::size_t i = 0; i < batch.rows; ++i) {
    const std::size_t p = config_.batch_as_sequence ? i : 0;
    for (std::size_t j = 0; j < d; ++j) x_pe(i, j) = batch(i, j) + pe(p, j);
  }
  tape.x_pe = std::move(x_pe);

  Matrix attn_out = multi_head_attention(tape.x_pe, tape);
  Matrix sum1 = k::add(tape.x_pe, attn_out);
  tape.u = k::layer_norm_cached(sum1, ln1_gain, ln1_bias, kLayerNormEps, &tape.ln1);

  tape.h_pre = k::add_row_broadcast(k::matmul(tape.u, w_ff1), b_ff1);
  tape.h_relu = k::relu(tape.h_pre);
  Matrix ff = k::add_row_broadcast(k::matmul(tape.h_relu, w_ff2), b_ff2);
  Matrix sum2 = k::add(tape.u, ff);
  tape.encoded = k::layer_norm_cached(sum2, ln2_gain, ln2_bias, kLayerNormEps, &tape.ln2);

  return k::add_row_broadcast(k::matmul(tape.encoded, w_comp), b_comp);
}

Matrix FeatureLearner::forward(const Matrix& batch) const {
  EncoderTape tape;
  return forward(batch, tape);
}

EncoderGrads FeatureLearner::backward(const EncoderTape& tape,
                                      const Matrix& feature_grad) const {
  const std::size_t d = config_.input_dim;
  const std::size_t d_h = head_dim();
  if (tape.batch_rows == 0 || tape.encoded.rows != tape.batch_rows) {
    throw TapeError("encoder_backward: tape was not recorded by forward");
  }
  if (tape.batch_as_sequence != config_.batch_as_sequence ||
      tape.attn.size() != config_.num_heads) {
    throw TapeError("encoder_backward: tape does not match learner configuration");
  }
  if (feature_grad.rows != tape.batch_rows || feature_grad.cols != config_.feature_dim) {
    throw TapeError("encoder_backward: feature_grad " + feature_grad.shape_str() +
                    " does not match tape batch (" + std::to_string(tape.batch_rows) +
                    "x" + std::to_string(config_.feature_dim) + ")");
  }

  EncoderGrads g;

  // Compression layer.
  g.w_comp = k::matmul_tn(tape.encoded, feature_grad);
  g.b_comp = k::col_sums(feature_grad);
  Matrix d_encoded = k::matmul_nt(feature_grad, w_comp);

  // Second residual + layer norm.
  k::LayerNormGrads ln2g = k::layer_norm_backward(d_encoded, tape.ln2, ln2_gain);
  g.ln2_gain = std::move(ln2g.d_gain);
  g.ln2_bias = std::move(ln2g.d_bias);
  const Matrix& d_sum2 = ln2g.d_input;

  // Feed-forward sublayer.
  g.w_ff2 = k::matmul_tn(tape.h_relu, d_sum2);
  g.b_ff2 = k::col_sums(d_sum2);
  Matrix d_h_relu = k::matmul_nt(d_sum2, w_ff2);
  Matrix d_h_pre = k::relu_backward(tape.h_pre, d_h_relu);
  g.w_ff1 = k::matmul_tn(tape.u, d_h_pre);
  g.b_ff1 = k::col_sums(d_h_pre);
  Matrix d_u = k::add(d_sum2, k::matmul_nt(d_h_pre, w_ff1));

  // First residual + layer norm.
  k::LayerNormGrads ln1g = k::layer_norm_backward(d_u, tape.ln1, ln1_gain);
  g.ln1_gain = std::move(ln1g.d_gain);
  g.ln1_bias = std::move(ln1g.d_bias);
  const Matrix& d_sum1 = ln1g.d_input;

  // Attention sublayer. d_sum1 flows into both the residual branch and the
  // attention output.
  g.wo = k::matmul_tn(tape.concat, d_sum1);
  Matrix d_concat = k::matmul_nt(d_sum1, wo);

  if (!config_.batch_as_sequence) {
    // Singleton attention: head output = value block, so the only weight
    // gradients in this sublayer are W^V and W^0.
    g.wq = Matrix(d, d, 0.0);
    g.wk = Matrix(d, d, 0.0);
    g.wv = k::matmul_tn(tape.x_pe, d_concat);
    return g;
  }

  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(d_h));
  Matrix d_q(tape.batch_rows, d, 0.0);
  Matrix d_k(tape.batch_rows, d, 0.0);
  Matrix d_v(tape.batch_rows, d, 0.0);
  for (std::size_t h = 0; h < config_.num_heads; ++h) {
    const std::size_t start = h * d_h;
    Matrix d_head = col_block(d_concat, start, d_h);
    Matrix qh = col_block(tape.q, start, d_h);
    Matrix kh = col_block(tape.k, start, d_h);
    Matrix vh = col_block(tape.v, start, d_h);
    const Matrix& weights = tape.attn[h];

    Matrix d_weights = k::matmul_nt(d_head, vh);
    add_into_col_block(d_v, k::matmul_tn(weights, d_head), start);
    Matrix d_scores = k::scale(softmax_backward(weights, d_weights), inv_sqrt_dk);
    add_into_col_block(d_q, k::matmul(d_scores, kh), start);
    add_into_col_block(d_k, k::matmul_tn(d_scores, qh), start);
  }

  g.wq = k::matmul_tn(tape.x_pe, d_q);
  g.wk = k::matmul_tn(tape.x_pe, d_k);
  g.wv = k::matmul_tn(tape.x_pe, d_v);
  return g;
}

std::vector<std::pair<std::string, Matrix*>> FeatureLearner::named_parameters() {
  return {{"wq", &wq},           {"wk", &wk},
          {"wv", &wv},           {"wo", &wo},
          {"w_ff1", &w_ff1},     {"b_ff1", &b_ff1},
          {"w_ff2", &w_ff2},     {"b_ff2", &b_ff2},
          {"ln1_gain", &ln1_gain}, {"ln1_bias", &ln1_bias},
          {"ln2_gain", &ln2_gain}, {"ln2_bias", &ln2_bias},
          {"w_comp", &w_comp},   {"b_comp", &b_comp}};
}

std::vector<std::pair<std::string, const Matrix*>> FeatureLearner::named_parameters()
    const {
  return {{"wq", &wq},           {"wk", &wk},
          {"wv", &wv},           {"wo", &wo},
          {"w_ff1", &w_ff1},     {"b_ff1", &b_ff1},
          {"w_ff2", &w_ff2},     {"b_ff2", &b_ff2},
          {"ln1_gain", &ln1_gain}, {"ln1_bias", &ln1_bias},
          {"ln2_gain", &ln2_gain}, {"ln2_bias", &ln2_bias},
          {"w_comp", &w_comp},   {"b_comp", &b_comp}};
}

}  // namespace fedad
