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

#include "fedad/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fedad/errors.hpp"

namespace fedad::kernels {

namespace {

std::atomic<ExecMode> g_exec_mode{ExecMode::kSerial};

// Minimum per-call work (multiply-adds or entries touched) before the
// parallel path engages; below this the fork/join overhead dominates.
constexpr std::size_t kMinParallelWork = 1u << 15;

bool use_parallel(std::size_t work) {
#ifdef _OPENMP
  return g_exec_mode.load(std::memory_order_relaxed) == ExecMode::kParallel &&
         work >= kMinParallelWork;
#else
  (void)work;
  return false;
#endif
}

// One output row of a * b, fixed ascending-k accumulation order. Shared by
// the serial loop and the per-thread body of the parallel loop so both modes
// run the identical instruction sequence per element.
inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  const std::size_t n = a.cols, p = b.cols;
  double* out_row = &out.data[i * p];
  const double* a_row = &a.data[i * n];
  for (std::size_t k = 0; k < n; ++k) {
    const double aik = a_row[k];
    const double* b_row = &b.data[k * p];
    for (std::size_t j = 0; j < p; ++j) {
      out_row[j] += aik * b_row[j];
    }
  }
}

inline void matmul_tn_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  // out(i, j) = sum_k a(k, i) * b(k, j)
  const std::size_t n = a.rows, p = b.cols;
  double* out_row = &out.data[i * p];
  for (std::size_t k = 0; k < n; ++k) {
    const double aki = a.data[k * a.cols + i];
    const double* b_row = &b.data[k * p];
    for (std::size_t j = 0; j < p; ++j) {
      out_row[j] += aki * b_row[j];
    }
  }
}

inline void matmul_nt_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  // out(i, j) = sum_k a(i, k) * b(j, k)
  const std::size_t n = a.cols, p = b.rows;
  double* out_row = &out.data[i * p];
  const double* a_row = &a.data[i * n];
  for (std::size_t j = 0; j < p; ++j) {
    const double* b_row = &b.data[j * n];
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc += a_row[k] * b_row[k];
    }
    out_row[j] = acc;
  }
}

inline void softmax_row(const Matrix& m, Matrix& out, std::size_t i) {
  const std::size_t c = m.cols;
  const double* in_row = &m.data[i * c];
  double* out_row = &out.data[i * c];
  double mx = in_row[0];
  for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, in_row[j]);
  double sum = 0.0;
  for (std::size_t j = 0; j < c; ++j) {
    out_row[j] = std::exp(in_row[j] - mx);
    sum += out_row[j];
  }
  for (std::size_t j = 0; j < c; ++j) out_row[j] /= sum;
}

inline void layer_norm_row(const Matrix& m, const Matrix& gain, const Matrix& bias,
                           double eps, Matrix& out, LayerNormCache* cache,
                           std::size_t i) {
  const std::size_t c = m.cols;
  const double* x = &m.data[i * c];
  double mean = 0.0;
  for (std::size_t j = 0; j < c; ++j) mean += x[j];
  mean /= static_cast<double>(c);
  double var = 0.0;
  for (std::size_t j = 0; j < c; ++j) {
    const double d = x[j] - mean;
    var += d * d;
  }
  var /= static_cast<double>(c);
  const double inv_std = 1.0 / std::sqrt(var + eps);
  double* y = &out.data[i * c];
  for (std::size_t j = 0; j < c; ++j) {
    const double norm = (x[j] - mean) * inv_std;
    y[j] = norm * gain.data[j] + bias.data[j];
    if (cache != nullptr) cache->normalized.data[i * c + j] = norm;
  }
  if (cache != nullptr) cache->inv_std[i] = inv_std;
}

inline void layer_norm_backward_row(const Matrix& grad_out, const LayerNormCache& cache,
                                    const Matrix& gain, Matrix& d_input, std::size_t i) {
  const std::size_t c = grad_out.cols;
  const double* dy = &grad_out.data[i * c];
  const double* norm = &cache.normalized.data[i * c];
  const double inv_std = cache.inv_std[i];
  double mean_dn = 0.0, mean_dn_norm = 0.0;
  for (std::size_t j = 0; j < c; ++j) {
    const double dn = dy[j] * gain.data[j];
    mean_dn += dn;
    mean_dn_norm += dn * norm[j];
  }
  mean_dn /= static_cast<double>(c);
  mean_dn_norm /= static_cast<double>(c);
  double* dx = &d_input.data[i * c];
  for (std::size_t j = 0; j < c; ++j) {
    const double dn = dy[j] * gain.data[j];
    dx[j] = inv_std * (dn - mean_dn - norm[j] * mean_dn_norm);
  }
}

void check_row_params(const Matrix& m, const Matrix& gain, const Matrix& bias) {
  if (gain.rows != 1 || gain.cols != m.cols || bias.rows != 1 || bias.cols != m.cols) {
    throw ShapeError("layer_norm: gain/bias must be 1x" + std::to_string(m.cols) +
                     ", got " + gain.shape_str() + " and " + bias.shape_str());
  }
}

}  // namespace

void set_exec_mode(ExecMode mode) { g_exec_mode.store(mode, std::memory_order_relaxed); }

ExecMode exec_mode() { return g_exec_mode.load(std::memory_order_relaxed); }

int set_threads(int n) {
#ifdef _OPENMP
  if (n > 1) {
    omp_set_num_threads(n);
    set_exec_mode(ExecMode::kParallel);
    return n;
  }
#endif
  set_exec_mode(ExecMode::kSerial);
  return 1;
}

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_chain(a, b, "matmul");
  Matrix out(a.rows, b.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) matmul_row(a, b, out, i);
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) {
    throw ShapeError("matmul_tn: row counts differ " + a.shape_str() + " vs " +
                     b.shape_str());
  }
  Matrix out(a.cols, b.cols, 0.0);
  for (std::size_t i = 0; i < a.cols; ++i) matmul_tn_row(a, b, out, i);
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) {
    throw ShapeError("matmul_nt: col counts differ " + a.shape_str() + " vs " +
                     b.shape_str());
  }
  Matrix out(a.rows, b.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) matmul_nt_row(a, b, out, i);
  return out;
}

Matrix softmax_rows(const Matrix& m) {
  require_finite(m, "softmax_rows");
  Matrix out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.rows; ++i) softmax_row(m, out, i);
  return out;
}

Matrix layer_norm_cached(const Matrix& m, const Matrix& gain, const Matrix& bias,
                         double eps, LayerNormCache* cache) {
  check_row_params(m, gain, bias);
  Matrix out(m.rows, m.cols);
  if (cache != nullptr) {
    cache->normalized = Matrix(m.rows, m.cols);
    cache->inv_std.assign(m.rows, 0.0);
  }
  for (std::size_t i = 0; i < m.rows; ++i) {
    layer_norm_row(m, gain, bias, eps, out, cache, i);
  }
  return out;
}

LayerNormGrads layer_norm_backward(const Matrix& grad_out, const LayerNormCache& cache,
                                   const Matrix& gain) {
  require_same_shape(grad_out, cache.normalized, "layer_norm_backward");
  LayerNormGrads g;
  g.d_input = Matrix(grad_out.rows, grad_out.cols);
  g.d_gain = Matrix(1, grad_out.cols, 0.0);
  g.d_bias = Matrix(1, grad_out.cols, 0.0);
  for (std::size_t i = 0; i < grad_out.rows; ++i) {
    layer_norm_backward_row(grad_out, cache, gain, g.d_input, i);
    for (std::size_t j = 0; j < grad_out.cols; ++j) {
      g.d_gain.data[j] += grad_out(i, j) * cache.normalized(i, j);
      g.d_bias.data[j] += grad_out(i, j);
    }
  }
  return g;
}

}  // namespace serial

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_chain(a, b, "matmul");
  Matrix out(a.rows, b.cols, 0.0);
  const std::size_t work = a.rows * a.cols * b.cols;
  if (use_parallel(work)) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(a.rows); ++i) {
      matmul_row(a, b, out, static_cast<std::size_t>(i));
    }
    return out;
  }
  for (std::size_t i = 0; i < a.rows; ++i) matmul_row(a, b, out, i);
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) {
    throw ShapeError("matmul_tn: row counts differ " + a.shape_str() + " vs " +
                     b.shape_str());
  }
  Matrix out(a.cols, b.cols, 0.0);
  const std::size_t work = a.rows * a.cols * b.cols;
  if (use_parallel(work)) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(a.cols); ++i) {
      matmul_tn_row(a, b, out, static_cast<std::size_t>(i));
    }
    return out;
  }
  for (std::size_t i = 0; i < a.cols; ++i) matmul_tn_row(a, b, out, i);
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) {
    throw ShapeError("matmul_nt: col counts differ " + a.shape_str() + " vs " +
                     b.shape_str());
  }
  Matrix out(a.rows, b.rows, 0.0);
  const std::size_t work = a.rows * a.cols * b.rows;
  if (use_parallel(work)) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(a.rows); ++i) {
      matmul_nt_row(a, b, out, static_cast<std::size_t>(i));
    }
    return out;
  }
  for (std::size_t i = 0; i < a.rows; ++i) matmul_nt_row(a, b, out, i);
  return out;
}

Matrix softmax_rows(const Matrix& m) {
  require_finite(m, "softmax_rows");
  Matrix out(m.rows, m.cols);
  if (use_parallel(m.size())) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(m.rows); ++i) {
      softmax_row(m, out, static_cast<std::size_t>(i));
    }
    return out;
  }
  for (std::size_t i = 0; i < m.rows; ++i) softmax_row(m, out, i);
  return out;
}

Matrix layer_norm(const Matrix& m, const Matrix& gain, const Matrix& bias, double eps) {
  return layer_norm_cached(m, gain, bias, eps, nullptr);
}

Matrix layer_norm_cached(const Matrix& m, const Matrix& gain, const Matrix& bias,
                         double eps, LayerNormCache* cache) {
  check_row_params(m, gain, bias);
  Matrix out(m.rows, m.cols);
  if (cache != nullptr) {
    cache->normalized = Matrix(m.rows, m.cols);
    cache->inv_std.assign(m.rows, 0.0);
  }
  if (use_parallel(m.size())) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(m.rows); ++i) {
      layer_norm_row(m, gain, bias, eps, out, cache, static_cast<std::size_t>(i));
    }
    return out;
  }
  for (std::size_t i = 0; i < m.rows; ++i) {
    layer_norm_row(m, gain, bias, eps, out, cache, i);
  }
  return out;
}

LayerNormGrads layer_norm_backward(const Matrix& grad_out, const LayerNormCache& cache,
                                   const Matrix& gain) {
  require_same_shape(grad_out, cache.normalized, "layer_norm_backward");
  LayerNormGrads g;
  g.d_input = Matrix(grad_out.rows, grad_out.cols);
  g.d_gain = Matrix(1, grad_out.cols, 0.0);
  g.d_bias = Matrix(1, grad_out.cols, 0.0);
  if (use_parallel(grad_out.size())) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(grad_out.rows); ++i) {
      layer_norm_backward_row(grad_out, cache, gain, g.d_input,
                              static_cast<std::size_t>(i));
    }
  } else {
    for (std::size_t i = 0; i < grad_out.rows; ++i) {
      layer_norm_backward_row(grad_out, cache, gain, g.d_input, i);
    }
  }
  // Gain/bias reductions stay serial: fixed row order keeps them bitwise
  // stable across modes.
  for (std::size_t i = 0; i < grad_out.rows; ++i) {
    for (std::size_t j = 0; j < grad_out.cols; ++j) {
      g.d_gain.data[j] += grad_out(i, j) * cache.normalized(i, j);
      g.d_bias.data[j] += grad_out(i, j);
    }
  }
  return g;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] + b.data[i];
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "sub");
  Matrix out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] - b.data[i];
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] * b.data[i];
  return out;
}

Matrix scale(const Matrix& a, double s) {
  Matrix out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] * s;
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
  }
  return out;
}

Matrix add_row_broadcast(const Matrix& m, const Matrix& row) {
  if (row.rows != 1 || row.cols != m.cols) {
    throw ShapeError("add_row_broadcast: row must be 1x" + std::to_string(m.cols) +
                     ", got " + row.shape_str());
  }
  Matrix out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) out(i, j) = m(i, j) + row.data[j];
  }
  return out;
}

Matrix col_sums(const Matrix& m) {
  Matrix out(1, m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) out.data[j] += m(i, j);
  }
  return out;
}

Matrix relu(const Matrix& m) {
  Matrix out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.size(); ++i) out.data[i] = m.data[i] > 0.0 ? m.data[i] : 0.0;
  return out;
}

Matrix relu_backward(const Matrix& pre_activation, const Matrix& grad) {
  require_same_shape(pre_activation, grad, "relu_backward");
  Matrix out(grad.rows, grad.cols);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    out.data[i] = pre_activation.data[i] > 0.0 ? grad.data[i] : 0.0;
  }
  return out;
}

Matrix sigmoid(const Matrix& m) {
  Matrix out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.size(); ++i) {
    out.data[i] = 1.0 / (1.0 + std::exp(-m.data[i]));
  }
  return out;
}

double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data) s += v * v;
  return std::sqrt(s);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double mx = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mx = std::max(mx, std::abs(a.data[i] - b.data[i]));
  }
  return mx;
}

}  // namespace fedad::kernels
