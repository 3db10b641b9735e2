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

#include "fedad/matrix.hpp"

namespace fedad::kernels {

// Execution mode for the hot kernels. Serial is the reference path; the
// parallel path splits work across OpenMP threads by output row while every
// output element keeps the serial summation order, so both modes produce
// bitwise-identical results. Selecting a mode is therefore a speed knob, not
// a numerics knob.
enum class ExecMode { kSerial, kParallel };

void set_exec_mode(ExecMode mode);
ExecMode exec_mode();

// Convenience used by the CLI: n <= 1 selects serial mode, n > 1 selects
// parallel mode with n OpenMP threads. Returns the effective thread count
// (always 1 when built without OpenMP).
int set_threads(int n);

// Row-wise layer norm cache: normalized values and per-row 1/sqrt(var+eps),
// reused by the backward pass.
struct LayerNormCache {
  Matrix normalized;            // (x - mean) * inv_std, per row
  std::vector<double> inv_std;  // one per row
};

struct LayerNormGrads {
  Matrix d_input;
  Matrix d_gain;  // 1 x cols
  Matrix d_bias;  // 1 x cols
};

// Serial reference implementations, kept for testing and benchmarking
// against the dispatching entry points below.
namespace serial {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T
Matrix softmax_rows(const Matrix& m);
Matrix layer_norm_cached(const Matrix& m, const Matrix& gain, const Matrix& bias,
                         double eps, LayerNormCache* cache);
LayerNormGrads layer_norm_backward(const Matrix& grad_out, const LayerNormCache& cache,
                                   const Matrix& gain);
}  // namespace serial

// Dispatching entry points. Parallel mode uses OpenMP over output rows for
// matrices above a small size threshold; below it the serial path runs
// regardless (identical bits either way).
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// Row-stable softmax: per row, subtracts the row max before exponentiation.
// Every output row is non-negative and sums to 1.
Matrix softmax_rows(const Matrix& m);

// Row-wise layer normalization with biased variance:
//   y = gain * (x - mean) / sqrt(var + eps) + bias
// gain and bias are 1 x cols and broadcast over rows.
Matrix layer_norm(const Matrix& m, const Matrix& gain, const Matrix& bias, double eps);
Matrix layer_norm_cached(const Matrix& m, const Matrix& gain, const Matrix& bias,
                         double eps, LayerNormCache* cache);
LayerNormGrads layer_norm_backward(const Matrix& grad_out, const LayerNormCache& cache,
                                   const Matrix& gain);

// Elementwise and broadcast helpers (serial; negligible cost at the sizes
// this library targets).
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix transpose(const Matrix& a);
Matrix add_row_broadcast(const Matrix& m, const Matrix& row);  // row is 1 x cols
Matrix col_sums(const Matrix& m);                              // 1 x cols
Matrix relu(const Matrix& m);
Matrix relu_backward(const Matrix& pre_activation, const Matrix& grad);
Matrix sigmoid(const Matrix& m);

double frobenius_norm(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace fedad::kernels
