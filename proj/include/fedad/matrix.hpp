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
#include <initializer_list>
#include <string>
#include <vector>

namespace fedad {

// Dense row-major matrix of 64-bit reals. The universal numeric carrier:
// parameters, batches, features, gradients. Value semantics throughout;
// once a Matrix is shared it is treated as immutable.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rs);
  static Matrix row_vector(std::initializer_list<double> vs);
  static Matrix identity(std::size_t n);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  bool all_finite() const;
  std::string shape_str() const;  // "(3x4)"
};

// Throws ShapeError naming both shapes unless a and b match exactly.
void require_same_shape(const Matrix& a, const Matrix& b, const char* what);

// Throws ShapeError unless a.cols == b.rows (matmul precondition).
void require_chain(const Matrix& a, const Matrix& b, const char* what);

// Throws NumericError if any entry of m is NaN or infinite.
void require_finite(const Matrix& m, const char* what);

}  // namespace fedad
