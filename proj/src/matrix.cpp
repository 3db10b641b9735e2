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

#include "fedad/matrix.hpp"

#include <cmath>

#include "fedad/errors.hpp"

namespace fedad {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rs) {
  Matrix m;
  m.rows = rs.size();
  m.cols = rs.size() ? rs.begin()->size() : 0;
  m.data.reserve(m.rows * m.cols);
  for (const auto& r : rs) {
    if (r.size() != m.cols) {
      throw ShapeError("from_rows: ragged initializer");
    }
    m.data.insert(m.data.end(), r.begin(), r.end());
  }
  return m;
}

Matrix Matrix::row_vector(std::initializer_list<double> vs) {
  Matrix m(1, vs.size());
  std::size_t i = 0;
  for (double v : vs) m.data[i++] = v;
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Matrix::shape_str() const {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_str() +
                     " vs " + b.shape_str());
  }
}

void require_chain(const Matrix& a, const Matrix& b, const char* what) {
  if (a.cols != b.rows) {
    throw ShapeError(std::string(what) + ": inner dimensions do not chain " +
                     a.shape_str() + " x " + b.shape_str());
  }
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.all_finite()) {
    throw NumericError(std::string(what) + ": non-finite entries in " +
                       m.shape_str() + " input");
  }
}

}  // namespace fedad
