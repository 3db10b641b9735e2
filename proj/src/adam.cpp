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

#include "fedad/adam.hpp"

#include <cmath>
#include <string>

#include "fedad/errors.hpp"

namespace fedad {

AdamState::AdamState(AdamConfig config) : config_(config) {}

void AdamState::step(const std::vector<Matrix*>& params,
                     const std::vector<const Matrix*>& grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " params vs " +
                     std::to_string(grads.size()) + " grads");
  }
  if (first_moment_.empty()) {
    first_moment_.reserve(params.size());
    second_moment_.reserve(params.size());
    for (const Matrix* p : params) {
      first_moment_.emplace_back(p->rows, p->cols, 0.0);
      second_moment_.emplace_back(p->rows, p->cols, 0.0);
    }
  } else if (first_moment_.size() != params.size()) {
    throw ShapeError("adam_step: parameter count changed from " +
                     std::to_string(first_moment_.size()) + " to " +
                     std::to_string(params.size()));
  }

  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double bc1 = 1.0 - std::pow(config_.beta1, t);
  const double bc2 = 1.0 - std::pow(config_.beta2, t);

  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& param = *params[p];
    const Matrix& grad = *grads[p];
    require_same_shape(param, grad, "adam_step");
    require_same_shape(param, first_moment_[p], "adam_step (moment)");
    Matrix& m = first_moment_[p];
    Matrix& v = second_moment_[p];
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double g = grad.data[i];
      m.data[i] = config_.beta1 * m.data[i] + (1.0 - config_.beta1) * g;
      v.data[i] = config_.beta2 * v.data[i] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m.data[i] / bc1;
      const double v_hat = v.data[i] / bc2;
      param.data[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace fedad
