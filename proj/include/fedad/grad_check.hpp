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

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fedad/matrix.hpp"

namespace fedad {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_row = 0;
  std::size_t worst_col = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

struct GradCheckReport {
  bool passed = false;
  double tolerance = 0.0;
  double max_rel_error = 0.0;
  std::string worst_param;
  std::vector<GradCheckEntry> entries;

  // One line per parameter plus a verdict, for CLI output.
  std::string summary() const;
};

// Central finite differences against analytic gradients. `loss` recomputes
// the scalar objective from the current parameter values; each coordinate of
// each parameter is perturbed by h = 1e-5 * max(1, |theta|) and restored.
// Relative error uses |a - n| / max(1, |a| + |n|) so coordinates whose true
// gradient is exactly zero compare cleanly.
GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::vector<std::pair<std::string, Matrix*>>& params,
                           const std::vector<Matrix>& analytic_grads, double tol);

}  // namespace fedad
