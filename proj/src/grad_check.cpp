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

#include "fedad/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fedad/errors.hpp"

namespace fedad {

GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::vector<std::pair<std::string, Matrix*>>& params,
                           const std::vector<Matrix>& analytic_grads, double tol) {
  if (params.size() != analytic_grads.size()) {
    throw ShapeError("grad_check: " + std::to_string(params.size()) + " params vs " +
                     std::to_string(analytic_grads.size()) + " gradients");
  }

  GradCheckReport report;
  report.tolerance = tol;
  report.entries.reserve(params.size());

  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& param = *params[p].second;
    const Matrix& analytic = analytic_grads[p];
    require_same_shape(param, analytic, ("grad_check: " + params[p].first).c_str());

    GradCheckEntry entry;
    entry.name = params[p].first;
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double theta = param.data[i];
      const double h = 1e-5 * std::max(1.0, std::abs(theta));
      param.data[i] = theta + h;
      const double f_plus = loss();
      param.data[i] = theta - h;
      const double f_minus = loss();
      param.data[i] = theta;
      if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
        throw NumericError("grad_check: non-finite loss while perturbing " + entry.name +
                           " element " + std::to_string(i));
      }
      const double numeric = (f_plus - f_minus) / (2.0 * h);
      const double a = analytic.data[i];
      const double rel = std::abs(a - numeric) / std::max(1.0, std::abs(a) + std::abs(numeric));
      if (rel > entry.max_rel_error) {
        entry.max_rel_error = rel;
        entry.worst_row = i / param.cols;
        entry.worst_col = i % param.cols;
        entry.analytic_at_worst = a;
        entry.numeric_at_worst = numeric;
      }
    }
    if (entry.max_rel_error > report.max_rel_error) {
      report.max_rel_error = entry.max_rel_error;
      report.worst_param = entry.name;
    }
    report.entries.push_back(std::move(entry));
  }

  report.passed = report.max_rel_error <= tol;
  return report;
}

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  for (const GradCheckEntry& e : entries) {
    os << (e.max_rel_error <= tolerance ? "  ok   " : "  FAIL ") << e.name
       << "  max_rel_error=" << e.max_rel_error << "  at (" << e.worst_row << ","
       << e.worst_col << ")  analytic=" << e.analytic_at_worst
       << "  numeric=" << e.numeric_at_worst << "\n";
  }
  os << (passed ? "PASS" : "FAIL") << "  max_rel_error=" << max_rel_error
     << "  tolerance=" << tolerance;
  if (!passed) os << "  worst=" << worst_param;
  os << "\n";
  return os.str();
}

}  // namespace fedad
