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

#include <vector>

namespace fedad {

// Area under the ROC curve by trapezoidal integration, with tied scores
// grouped into a single threshold step. Throws MetricError unless both
// classes are present.
double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels);

// Area under the precision-recall curve as average precision (step
// interpolation). Throws MetricError when there are no positives.
double auc_pr(const std::vector<double>& scores, const std::vector<int>& labels);

}  // namespace fedad
