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

#include "fedad/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "fedad/errors.hpp"

namespace fedad {

namespace {

struct Counts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

Counts validate_and_count(const std::vector<double>& scores,
                          const std::vector<int>& labels, const char* what) {
  if (scores.size() != labels.size()) {
    throw MetricError(std::string(what) + ": " + std::to_string(scores.size()) +
                      " scores vs " + std::to_string(labels.size()) + " labels");
  }
  if (scores.empty()) throw MetricError(std::string(what) + ": empty input");
  Counts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw MetricError(std::string(what) + ": label must be 0 or 1, got " +
                        std::to_string(labels[i]));
    }
    if (labels[i] == 1) {
      ++c.positives;
    } else {
      ++c.negatives;
    }
  }
  return c;
}

// Indices sorted by descending score; equal-score runs stay adjacent.
std::vector<std::size_t> descending_order(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  return order;
}

}  // namespace

double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels) {
  const Counts c = validate_and_count(scores, labels, "auc_roc");
  if (c.positives == 0 || c.negatives == 0) {
    throw MetricError("auc_roc: undefined, needs both classes (got " +
                      std::to_string(c.positives) + " positives, " +
                      std::to_string(c.negatives) + " negatives)");
  }

  const std::vector<std::size_t> order = descending_order(scores);
  double area = 0.0;
  double tp = 0.0, fp = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t group_tp = 0, group_fp = 0;
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      if (labels[order[i]] == 1) {
        ++group_tp;
      } else {
        ++group_fp;
      }
      ++i;
    }
    // Trapezoid over the whole tie group.
    area += static_cast<double>(group_fp) *
            (tp + static_cast<double>(group_tp) / 2.0);
    tp += static_cast<double>(group_tp);
    fp += static_cast<double>(group_fp);
  }
  return area / (static_cast<double>(c.positives) * static_cast<double>(c.negatives));
}

double auc_pr(const std::vector<double>& scores, const std::vector<int>& labels) {
  const Counts c = validate_and_count(scores, labels, "auc_pr");
  if (c.positives == 0) {
    throw MetricError("auc_pr: undefined, no positive labels");
  }

  const std::vector<std::size_t> order = descending_order(scores);
  double ap = 0.0;
  double tp = 0.0, fp = 0.0, prev_recall = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t group_tp = 0, group_fp = 0;
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      if (labels[order[i]] == 1) {
        ++group_tp;
      } else {
        ++group_fp;
      }
      ++i;
    }
    tp += static_cast<double>(group_tp);
    fp += static_cast<double>(group_fp);
    const double recall = tp / static_cast<double>(c.positives);
    const double precision = tp / (tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

}  // namespace fedad
