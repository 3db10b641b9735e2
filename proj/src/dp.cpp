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

#include "fedad/dp.hpp"

#include <cmath>
#include <string>

#include "fedad/errors.hpp"

namespace fedad {

void DpConfig::validate() const {
  if (epsilon <= 0.0) {
    throw ConfigError("dp: epsilon must be > 0, got " + std::to_string(epsilon));
  }
  if (delta < 0.0 || delta >= 1.0) {
    throw ConfigError("dp: delta must be in [0, 1), got " + std::to_string(delta));
  }
  if (clip_norm <= 0.0) {
    throw ConfigError("dp: clip_norm must be > 0, got " + std::to_string(clip_norm));
  }
  if (sampling_rate <= 0.0 || sampling_rate > 1.0) {
    throw ConfigError("dp: sampling_rate must be in (0, 1], got " +
                      std::to_string(sampling_rate));
  }
}

double compute_sigma(const DpConfig& cfg) {
  cfg.validate();
  if (cfg.delta == 0.0) {
    throw ConfigError("dp: sigma formula requires delta > 0");
  }
  return cfg.clip_norm * std::sqrt(2.0 * std::log(1.25 / cfg.delta)) / cfg.epsilon;
}

ClippedFeatures clip_rows(const Matrix& features, double clip_norm) {
  if (clip_norm <= 0.0) {
    throw ConfigError("dp: clip_norm must be > 0, got " + std::to_string(clip_norm));
  }
  Matrix out = features;
  for (std::size_t i = 0; i < out.rows; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < out.cols; ++j) sq += out(i, j) * out(i, j);
    const double norm = std::sqrt(sq);
    if (norm > clip_norm) {
      const double s = clip_norm / norm;
      for (std::size_t j = 0; j < out.cols; ++j) out(i, j) *= s;
    }
  }
  return ClippedFeatures(std::move(out));
}

Matrix add_gaussian_noise(const ClippedFeatures& features, const DpConfig& cfg,
                          Rng& rng) {
  return detail::add_noise_with_sigma(features.values(), compute_sigma(cfg), rng);
}

Matrix apply_dp(const Matrix& features, const DpConfig& cfg, Rng& rng) {
  if (!cfg.enabled) return features;
  return add_gaussian_noise(clip_rows(features, cfg.clip_norm), cfg, rng);
}

namespace detail {

Matrix add_noise_with_sigma(const Matrix& features, double sigma, Rng& rng) {
  Matrix out = features;
  if (sigma == 0.0) return out;
  for (double& v : out.data) v += sigma * rng.next_gaussian();
  return out;
}

}  // namespace detail

}  // namespace fedad
