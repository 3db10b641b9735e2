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
#include "fedad/rng.hpp"

namespace fedad {

// Gaussian-mechanism settings for feature uploads. sigma is always derived
// from these fields via compute_sigma, never stored.
struct DpConfig {
  bool enabled = false;
  double epsilon = 1.0;
  double delta = 1e-3;
  double clip_norm = 1.0;     // per-row L2 bound C; doubles as the sensitivity
  double sampling_rate = 1.0; // recorded in run metadata, no accounting applied

  // Throws ConfigError on out-of-range fields.
  void validate() const;
};

// Per-row L2 clipped feature batch. Only clip_rows creates one, which makes
// the clip -> noise order a compile-time guarantee.
class ClippedFeatures {
 public:
  const Matrix& values() const { return values_; }

 private:
  friend ClippedFeatures clip_rows(const Matrix& features, double clip_norm);
  explicit ClippedFeatures(Matrix values) : values_(std::move(values)) {}
  Matrix values_;
};

// Noise scale sigma = C * sqrt(2 ln(1.25/delta)) / epsilon.
double compute_sigma(const DpConfig& cfg);

// Scales each row r to r * min(1, C / ||r||2).
ClippedFeatures clip_rows(const Matrix& features, double clip_norm);

// Adds i.i.d. N(0, sigma^2) noise to every entry, sigma from compute_sigma.
Matrix add_gaussian_noise(const ClippedFeatures& features, const DpConfig& cfg,
                          Rng& rng);

// Full upload pipeline: identity when disabled, otherwise clip then noise.
Matrix apply_dp(const Matrix& features, const DpConfig& cfg, Rng& rng);

namespace detail {
// Noise addition with an explicit sigma; exists so tests can drive the
// sigma = 0 limit and sweep scales without constructing configs.
Matrix add_noise_with_sigma(const Matrix& features, double sigma, Rng& rng);
}  // namespace detail

}  // namespace fedad
