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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "fedad/dp.hpp"
#include "fedad/errors.hpp"
#include "fedad/matrix.hpp"
#include "fedad/rng.hpp"

using fedad::clip_rows;
using fedad::compute_sigma;
using fedad::ConfigError;
using fedad::DpConfig;
using fedad::Matrix;
using fedad::Rng;

namespace {

DpConfig make_cfg(double epsilon, double delta, double clip) {
  DpConfig cfg;
  cfg.enabled = true;
  cfg.epsilon = epsilon;
  cfg.delta = delta;
  cfg.clip_norm = clip;
  return cfg;
}

double row_norm(const Matrix& m, std::size_t row) {
  double sq = 0.0;
  for (std::size_t j = 0; j < m.cols; ++j) sq += m(row, j) * m(row, j);
  return std::sqrt(sq);
}

}  // namespace

TEST_CASE("sigma closed form at the unit point") {
  // C = 1, epsilon = 1, delta = 1e-3: sigma = sqrt(2 ln 1250).
  const double sigma = compute_sigma(make_cfg(1.0, 1e-3, 1.0));
  CHECK(sigma == doctest::Approx(std::sqrt(2.0 * std::log(1250.0))).epsilon(1e-15));
  CHECK(sigma == doctest::Approx(3.776479532659047).epsilon(1e-12));
}

TEST_CASE("sigma scales linearly in C and inversely in epsilon") {
  const double base = compute_sigma(make_cfg(1.0, 1e-3, 1.0));
  CHECK(compute_sigma(make_cfg(1.0, 1e-3, 2.5)) == doctest::Approx(2.5 * base));
  CHECK(compute_sigma(make_cfg(4.0, 1e-3, 1.0)) == doctest::Approx(base / 4.0));
  CHECK(compute_sigma(make_cfg(8.0, 1e-3, 0.5)) == doctest::Approx(base / 16.0));
}

TEST_CASE("sigma is monotone over an epsilon/delta grid") {
  const std::vector<double> epsilons = {0.1, 0.5, 1.0, 2.0, 8.0};
  const std::vector<double> deltas = {1e-6, 1e-5, 1e-4, 1e-3, 1e-2};
  for (double delta : deltas) {
    for (std::size_t i = 1; i < epsilons.size(); ++i) {
      CHECK(compute_sigma(make_cfg(epsilons[i], delta, 1.0)) <
            compute_sigma(make_cfg(epsilons[i - 1], delta, 1.0)));
    }
  }
  for (double eps : epsilons) {
    for (std::size_t i = 1; i < deltas.size(); ++i) {
      CHECK(compute_sigma(make_cfg(eps, deltas[i], 1.0)) <
            compute_sigma(make_cfg(eps, deltas[i - 1], 1.0)));
    }
  }
}

TEST_CASE("config validation rejects bad domains") {
  CHECK_THROWS_AS(make_cfg(0.0, 1e-3, 1.0).validate(), ConfigError);
  CHECK_THROWS_AS(make_cfg(-1.0, 1e-3, 1.0).validate(), ConfigError);
  CHECK_THROWS_AS(make_cfg(1.0, -0.1, 1.0).validate(), ConfigError);
  CHECK_THROWS_AS(make_cfg(1.0, 1.5, 1.0).validate(), ConfigError);
  // delta = 0 is a valid config (pure epsilon-DP) but has no Gaussian sigma.
  CHECK_NOTHROW(make_cfg(1.0, 0.0, 1.0).validate());
  CHECK_THROWS_AS(make_cfg(1.0, 1e-3, 0.0).validate(), ConfigError);
  CHECK_THROWS_AS(compute_sigma(make_cfg(1.0, 0.0, 1.0)), ConfigError);
  CHECK_NOTHROW(make_cfg(1.0, 1e-3, 1.0).validate());
}

TEST_CASE("clipping rescales only rows above the bound") {
  const Matrix f = Matrix::from_rows({{3.0, 4.0}, {0.3, 0.4}, {0.0, 0.0}});
  const Matrix clipped = clip_rows(f, 1.0).values();
  CHECK(clipped(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(clipped(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(clipped(1, 0) == 0.3);  // norm 0.5 <= 1: untouched
  CHECK(clipped(1, 1) == 0.4);
  CHECK(clipped(2, 0) == 0.0);
  CHECK(clipped(2, 1) == 0.0);
}

TEST_CASE("all clipped rows satisfy the norm bound") {
  Rng rng(5);
  Matrix f(64, 7);
  for (double& v : f.data) v = (rng.next_double() - 0.5) * 20.0;
  for (double c : {0.1, 1.0, 3.5}) {
    const Matrix clipped = clip_rows(f, c).values();
    for (std::size_t i = 0; i < clipped.rows; ++i) {
      CHECK(row_norm(clipped, i) <= c + 1e-12);
    }
  }
}

TEST_CASE("apply_dp is the identity when disabled") {
  Rng rng(11);
  Matrix f(4, 3);
  for (double& v : f.data) v = rng.next_double() * 10.0;
  DpConfig off;
  off.enabled = false;
  Rng noise = rng.derive("dp_noise", 0, 0);
  const Matrix out = fedad::apply_dp(f, off, noise);
  CHECK(out.data == f.data);
}

TEST_CASE("zero sigma seam is the identity") {
  Rng rng(13);
  Matrix f(6, 5);
  for (double& v : f.data) v = rng.next_double();
  Rng noise(99);
  const Matrix out = fedad::detail::add_noise_with_sigma(f, 0.0, noise);
  CHECK(out.data == f.data);
}

TEST_CASE("noise is deterministic per stream and differs across streams") {
  Matrix f(8, 4, 1.0);
  const DpConfig cfg = make_cfg(1.0, 1e-3, 10.0);
  Rng a = Rng(7).derive("dp_noise", 2, 31);
  Rng b = Rng(7).derive("dp_noise", 2, 31);
  Rng c = Rng(7).derive("dp_noise", 2, 32);
  const Matrix na = fedad::apply_dp(f, cfg, a);
  const Matrix nb = fedad::apply_dp(f, cfg, b);
  const Matrix nc = fedad::apply_dp(f, cfg, c);
  CHECK(na.data == nb.data);
  CHECK(na.data != nc.data);
}

TEST_CASE("empirical noise std within 1% and entries uncorrelated") {
  const double sigma = compute_sigma(make_cfg(1.0, 1e-3, 1.0));
  constexpr std::size_t kDraws = 1u << 20;
  Matrix zeros(kDraws / 64, 64, 0.0);
  Rng rng(20260814);
  const Matrix noise = fedad::detail::add_noise_with_sigma(zeros, sigma, rng);

  double sum = 0.0, sum_sq = 0.0, lag_dot = 0.0;
  const std::size_t n = noise.size();
  for (std::size_t i = 0; i < n; ++i) {
    sum += noise.data[i];
    sum_sq += noise.data[i] * noise.data[i];
    if (i + 1 < n) lag_dot += noise.data[i] * noise.data[i + 1];
  }
  const double mean = sum / static_cast<double>(n);
  const double var = sum_sq / static_cast<double>(n) - mean * mean;
  const double std_dev = std::sqrt(var);
  CHECK(std_dev == doctest::Approx(sigma).epsilon(0.01));
  CHECK(std::abs(mean) < 0.01 * sigma);

  const double lag_corr = (lag_dot / static_cast<double>(n - 1) - mean * mean) / var;
  CHECK(std::abs(lag_corr) < 0.01);
}
