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

#include <cstdint>
#include <string_view>
#include <vector>

namespace fedad {

// Deterministic xoshiro256++ generator. Every consumer of randomness in the
// library derives its own named stream from a single root seed, so runs are
// reproducible regardless of thread count or the order in which subsystems
// happen to draw.
class Rng {
 public:
  // Seeds the four-word state by iterating splitmix64 over `seed`.
  explicit Rng(std::uint64_t seed);

  // Next raw 64-bit output.
  std::uint64_t next_u64();

  // Uniform double in [0, 1) using the top 53 bits of one u64.
  double next_double();

  // Standard normal via Box-Muller. Consumes exactly two u64 per call and
  // never caches the second deviate, so the draw count is predictable.
  double next_gaussian();

  // Uniform integer in [0, bound) by rejection sampling (no modulo bias).
  std::uint64_t next_below(std::uint64_t bound);

  // Fisher-Yates shuffle.
  void shuffle(std::vector<std::size_t>& items);

  // Child generator for an independent named stream. The purpose string and
  // the two indices are hashed into the child seed, so e.g.
  // derive("dp_noise", device_id, round) yields a distinct, stable stream
  // per device per round.
  Rng derive(std::string_view purpose, std::uint64_t a = 0, std::uint64_t b = 0) const;

 private:
  std::uint64_t root_seed_;
  std::uint64_t state_[4];
};

}  // namespace fedad
