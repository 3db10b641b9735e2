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
#include <vector>

#include "fedad/matrix.hpp"

namespace fedad::wire {

// Length-prefixed binary frame:
//   u32 length (bytes after this field) | u8 tag | u32 round | u16 device-id
//   | payload
// Integers and doubles are little-endian. Matrix payloads carry a
// u32 rows | u32 cols header followed by row-major f64 data. LossReport
// carries f64 loss | u32 sample-count; GlobalLoss carries f64 loss and uses
// the broadcast device-id.
enum class Tag : std::uint8_t {
  kFeatureBatch = 1,  // matrix payload (b x m), device -> coordinator
  kScoreBatch = 2,    // matrix payload (b x 1), coordinator -> device
  kLossReport = 3,    // loss + sample count, device -> coordinator
  kGlobalLoss = 4,    // loss, coordinator -> every device
  kFeatureGrad = 5,   // matrix payload (b x m), coordinator -> device
};

inline constexpr std::uint16_t kBroadcastId = 0xFFFF;

struct Frame {
  Tag tag = Tag::kFeatureBatch;
  std::uint32_t round = 0;
  std::uint16_t device_id = 0;
  Matrix matrix;                   // kFeatureBatch, kScoreBatch, kFeatureGrad
  double loss = 0.0;               // kLossReport, kGlobalLoss
  std::uint32_t sample_count = 0;  // kLossReport
};

std::vector<std::uint8_t> encode(const Frame& frame);

// Throws ProtocolError on truncated frames, unknown tags, or payload size
// mismatches.
Frame decode(const std::uint8_t* data, std::size_t size);
Frame decode(const std::vector<std::uint8_t>& bytes);

}  // namespace fedad::wire
