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

#include <string>
#include <utility>
#include <vector>

#include "fedad/matrix.hpp"

namespace fedad {

// Checkpoint file layout (little-endian):
//   8-byte magic "FADCKPT1" | u32 version (currently 1) | u32 entry count
//   per entry: u16 name length | name bytes | u32 rows | u32 cols
//              | rows*cols f64 values, row-major
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Matrix*>>& entries);

std::vector<std::pair<std::string, Matrix>> load_checkpoint(const std::string& path);

// Copies loaded entries into `params` by exact name match, verifying shapes.
// Throws DataError when a parameter is missing or mismatched.
void restore_parameters(const std::vector<std::pair<std::string, Matrix>>& loaded,
                        const std::vector<std::pair<std::string, Matrix*>>& params,
                        const std::string& prefix);

}  // namespace fedad
