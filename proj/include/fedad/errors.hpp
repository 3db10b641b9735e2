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

#include <stdexcept>
#include <string>

namespace fedad {

// Error taxonomy shared across the library. The CLI maps these onto process
// exit codes (config 2, data 3, numeric 4, metric 5).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Matrix/vector dimension mismatch; message names both shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid experiment configuration or parameter domain violation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Dataset ingestion failure (malformed CSV, schema mismatch).
class DataError : public Error {
 public:
  using Error::Error;
};

// Protocol violation (bad frame, round regression, empty aggregation).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Backward pass invoked with a missing or mismatched forward tape.
class TapeError : public Error {
 public:
  using Error::Error;
};

// Metric undefined for the given inputs (e.g. single-class labels).
class MetricError : public Error {
 public:
  using Error::Error;
};

// Non-finite values where finite ones are required (diverged loss, bad f).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace fedad
