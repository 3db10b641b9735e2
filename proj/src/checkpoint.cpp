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

#include "fedad/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>

#include "fedad/errors.hpp"

namespace fedad {

namespace {

constexpr char kMagic[8] = {'F', 'A', 'D', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u16(std::ofstream& out, std::uint16_t v) {
  const char bytes[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
  out.write(bytes, 2);
}

void write_u32(std::ofstream& out, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes, 4);
}

void write_f64(std::ofstream& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

std::uint16_t read_u16(std::ifstream& in, const std::string& path) {
  unsigned char bytes[2];
  if (!in.read(reinterpret_cast<char*>(bytes), 2)) {
    throw DataError("checkpoint " + path + ": truncated");
  }
  return static_cast<std::uint16_t>(bytes[0] | (bytes[1] << 8));
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw DataError("checkpoint " + path + ": truncated");
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return v;
}

double read_f64(std::ifstream& in, const std::string& path) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
    throw DataError("checkpoint " + path + ": truncated");
  }
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Matrix*>>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("checkpoint: cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, matrix] : entries) {
    if (name.size() > 0xFFFF) {
      throw DataError("checkpoint: entry name too long: " + name);
    }
    write_u16(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<std::uint32_t>(matrix->rows));
    write_u32(out, static_cast<std::uint32_t>(matrix->cols));
    for (double v : matrix->data) write_f64(out, v);
  }
  if (!out) throw DataError("checkpoint: write failed for " + path);
}

std::vector<std::pair<std::string, Matrix>> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path);

  char magic[8];
  if (!in.read(magic, 8) || std::string(magic, 8) != std::string(kMagic, 8)) {
    throw DataError("checkpoint " + path + ": bad magic");
  }
  const std::uint32_t version = read_u32(in, path);
  if (version != kVersion) {
    throw DataError("checkpoint " + path + ": unsupported version " +
                    std::to_string(version));
  }
  const std::uint32_t count = read_u32(in, path);

  std::vector<std::pair<std::string, Matrix>> entries;
  entries.reserve(count);
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::uint16_t name_len = read_u16(in, path);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) {
      throw DataError("checkpoint " + path + ": truncated");
    }
    const std::uint32_t rows = read_u32(in, path);
    const std::uint32_t cols = read_u32(in, path);
    Matrix m(rows, cols);
    for (double& v : m.data) v = read_f64(in, path);
    entries.emplace_back(std::move(name), std::move(m));
  }
  return entries;
}

void restore_parameters(const std::vector<std::pair<std::string, Matrix>>& loaded,
                        const std::vector<std::pair<std::string, Matrix*>>& params,
                        const std::string& prefix) {
  for (const auto& [name, target] : params) {
    const std::string full = prefix + name;
    bool found = false;
    for (const auto& [entry_name, matrix] : loaded) {
      if (entry_name != full) continue;
      if (matrix.rows != target->rows || matrix.cols != target->cols) {
        throw DataError("checkpoint: " + full + " has shape " + matrix.shape_str() +
                        ", model expects " + target->shape_str());
      }
      *target = matrix;
      found = true;
      break;
    }
    if (!found) throw DataError("checkpoint: missing entry " + full);
  }
}

}  // namespace fedad
