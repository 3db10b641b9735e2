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

#include "fedad/wire.hpp"

#include <bit>
#include <cstring>
#include <string>

#include "fedad/errors.hpp"

namespace fedad::wire {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<std::uint8_t>((v >> shift) & 0xFF));
  }
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int shift = 0; shift < 64; shift += 8) {
    out.push_back(static_cast<std::uint8_t>((bits >> shift) & 0xFF));
  }
}

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::size_t remaining() const { return size_ - pos_; }

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }

  std::uint16_t u16() {
    need(2);
    const std::uint16_t v = static_cast<std::uint16_t>(data_[pos_]) |
                            static_cast<std::uint16_t>(data_[pos_ + 1]) << 8;
    pos_ += 2;
    return v;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    }
    pos_ += 8;
    return std::bit_cast<double>(bits);
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > size_) {
      throw ProtocolError("wire: truncated frame, needed " + std::to_string(n) +
                          " bytes at offset " + std::to_string(pos_));
    }
  }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

void put_matrix(std::vector<std::uint8_t>& out, const Matrix& m) {
  put_u32(out, static_cast<std::uint32_t>(m.rows));
  put_u32(out, static_cast<std::uint32_t>(m.cols));
  for (double v : m.data) put_f64(out, v);
}

Matrix read_matrix(Reader& r) {
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  const std::size_t count = static_cast<std::size_t>(rows) * cols;
  if (r.remaining() != count * 8) {
    throw ProtocolError("wire: matrix payload holds " + std::to_string(r.remaining()) +
                        " bytes, header says " + std::to_string(count * 8));
  }
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < count; ++i) m.data[i] = r.f64();
  return m;
}

bool carries_matrix(Tag tag) {
  return tag == Tag::kFeatureBatch || tag == Tag::kScoreBatch || tag == Tag::kFeatureGrad;
}

}  // namespace

std::vector<std::uint8_t> encode(const Frame& frame) {
  std::vector<std::uint8_t> body;
  body.push_back(static_cast<std::uint8_t>(frame.tag));
  put_u32(body, frame.round);
  put_u16(body, frame.device_id);
  switch (frame.tag) {
    case Tag::kFeatureBatch:
    case Tag::kScoreBatch:
    case Tag::kFeatureGrad:
      put_matrix(body, frame.matrix);
      break;
    case Tag::kLossReport:
      put_f64(body, frame.loss);
      put_u32(body, frame.sample_count);
      break;
    case Tag::kGlobalLoss:
      put_f64(body, frame.loss);
      break;
    default:
      throw ProtocolError("wire: cannot encode unknown tag " +
                          std::to_string(static_cast<int>(frame.tag)));
  }

  std::vector<std::uint8_t> out;
  out.reserve(4 + body.size());
  put_u32(out, static_cast<std::uint32_t>(body.size()));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Frame decode(const std::uint8_t* data, std::size_t size) {
  Reader header(data, size);
  const std::uint32_t length = header.u32();
  if (length != size - 4) {
    throw ProtocolError("wire: frame length field says " + std::to_string(length) +
                        ", frame has " + std::to_string(size - 4) + " bytes");
  }

  Reader r(data + 4, length);
  const std::uint8_t raw_tag = r.u8();
  if (raw_tag < 1 || raw_tag > 5) {
    throw ProtocolError("wire: unknown message tag " + std::to_string(raw_tag));
  }

  Frame frame;
  frame.tag = static_cast<Tag>(raw_tag);
  frame.round = r.u32();
  frame.device_id = r.u16();
  if (carries_matrix(frame.tag)) {
    frame.matrix = read_matrix(r);
  } else if (frame.tag == Tag::kLossReport) {
    frame.loss = r.f64();
    frame.sample_count = r.u32();
  } else {
    frame.loss = r.f64();
  }
  if (r.remaining() != 0) {
    throw ProtocolError("wire: " + std::to_string(r.remaining()) +
                        " trailing bytes after payload");
  }
  return frame;
}

Frame decode(const std::vector<std::uint8_t>& bytes) {
  return decode(bytes.data(), bytes.size());
}

}  // namespace fedad::wire
