// Copyright 2026 The dctrf Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Little-endian byte serialization shared by the checkpoint and bitstream
// formats. Internal to the library.
#ifndef DCTRF_SRC_BYTES_HPP_
#define DCTRF_SRC_BYTES_HPP_

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dctrf/error.hpp"

namespace dctrf::internal {

class ByteWriter {
 public:
  void U8(std::uint8_t v) { out_.push_back(v); }
  void U16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(std::uint8_t(v >> (8 * i)));
  }
  void U32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(std::uint8_t(v >> (8 * i)));
  }
  void U64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(std::uint8_t(v >> (8 * i)));
  }
  void I16(std::int16_t v) { U16(static_cast<std::uint16_t>(v)); }
  void F32(float v) { U32(std::bit_cast<std::uint32_t>(v)); }
  void F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }
  void Bytes(std::span<const std::uint8_t> b) {
    out_.insert(out_.end(), b.begin(), b.end());
  }
  void Tag(const char (&tag)[5]) {
    for (int i = 0; i < 4; ++i) out_.push_back(std::uint8_t(tag[i]));
  }

  std::size_t size() const { return out_.size(); }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

// Every read is bounds-checked; running off the end throws kTruncated.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t U8() { return Take(1)[0]; }
  std::uint16_t U16() {
    auto b = Take(2);
    return std::uint16_t(b[0] | (b[1] << 8));
  }
  std::uint32_t U32() {
    auto b = Take(4);
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
           (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
  }
  std::uint64_t U64() {
    const std::uint64_t lo = U32();
    return lo | (std::uint64_t(U32()) << 32);
  }
  std::int16_t I16() { return static_cast<std::int16_t>(U16()); }
  float F32() { return std::bit_cast<float>(U32()); }
  double F64() { return std::bit_cast<double>(U64()); }
  std::span<const std::uint8_t> Take(std::size_t n) {
    if (n > in_.size() - pos_)
      throw Error(ErrorCode::kTruncated,
                  "unexpected end of data at byte " + std::to_string(pos_));
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace dctrf::internal

#endif  // DCTRF_SRC_BYTES_HPP_
