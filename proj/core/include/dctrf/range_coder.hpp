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

#ifndef DCTRF_RANGE_CODER_HPP_
#define DCTRF_RANGE_CODER_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dctrf {

inline constexpr int kFrequencyBits = 16;
inline constexpr std::uint32_t kFrequencyTotal = 1u << kFrequencyBits;

// Integer frequency table over the symbol range [k_min, k_max]. Every
// frequency is >= 1 and they sum to kFrequencyTotal.
struct FrequencyTable {
  int k_min = 0;
  int k_max = 0;
  std::vector<std::uint32_t> freq;
  std::vector<std::uint32_t> cum;  // freq.size() + 1 prefix sums

  int NumSymbols() const { return k_max - k_min + 1; }
  bool Contains(int symbol) const { return symbol >= k_min && symbol <= k_max; }
  // Rebuilds `cum` and checks the invariants; throws kCorrupt otherwise.
  void Finalize();
  // Symbol whose cumulative interval contains `target` (< kFrequencyTotal).
  int Lookup(std::uint32_t target) const;
  double Bits(int symbol) const;
};

// Largest-remainder conversion of a probability vector into a table over
// [k_min, k_min + pmf.size() - 1]. Throws kConfig when there are more
// symbols than kFrequencyTotal.
FrequencyTable QuantizeFrequencies(std::span<const double> pmf, int k_min);

// 32-bit carry-less range coder (Subbotin) with 2^16 total frequency.
class RangeEncoder {
 public:
  void Encode(std::uint32_t cum_freq, std::uint32_t freq);
  std::vector<std::uint8_t> Finish();

 private:
  std::uint32_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);

  // Cumulative-frequency target of the next symbol; must be followed by
  // Consume with that symbol's interval.
  std::uint32_t DecodeTarget();
  void Consume(std::uint32_t cum_freq, std::uint32_t freq);
  std::size_t BytesConsumed() const { return pos_; }

 private:
  std::uint8_t NextByte();

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::uint32_t low_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
};

// Codes `symbols[i]` with `tables[table_ids[i]]`. Throws kContract for a
// symbol outside its table.
std::vector<std::uint8_t> RangeEncode(std::span<const int> symbols,
                                      std::span<const std::uint16_t> table_ids,
                                      std::span<const FrequencyTable> tables);
std::vector<std::uint8_t> RangeEncode(std::span<const int> symbols,
                                      const FrequencyTable& table);

// Inverse of RangeEncode. Throws kCorrupt/kTruncated on malformed input,
// including a stream whose length disagrees with what decoding consumed.
std::vector<int> RangeDecode(std::span<const std::uint8_t> bytes,
                             std::span<const std::uint16_t> table_ids,
                             std::span<const FrequencyTable> tables);
std::vector<int> RangeDecode(std::span<const std::uint8_t> bytes,
                             const FrequencyTable& table, std::size_t count);

// Sum of -log2(f / 2^16) over the coded symbols.
double CrossEntropyBits(std::span<const int> symbols,
                        std::span<const std::uint16_t> table_ids,
                        std::span<const FrequencyTable> tables);

}  // namespace dctrf

#endif  // DCTRF_RANGE_CODER_HPP_
