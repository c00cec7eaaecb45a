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

#include "dctrf/range_coder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dctrf/error.hpp"

namespace dctrf {

namespace {

constexpr std::uint32_t kTop = 1u << 24;
constexpr std::uint32_t kBottom = 1u << 16;

}  // namespace

void FrequencyTable::Finalize() {
  if (k_max < k_min || freq.size() != static_cast<std::size_t>(NumSymbols())) {
    throw Error(ErrorCode::kCorrupt, "frequency table support mismatch");
  }
  cum.assign(freq.size() + 1, 0);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < freq.size(); ++i) {
    if (freq[i] == 0) throw Error(ErrorCode::kCorrupt, "zero frequency");
    cum[i] = static_cast<std::uint32_t>(total);
    total += freq[i];
  }
  if (total != kFrequencyTotal) {
    throw Error(ErrorCode::kCorrupt, "frequency table total " +
                                         std::to_string(total) + " != 65536");
  }
  cum.back() = kFrequencyTotal;
}

int FrequencyTable::Lookup(std::uint32_t target) const {
  // Last index with cum[i] <= target.
  const auto it = std::upper_bound(cum.begin(), cum.end() - 1, target);
  return k_min + static_cast<int>(it - cum.begin()) - 1;
}

double FrequencyTable::Bits(int symbol) const {
  return kFrequencyBits - std::log2(static_cast<double>(freq[symbol - k_min]));
}

FrequencyTable QuantizeFrequencies(std::span<const double> pmf, int k_min) {
  const std::size_t n = pmf.size();
  if (n == 0) throw Error(ErrorCode::kConfig, "empty support");
  if (n > kFrequencyTotal) {
    throw Error(ErrorCode::kConfig,
                "support of " + std::to_string(n) +
                    " symbols exceeds the 2^16 frequency precision");
  }
  double mass = 0.0;
  for (double p : pmf) mass += std::max(p, 0.0);

  // One count per symbol is reserved so nothing becomes unencodable; the
  // rest is shared in proportion to the pmf.
  const std::uint32_t spare = kFrequencyTotal - static_cast<std::uint32_t>(n);
  FrequencyTable t;
  t.k_min = k_min;
  t.k_max = k_min + static_cast<int>(n) - 1;
  t.freq.assign(n, 1);
  std::vector<double> remainder(n, 0.0);
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double share =
        mass > 0.0 ? std::max(pmf[i], 0.0) / mass * spare : double(spare) / n;
    const double whole = std::floor(share);
    t.freq[i] += static_cast<std::uint32_t>(whole);
    assigned += static_cast<std::uint64_t>(whole);
    remainder[i] = share - whole;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainder[a] > remainder[b];
  });
  // Flooring can only under-assign, by fewer than n counts.
  std::uint64_t left = spare - assigned;
  for (std::size_t i = 0; left > 0; i = (i + 1) % n, --left) t.freq[order[i]] += 1;
  t.Finalize();
  return t;
}

// --------------------------------------------------------------- Encoder --

void RangeEncoder::Encode(std::uint32_t cum_freq, std::uint32_t freq) {
  range_ >>= kFrequencyBits;
  low_ += cum_freq * range_;
  range_ *= freq;
  while ((low_ ^ (low_ + range_)) < kTop ||
         (range_ < kBottom && ((range_ = (0u - low_) & (kBottom - 1)), true))) {
    out_.push_back(static_cast<std::uint8_t>(low_ >> 24));
    low_ <<= 8;
    range_ <<= 8;
  }
}

std::vector<std::uint8_t> RangeEncoder::Finish() {
  for (int i = 0; i < 4; ++i) {
    out_.push_back(static_cast<std::uint8_t>(low_ >> 24));
    low_ <<= 8;
  }
  return std::move(out_);
}

// --------------------------------------------------------------- Decoder --

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : in_(bytes) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | NextByte();
}

std::uint8_t RangeDecoder::NextByte() {
  if (pos_ >= in_.size()) {
    throw Error(ErrorCode::kTruncated, "range-coded stream ended early");
  }
  return in_[pos_++];
}

std::uint32_t RangeDecoder::DecodeTarget() {
  range_ >>= kFrequencyBits;
  const std::uint32_t target = (code_ - low_) / range_;
  if (target >= kFrequencyTotal) {
    throw Error(ErrorCode::kCorrupt, "range decoder lost synchronisation");
  }
  return target;
}

void RangeDecoder::Consume(std::uint32_t cum_freq, std::uint32_t freq) {
  low_ += cum_freq * range_;
  range_ *= freq;
  while ((low_ ^ (low_ + range_)) < kTop ||
         (range_ < kBottom && ((range_ = (0u - low_) & (kBottom - 1)), true))) {
    code_ = (code_ << 8) | NextByte();
    low_ <<= 8;
    range_ <<= 8;
  }
}

// ------------------------------------------------------------ Free coders --

std::vector<std::uint8_t> RangeEncode(std::span<const int> symbols,
                                      std::span<const std::uint16_t> table_ids,
                                      std::span<const FrequencyTable> tables) {
  if (symbols.size() != table_ids.size()) {
    throw Error(ErrorCode::kContract, "one table id per symbol required");
  }
  RangeEncoder enc;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (table_ids[i] >= tables.size()) {
      throw Error(ErrorCode::kContract, "table id out of range");
    }
    const FrequencyTable& t = tables[table_ids[i]];
    const int s = symbols[i];
    if (!t.Contains(s)) {
      throw Error(ErrorCode::kContract,
                  "symbol " + std::to_string(s) + " outside table support [" +
                      std::to_string(t.k_min) + ", " + std::to_string(t.k_max) +
                      "]");
    }
    enc.Encode(t.cum[s - t.k_min], t.freq[s - t.k_min]);
  }
  return enc.Finish();
}

std::vector<std::uint8_t> RangeEncode(std::span<const int> symbols,
                                      const FrequencyTable& table) {
  const std::vector<std::uint16_t> ids(symbols.size(), 0);
  return RangeEncode(symbols, ids, std::span<const FrequencyTable>(&table, 1));
}

std::vector<int> RangeDecode(std::span<const std::uint8_t> bytes,
                             std::span<const std::uint16_t> table_ids,
                             std::span<const FrequencyTable> tables) {
  RangeDecoder dec(bytes);
  std::vector<int> out(table_ids.size());
  for (std::size_t i = 0; i < table_ids.size(); ++i) {
    if (table_ids[i] >= tables.size()) {
      throw Error(ErrorCode::kContract, "table id out of range");
    }
    const FrequencyTable& t = tables[table_ids[i]];
    const int s = t.Lookup(dec.DecodeTarget());
    dec.Consume(t.cum[s - t.k_min], t.freq[s - t.k_min]);
    out[i] = s;
  }
  if (dec.BytesConsumed() != bytes.size()) {
    throw Error(ErrorCode::kCorrupt, "range-coded stream has trailing bytes");
  }
  return out;
}

std::vector<int> RangeDecode(std::span<const std::uint8_t> bytes,
                             const FrequencyTable& table, std::size_t count) {
  const std::vector<std::uint16_t> ids(count, 0);
  return RangeDecode(bytes, ids, std::span<const FrequencyTable>(&table, 1));
}

double CrossEntropyBits(std::span<const int> symbols,
                        std::span<const std::uint16_t> table_ids,
                        std::span<const FrequencyTable> tables) {
  double bits = 0.0;
  for (std::size_t i = 0; i < symbols.size(); ++i)
    bits += tables[table_ids[i]].Bits(symbols[i]);
  return bits;
}

}  // namespace dctrf
