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

#ifndef DCTRF_CODEC_HPP_
#define DCTRF_CODEC_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dctrf/entropy.hpp"
#include "dctrf/grid.hpp"
#include "dctrf/range_coder.hpp"
#include "dctrf/renderer.hpp"
#include "dctrf/transform.hpp"

namespace dctrf {

inline constexpr int kSymbolLimit = 127;
inline constexpr std::uint8_t kBitstreamVersion = 1;

struct ChannelSupport {
  int k_min = 0;
  int k_max = 0;
};

// Integer DCT coefficients, one tensor per grid component.
struct QuantizedCoefficients {
  std::vector<Array3<std::int16_t>> symbols;
  std::vector<BlockDims> blocks;
  std::vector<int> source_component;
  // support[t][c]: observed symbol range of channel c of tensor t.
  std::vector<std::vector<ChannelSupport>> support;
  std::size_t saturated = 0;

  std::size_t NumSymbols() const;
};

// Round half away from zero (step 1), then clamp to [-127, 127].
int QuantizeValue(double x, bool* saturated = nullptr);

QuantizedCoefficients QuantizeCoeffs(std::span<const CoefficientTensor> coeffs);
std::vector<CoefficientTensor> Dequantize(const QuantizedCoefficients& q);

// Per-component block DCT of the whole grid.
std::vector<CoefficientTensor> GridCoefficients(const FeatureGrid& grid);
// Inverse of GridCoefficients for a set of integer coefficients.
FeatureGrid GridFromQuantized(const GridConfig& config,
                              const QuantizedCoefficients& q);
// The grid the decoder reconstructs: DCT, quantize, dequantize, inverse DCT.
FeatureGrid QuantizeGrid(const FeatureGrid& grid,
                         std::size_t* saturated = nullptr);

// Byte accounting. header + mlp + payload == total; table_bytes is part of
// the header and is broken out for reporting.
struct SizeReport {
  std::size_t header_bytes = 0;
  std::size_t table_bytes = 0;
  std::size_t mlp_bytes = 0;
  std::size_t payload_bytes = 0;
  std::size_t total_bytes = 0;

  // Reference sizes for the same model stored without entropy coding.
  std::size_t raw_float_grid_bytes = 0;
  std::size_t raw_8bit_grid_bytes = 0;
  std::size_t raw_mlp_bytes = 0;

  std::size_t num_symbols = 0;
  std::size_t saturated = 0;
  double cross_entropy_bits = 0.0;  // payload lower bound under the tables
};

struct EncodeResult {
  std::vector<std::uint8_t> bytes;
  SizeReport report;
};

// Quantizes the grid, freezes one table per (component, channel) from the
// entropy model over the observed support, and writes the container.
EncodeResult Encode(const FeatureGrid& grid, const DecoderMLP& mlp,
                    const EntropyModel& model);

struct DecodedModel {
  FeatureGrid grid;
  DecoderMLP mlp;
  QuantizedCoefficients quantized;
};

// Throws kBadMagic, kBadVersion, kChecksum, kTruncated or kCorrupt.
DecodedModel Decode(std::span<const std::uint8_t> bytes);

// Quick check used by tools to tell a bitstream from other files.
bool LooksLikeBitstream(std::span<const std::uint8_t> bytes);

}  // namespace dctrf

#endif  // DCTRF_CODEC_HPP_
