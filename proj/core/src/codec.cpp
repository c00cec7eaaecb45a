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

#include "dctrf/codec.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bytes.hpp"
#include "dctrf/error.hpp"

namespace dctrf {

namespace {

constexpr char kMagic[5] = "ECRF";

std::uint32_t Crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks to stay portable.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t n =
        std::min<std::size_t>(bytes.size() - pos, 1u << 30);
    crc = crc32(crc, bytes.data() + pos, static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

void WriteConfig(internal::ByteWriter& w, const GridConfig& config) {
  for (int r : config.resolution) w.U32(static_cast<std::uint32_t>(r));
  w.U32(static_cast<std::uint32_t>(config.rank));
  w.U32(static_cast<std::uint32_t>(config.density_channels));
  w.U32(static_cast<std::uint32_t>(config.appearance_channels));
  for (int i = 0; i < 3; ++i) w.F64(config.bounds.lo[i]);
  for (int i = 0; i < 3; ++i) w.F64(config.bounds.hi[i]);
}

GridConfig ReadConfig(internal::ByteReader& r) {
  GridConfig config;
  auto field = [&r](const char* name) {
    const std::uint32_t v = r.U32();
    if (v == 0 || v > (1u << 16))
      throw Error(ErrorCode::kCorrupt,
                  std::string("implausible grid field ") + name);
    return static_cast<int>(v);
  };
  config.resolution[0] = field("resolution.x");
  config.resolution[1] = field("resolution.y");
  config.resolution[2] = field("resolution.z");
  config.rank = field("rank");
  config.density_channels = field("density_channels");
  config.appearance_channels = field("appearance_channels");
  for (int i = 0; i < 3; ++i) config.bounds.lo[i] = r.F64();
  for (int i = 0; i < 3; ++i) config.bounds.hi[i] = r.F64();
  return config;
}

}  // namespace

std::size_t QuantizedCoefficients::NumSymbols() const {
  std::size_t n = 0;
  for (const auto& s : symbols) n += s.data.size();
  return n;
}

int QuantizeValue(double x, bool* saturated) {
  const double r = RoundHalfAway(x);
  const bool sat = !(std::fabs(r) <= kSymbolLimit);
  if (saturated) *saturated = sat;
  if (!sat) return static_cast<int>(r);
  if (std::isnan(r)) throw Error(ErrorCode::kNonFinite, "NaN coefficient");
  return r > 0 ? kSymbolLimit : -kSymbolLimit;
}

QuantizedCoefficients QuantizeCoeffs(
    std::span<const CoefficientTensor> coeffs) {
  QuantizedCoefficients q;
  for (const auto& t : coeffs) {
    const int channels = t.values.shape.channels;
    Array3<std::int16_t> sym(t.values.shape, 0);
    std::vector<ChannelSupport> support(
        channels, {std::numeric_limits<int>::max(),
                   std::numeric_limits<int>::min()});
    for (std::size_t i = 0; i < t.values.data.size(); ++i) {
      bool sat = false;
      const int k = QuantizeValue(t.values.data[i], &sat);
      q.saturated += sat ? 1 : 0;
      sym.data[i] = static_cast<std::int16_t>(k);
      auto& s = support[i % channels];
      s.k_min = std::min(s.k_min, k);
      s.k_max = std::max(s.k_max, k);
    }
    for (auto& s : support)
      if (s.k_min > s.k_max) s = {0, 0};
    q.symbols.push_back(std::move(sym));
    q.blocks.push_back(t.block);
    q.source_component.push_back(t.source_component);
    q.support.push_back(std::move(support));
  }
  return q;
}

std::vector<CoefficientTensor> Dequantize(const QuantizedCoefficients& q) {
  std::vector<CoefficientTensor> out;
  out.reserve(q.symbols.size());
  for (std::size_t t = 0; t < q.symbols.size(); ++t) {
    CoefficientTensor c;
    c.values = Array3<double>(q.symbols[t].shape);
    for (std::size_t i = 0; i < c.values.data.size(); ++i)
      c.values.data[i] = q.symbols[t].data[i];
    c.block = q.blocks[t];
    c.source_component = q.source_component[t];
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<CoefficientTensor> GridCoefficients(const FeatureGrid& grid) {
  std::vector<CoefficientTensor> out;
  out.reserve(kNumComponents);
  for (int c = 0; c < kNumComponents; ++c)
    out.push_back(
        DctForward(grid.component(c), grid.config.ComponentBlock(c), c));
  return out;
}

FeatureGrid GridFromQuantized(const GridConfig& config,
                              const QuantizedCoefficients& q) {
  if (q.symbols.size() != static_cast<std::size_t>(kNumComponents))
    throw Error(ErrorCode::kContract, "expected one tensor per component");
  FeatureGrid grid;
  grid.config = config;
  const auto coeffs = Dequantize(q);
  for (int c = 0; c < kNumComponents; ++c) {
    if (coeffs[c].values.shape != config.ComponentShape(c))
      throw Error(ErrorCode::kContract,
                  "coefficient shape mismatch for " + ComponentName(c));
    const Array3<double> values = DctInverse(coeffs[c]);
    Array3<float> comp(values.shape);
    for (std::size_t i = 0; i < values.data.size(); ++i)
      comp.data[i] = static_cast<float>(values.data[i]);
    grid.components.push_back(std::move(comp));
  }
  return grid;
}

FeatureGrid QuantizeGrid(const FeatureGrid& grid, std::size_t* saturated) {
  const auto q = QuantizeCoeffs(GridCoefficients(grid));
  if (saturated) *saturated = q.saturated;
  return GridFromQuantized(grid.config, q);
}

EncodeResult Encode(const FeatureGrid& grid, const DecoderMLP& mlp,
                    const EntropyModel& model) {
  grid.config.Validate();
  if (static_cast<int>(model.channels_per_component.size()) != kNumComponents)
    throw Error(ErrorCode::kContract, "entropy model does not match grid");

  const QuantizedCoefficients q = QuantizeCoeffs(GridCoefficients(grid));
  EncodeResult result;
  SizeReport& rep = result.report;
  internal::ByteWriter w;

  w.Tag(kMagic);
  w.U8(kBitstreamVersion);
  WriteConfig(w, grid.config);
  for (int c = 0; c < kNumComponents; ++c) {
    const BlockDims b = grid.config.ComponentBlock(c);
    w.U16(static_cast<std::uint16_t>(b.k1));
    w.U16(static_cast<std::uint16_t>(b.k2));
    w.U16(static_cast<std::uint16_t>(b.k3));
  }

  // Tables: one per (component, channel), frequencies stored as f - 1 so a
  // single-symbol table (f = 65536) fits in u16.
  std::vector<std::vector<FrequencyTable>> tables(kNumComponents);
  const std::size_t table_start = w.size();
  for (int c = 0; c < kNumComponents; ++c) {
    const int channels = q.symbols[c].shape.channels;
    for (int ch = 0; ch < channels; ++ch) {
      const ChannelSupport s = q.support[c][ch];
      FrequencyTable t =
          FreezeTable(model, model.Network(c, ch), s.k_min, s.k_max);
      w.I16(static_cast<std::int16_t>(t.k_min));
      w.I16(static_cast<std::int16_t>(t.k_max));
      for (std::uint32_t f : t.freq) w.U16(static_cast<std::uint16_t>(f - 1));
      tables[c].push_back(std::move(t));
    }
  }
  rep.table_bytes = w.size() - table_start;

  const std::size_t mlp_start = w.size();
  w.U8(mlp.view_dependent ? 1 : 0);
  w.U16(static_cast<std::uint16_t>(mlp.hidden));
  w.U32(static_cast<std::uint32_t>(mlp.params.size()));
  for (float p : mlp.params) w.F32(p);
  rep.mlp_bytes = w.size() - mlp_start;

  for (int c = 0; c < kNumComponents; ++c) {
    const auto& sym = q.symbols[c];
    const int channels = sym.shape.channels;
    std::vector<int> symbols(sym.data.begin(), sym.data.end());
    std::vector<std::uint16_t> ids(symbols.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
      ids[i] = static_cast<std::uint16_t>(i % channels);
    rep.cross_entropy_bits += CrossEntropyBits(symbols, ids, tables[c]);
    const auto payload = RangeEncode(symbols, ids, tables[c]);
    w.U32(static_cast<std::uint32_t>(payload.size()));
    w.Bytes(payload);
    rep.payload_bytes += payload.size();
  }

  w.U32(Crc32(w.bytes()));

  rep.total_bytes = w.size();
  rep.header_bytes = rep.total_bytes - rep.mlp_bytes - rep.payload_bytes;
  rep.num_symbols = q.NumSymbols();
  rep.saturated = q.saturated;
  rep.raw_float_grid_bytes = grid.config.NumParameters() * sizeof(float);
  rep.raw_8bit_grid_bytes = grid.config.NumParameters();
  rep.raw_mlp_bytes = mlp.params.size() * sizeof(float);
  result.bytes = std::move(w.bytes());
  return result;
}

bool LooksLikeBitstream(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4,
                                         kMagic);
}

DecodedModel Decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw Error(ErrorCode::kTruncated, "bitstream too short");
  if (!LooksLikeBitstream(bytes))
    throw Error(ErrorCode::kBadMagic, "not an ECRF bitstream (bad magic)");
  if (bytes.size() < 5) throw Error(ErrorCode::kTruncated, "bitstream too short");
  if (bytes[4] != kBitstreamVersion)
    throw Error(ErrorCode::kBadVersion,
                "unsupported bitstream version " + std::to_string(bytes[4]));
  if (bytes.size() < 9) throw Error(ErrorCode::kTruncated, "bitstream too short");

  // Structure is parsed before the checksum so a short file reports
  // truncation rather than a CRC mismatch.
  const auto body = bytes.first(bytes.size() - 4);
  internal::ByteReader r(body);
  r.Take(5);

  DecodedModel out;
  GridConfig config = ReadConfig(r);
  BlockDims blocks[kNumComponents];
  for (auto& b : blocks) {
    b.k1 = r.U16();
    b.k2 = r.U16();
    b.k3 = r.U16();
  }
  config.plane_block = blocks[0];
  config.line_block = blocks[6];
  for (int c = 0; c < kNumComponents; ++c)
    if (!(blocks[c] == config.ComponentBlock(c)))
      throw Error(ErrorCode::kCorrupt,
                  "inconsistent block dims for " + ComponentName(c));
  try {
    config.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorrupt, std::string("bad grid config: ") + e.what());
  }

  std::vector<std::vector<FrequencyTable>> tables(kNumComponents);
  for (int c = 0; c < kNumComponents; ++c) {
    const int channels = config.ComponentShape(c).channels;
    for (int ch = 0; ch < channels; ++ch) {
      FrequencyTable t;
      t.k_min = r.I16();
      t.k_max = r.I16();
      if (t.k_min > t.k_max || t.k_min < -kSymbolLimit ||
          t.k_max > kSymbolLimit)
        throw Error(ErrorCode::kCorrupt, "bad table support");
      t.freq.resize(t.NumSymbols());
      for (auto& f : t.freq) f = std::uint32_t(r.U16()) + 1;
      t.Finalize();
      tables[c].push_back(std::move(t));
    }
  }

  DecoderMLP& mlp = out.mlp;
  mlp.view_dependent = r.U8() != 0;
  mlp.hidden = r.U16();
  mlp.feature_dim = config.appearance_channels;
  const std::uint32_t count = r.U32();
  if (mlp.hidden < 1 ||
      count != DecoderMLP::ParamCount(mlp.feature_dim, mlp.view_dependent,
                                      mlp.hidden))
    throw Error(ErrorCode::kCorrupt, "decoder parameter count mismatch");
  if (std::size_t(count) * 4 > r.remaining())
    throw Error(ErrorCode::kTruncated, "decoder weights truncated");
  mlp.params.resize(count);
  for (auto& p : mlp.params) p = r.F32();

  std::vector<std::span<const std::uint8_t>> payloads;
  for (int c = 0; c < kNumComponents; ++c) {
    const std::uint32_t len = r.U32();
    payloads.push_back(r.Take(len));
  }
  if (r.remaining() != 0)
    throw Error(ErrorCode::kCorrupt, "trailing bytes before checksum");

  const std::uint32_t stored =
      internal::ByteReader(bytes.last(4)).U32();
  if (Crc32(body) != stored)
    throw Error(ErrorCode::kChecksum, "bitstream checksum mismatch");

  QuantizedCoefficients& q = out.quantized;
  for (int c = 0; c < kNumComponents; ++c) {
    const Shape3 shape = config.ComponentShape(c);
    std::vector<std::uint16_t> ids(shape.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
      ids[i] = static_cast<std::uint16_t>(i % shape.channels);
    const auto symbols = RangeDecode(payloads[c], ids, tables[c]);
    Array3<std::int16_t> sym(shape);
    std::vector<ChannelSupport> support;
    for (const auto& t : tables[c]) support.push_back({t.k_min, t.k_max});
    for (std::size_t i = 0; i < symbols.size(); ++i)
      sym.data[i] = static_cast<std::int16_t>(symbols[i]);
    q.symbols.push_back(std::move(sym));
    q.blocks.push_back(config.ComponentBlock(c));
    q.source_component.push_back(c);
    q.support.push_back(std::move(support));
  }
  out.grid = GridFromQuantized(config, q);
  return out;
}

}  // namespace dctrf
