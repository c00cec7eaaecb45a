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

#include "dctrf/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "bytes.hpp"
#include "dctrf/error.hpp"

namespace dctrf {

namespace {

constexpr char kMagic[5] = "DCKP";
constexpr std::uint32_t kVersion = 1;

void WriteFloats(internal::ByteWriter& w, std::span<const float> v) {
  w.U32(static_cast<std::uint32_t>(v.size()));
  for (float f : v) w.F32(f);
}

std::vector<float> ReadFloats(internal::ByteReader& r, std::size_t expected,
                              const std::string& what) {
  const std::uint32_t n = r.U32();
  if (n != expected)
    throw Error(ErrorCode::kCorrupt, what + ": expected " +
                                         std::to_string(expected) +
                                         " values, found " + std::to_string(n));
  if (std::size_t(n) * 4 > r.remaining())
    throw Error(ErrorCode::kTruncated, what + " truncated");
  std::vector<float> v(n);
  for (auto& f : v) f = r.F32();
  return v;
}

}  // namespace

bool LooksLikeCheckpoint(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4,
                                         kMagic);
}

std::vector<std::uint8_t> SerializeCheckpoint(const Model& model) {
  const GridConfig& c = model.grid.config;
  internal::ByteWriter w;
  w.Tag(kMagic);
  w.U32(kVersion);
  for (int r : c.resolution) w.U32(static_cast<std::uint32_t>(r));
  w.U32(static_cast<std::uint32_t>(c.rank));
  w.U32(static_cast<std::uint32_t>(c.density_channels));
  w.U32(static_cast<std::uint32_t>(c.appearance_channels));
  for (int i = 0; i < 3; ++i) w.F64(c.bounds.lo[i]);
  for (int i = 0; i < 3; ++i) w.F64(c.bounds.hi[i]);
  for (const BlockDims& b : {c.plane_block, c.line_block}) {
    w.U16(static_cast<std::uint16_t>(b.k1));
    w.U16(static_cast<std::uint16_t>(b.k2));
    w.U16(static_cast<std::uint16_t>(b.k3));
  }
  w.F64(c.init_scale);
  for (const auto& comp : model.grid.components) WriteFloats(w, comp.data);

  const DecoderMLP& m = model.mlp;
  w.U8(m.view_dependent ? 1 : 0);
  w.U16(static_cast<std::uint16_t>(m.hidden));
  w.U32(static_cast<std::uint32_t>(m.feature_dim));
  WriteFloats(w, m.params);

  w.U8(model.entropy ? 1 : 0);
  if (model.entropy) {
    const EntropyModel& e = *model.entropy;
    w.U32(static_cast<std::uint32_t>(e.channels_per_component.size()));
    for (int ch : e.channels_per_component) w.U32(static_cast<std::uint32_t>(ch));
    WriteFloats(w, e.params);
  }
  return std::move(w.bytes());
}

Model ParseCheckpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 4 && !LooksLikeCheckpoint(bytes))
    throw Error(ErrorCode::kBadMagic, "not a checkpoint (bad magic)");
  internal::ByteReader r(bytes);
  r.Take(4);
  const std::uint32_t version = r.U32();
  if (version != kVersion)
    throw Error(ErrorCode::kBadVersion,
                "unsupported checkpoint version " + std::to_string(version));
  Model model;
  GridConfig& c = model.grid.config;
  for (int& v : c.resolution) v = static_cast<int>(r.U32());
  c.rank = static_cast<int>(r.U32());
  c.density_channels = static_cast<int>(r.U32());
  c.appearance_channels = static_cast<int>(r.U32());
  for (int i = 0; i < 3; ++i) c.bounds.lo[i] = r.F64();
  for (int i = 0; i < 3; ++i) c.bounds.hi[i] = r.F64();
  for (BlockDims* b : {&c.plane_block, &c.line_block}) {
    b->k1 = r.U16();
    b->k2 = r.U16();
    b->k3 = r.U16();
  }
  c.init_scale = r.F64();
  try {
    c.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorrupt,
                std::string("checkpoint grid config: ") + e.what());
  }
  for (int k = 0; k < kNumComponents; ++k) {
    Array3<float> comp;
    comp.shape = c.ComponentShape(k);
    comp.data = ReadFloats(r, comp.shape.size(), ComponentName(k));
    model.grid.components.push_back(std::move(comp));
  }

  DecoderMLP& m = model.mlp;
  m.view_dependent = r.U8() != 0;
  m.hidden = r.U16();
  m.feature_dim = static_cast<int>(r.U32());
  if (m.hidden < 1 || m.feature_dim != c.appearance_channels)
    throw Error(ErrorCode::kCorrupt, "decoder shape mismatch");
  m.params = ReadFloats(
      r, DecoderMLP::ParamCount(m.feature_dim, m.view_dependent, m.hidden),
      "decoder");

  if (r.U8() != 0) {
    const std::uint32_t n = r.U32();
    if (n != static_cast<std::uint32_t>(kNumComponents))
      throw Error(ErrorCode::kCorrupt, "entropy model component count");
    std::vector<int> channels;
    for (std::uint32_t i = 0; i < n; ++i)
      channels.push_back(static_cast<int>(r.U32()));
    for (int k = 0; k < kNumComponents; ++k)
      if (channels[k] != c.ComponentShape(k).channels)
        throw Error(ErrorCode::kCorrupt, "entropy model channel mismatch");
    EntropyModel e = EntropyModel::Create(channels);
    e.params = ReadFloats(r, e.params.size(), "entropy model");
    model.entropy = std::move(e);
  }
  if (r.remaining() != 0)
    throw Error(ErrorCode::kCorrupt, "trailing bytes in checkpoint");
  return model;
}

void SaveCheckpoint(const Model& model, const std::string& path) {
  WriteFileBytes(path, SerializeCheckpoint(model));
}

Model LoadCheckpoint(const std::string& path) {
  return ParseCheckpoint(ReadFileBytes(path));
}

std::vector<std::uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteFileBytes(const std::string& path,
                    std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

}  // namespace dctrf
