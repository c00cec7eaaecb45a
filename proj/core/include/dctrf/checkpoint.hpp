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

#ifndef DCTRF_CHECKPOINT_HPP_
#define DCTRF_CHECKPOINT_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dctrf/entropy.hpp"
#include "dctrf/grid.hpp"
#include "dctrf/renderer.hpp"

namespace dctrf {

// Everything a trained run produces. The entropy model is optional: a
// decompressed checkpoint has none.
struct Model {
  FeatureGrid grid;
  DecoderMLP mlp;
  std::optional<EntropyModel> entropy;
};

// Layout (little-endian): "DCKP", u32 version, u32 I J K rank dch ach,
// f64 box lo[3] hi[3], u16 plane block[3], u16 line block[3], f64 init
// scale; 12 components as u32 count + f32 values in declared order; MLP as
// u8 view_dependent, u16 hidden, u32 feature_dim, u32 count, f32 values;
// u8 has_entropy, then u32 components, u32 channels each, u32 count, f32
// values.
std::vector<std::uint8_t> SerializeCheckpoint(const Model& model);
Model ParseCheckpoint(std::span<const std::uint8_t> bytes);

bool LooksLikeCheckpoint(std::span<const std::uint8_t> bytes);

void SaveCheckpoint(const Model& model, const std::string& path);
Model LoadCheckpoint(const std::string& path);

std::vector<std::uint8_t> ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path,
                    std::span<const std::uint8_t> bytes);

}  // namespace dctrf

#endif  // DCTRF_CHECKPOINT_HPP_
