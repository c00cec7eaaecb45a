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

#ifndef DCTRF_IMAGE_IO_HPP_
#define DCTRF_IMAGE_IO_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dctrf/renderer.hpp"

namespace dctrf {

// 8-bit RGB PNG. Values are clamped to [0, 1] and rounded to nearest.
std::vector<std::uint8_t> EncodePng(const Image& image);
Image DecodePng(std::span<const std::uint8_t> bytes);

void WritePng(const Image& image, const std::string& path);
Image ReadPng(const std::string& path);

}  // namespace dctrf

#endif  // DCTRF_IMAGE_IO_HPP_
