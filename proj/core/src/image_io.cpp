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

#include "dctrf/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "dctrf/checkpoint.hpp"
#include "dctrf/error.hpp"

namespace dctrf {

namespace {

[[noreturn]] void PngError(png_structp, png_const_charp msg) {
  throw Error(ErrorCode::kIo, std::string("png: ") + msg);
}

void PngWarning(png_structp, png_const_charp) {}

void PngWriteToVector(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

struct ReadCursor {
  std::span<const std::uint8_t> in;
  std::size_t pos = 0;
};

void PngReadFromSpan(png_structp png, png_bytep data, png_size_t n) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (n > cur->in.size() - cur->pos) png_error(png, "unexpected end of data");
  std::memcpy(data, cur->in.data() + cur->pos, n);
  cur->pos += n;
}

}  // namespace

std::vector<std::uint8_t> EncodePng(const Image& image) {
  std::vector<std::uint8_t> rows(std::size_t(image.width) * image.height * 3);
  for (std::size_t i = 0; i < rows.size(); ++i)
    rows[i] = static_cast<std::uint8_t>(
        std::lround(std::clamp(image.rgb[i], 0.0, 1.0) * 255.0));

  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            PngError, PngWarning);
  if (!png) throw Error(ErrorCode::kIo, "png: cannot create writer");
  png_infop info = png_create_info_struct(png);
  try {
    png_set_write_fn(png, &out, PngWriteToVector, nullptr);
    png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y)
      png_write_row(png, rows.data() + std::size_t(y) * image.width * 3);
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

Image DecodePng(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw Error(ErrorCode::kBadMagic, "not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           PngError, PngWarning);
  if (!png) throw Error(ErrorCode::kIo, "png: cannot create reader");
  png_infop info = png_create_info_struct(png);
  ReadCursor cur{bytes, 0};
  Image img;
  try {
    png_set_read_fn(png, &cur, PngReadFromSpan);
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    img = Image(w, h);
    std::vector<std::uint8_t> row(png_get_rowbytes(png, info));
    for (int y = 0; y < h; ++y) {
      png_read_row(png, row.data(), nullptr);
      for (int x = 0; x < w * 3; ++x)
        img.rgb[std::size_t(y) * w * 3 + x] = row[x] / 255.0;
    }
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void WritePng(const Image& image, const std::string& path) {
  WriteFileBytes(path, EncodePng(image));
}

Image ReadPng(const std::string& path) { return DecodePng(ReadFileBytes(path)); }

}  // namespace dctrf
