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

#include "dctrf/transform.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "dctrf/error.hpp"

namespace dctrf {

namespace {

const char* kAxisNames[3] = {"channel", "dim1", "dim2"};

// Separable block transform. `inverse` selects DCT-III (basis transpose).
template <typename T>
Array3<double> BlockTransform(const Array3<T>& src, const BlockDims& block,
                              bool inverse) {
  const Shape3& s = src.shape;
  const int k[3] = {block.k1, block.k2, block.k3};
  const std::vector<double> basis[3] = {DctBasis(k[0]), DctBasis(k[1]),
                                        DctBasis(k[2])};
  Array3<double> out(s);
  std::vector<double> buf(block.Volume());
  std::vector<double> tmp(block.Volume());
  auto local = [&](int i, int j, int l) { return (i * k[1] + j) * k[2] + l; };

  for (int a0 = 0; a0 < s.dim1; a0 += k[1]) {
    for (int b0 = 0; b0 < s.dim2; b0 += k[2]) {
      for (int c0 = 0; c0 < s.channels; c0 += k[0]) {
        for (int i = 0; i < k[0]; ++i)
          for (int j = 0; j < k[1]; ++j)
            for (int l = 0; l < k[2]; ++l)
              buf[local(i, j, l)] = src.at(c0 + i, a0 + j, b0 + l);

        // One 1-D pass per axis; axes of length 1 are the identity.
        for (int axis = 0; axis < 3; ++axis) {
          const int n = k[axis];
          if (n == 1) continue;
          const double* m = basis[axis].data();
          for (int i = 0; i < k[0]; ++i) {
            for (int j = 0; j < k[1]; ++j) {
              for (int l = 0; l < k[2]; ++l) {
                const int u = axis == 0 ? i : (axis == 1 ? j : l);
                double acc = 0.0;
                for (int x = 0; x < n; ++x) {
                  const int idx = axis == 0   ? local(x, j, l)
                                  : axis == 1 ? local(i, x, l)
                                              : local(i, j, x);
                  const double w = inverse ? m[x * n + u] : m[u * n + x];
                  acc += w * buf[idx];
                }
                tmp[local(i, j, l)] = acc;
              }
            }
          }
          buf.swap(tmp);
        }

        for (int i = 0; i < k[0]; ++i)
          for (int j = 0; j < k[1]; ++j)
            for (int l = 0; l < k[2]; ++l)
              out.at(c0 + i, a0 + j, b0 + l) = buf[local(i, j, l)];
      }
    }
  }
  return out;
}

}  // namespace

std::string BlockDims::ToString() const {
  std::ostringstream os;
  os << k1 << "x" << k2 << "x" << k3;
  return os.str();
}

BlockDims ParseBlockDims(const std::string& text) {
  std::vector<int> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, 'x')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      parts.push_back(v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kConfig, "bad block dims '" + text + "'");
    }
  }
  if (parts.size() == 2) return {parts[0], parts[1], 1};
  if (parts.size() == 3) return {parts[0], parts[1], parts[2]};
  throw Error(ErrorCode::kConfig, "bad block dims '" + text + "'");
}

void CheckBlockMultiple(const Shape3& shape, const BlockDims& block,
                        const std::string& what) {
  for (int axis = 0; axis < 3; ++axis) {
    const int len = shape.Axis(axis);
    const int k = block.Axis(axis);
    if (k < 1 || len < 1 || len % k != 0) {
      std::ostringstream os;
      os << what << ": " << kAxisNames[axis] << " axis length " << len
         << " is not a positive multiple of block dimension " << k;
      throw Error(ErrorCode::kConfig, os.str());
    }
  }
}

std::vector<double> DctBasis(int n) {
  std::vector<double> m(static_cast<std::size_t>(n) * n);
  const double s0 = std::sqrt(1.0 / n);
  const double s = std::sqrt(2.0 / n);
  for (int u = 0; u < n; ++u)
    for (int x = 0; x < n; ++x)
      m[u * n + x] =
          (u == 0 ? s0 : s) * std::cos(std::numbers::pi / n * (x + 0.5) * u);
  return m;
}

CoefficientTensor DctForward(const Array3<float>& component,
                             const BlockDims& block, int source_component) {
  CheckBlockMultiple(component.shape, block, "dct_forward");
  return {BlockTransform(component, block, false), block, source_component};
}

CoefficientTensor DctForward(const Array3<double>& component,
                             const BlockDims& block, int source_component) {
  CheckBlockMultiple(component.shape, block, "dct_forward");
  return {BlockTransform(component, block, false), block, source_component};
}

Array3<double> DctInverse(const CoefficientTensor& coeffs) {
  CheckBlockMultiple(coeffs.values.shape, coeffs.block, "dct_inverse");
  return BlockTransform(coeffs.values, coeffs.block, true);
}

}  // namespace dctrf
