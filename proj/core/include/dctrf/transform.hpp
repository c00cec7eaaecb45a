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

#ifndef DCTRF_TRANSFORM_HPP_
#define DCTRF_TRANSFORM_HPP_

#include <cstddef>
#include <string>
#include <vector>

namespace dctrf {

// Logical shape of a grid component: (channels, dim1, dim2). Vector
// components use dim2 == 1. Storage is channel-fastest:
// index = (a * dim2 + b) * channels + c.
struct Shape3 {
  int channels = 1;
  int dim1 = 1;
  int dim2 = 1;

  std::size_t size() const {
    return static_cast<std::size_t>(channels) * dim1 * dim2;
  }
  std::size_t Index(int c, int a, int b) const {
    return (static_cast<std::size_t>(a) * dim2 + b) * channels + c;
  }
  int Axis(int i) const { return i == 0 ? channels : (i == 1 ? dim1 : dim2); }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

template <typename T>
struct Array3 {
  Shape3 shape;
  std::vector<T> data;

  Array3() = default;
  explicit Array3(Shape3 s, T fill = T{}) : shape(s), data(s.size(), fill) {}

  T& at(int c, int a, int b) { return data[shape.Index(c, a, b)]; }
  const T& at(int c, int a, int b) const { return data[shape.Index(c, a, b)]; }
};

// DCT block extent over (channel, dim1, dim2).
struct BlockDims {
  int k1 = 16;
  int k2 = 16;
  int k3 = 16;

  static BlockDims PlaneDefault() { return {16, 16, 16}; }
  static BlockDims LineDefault() { return {8, 8, 1}; }

  int Axis(int i) const { return i == 0 ? k1 : (i == 1 ? k2 : k3); }
  int Volume() const { return k1 * k2 * k3; }
  std::string ToString() const;
  friend bool operator==(const BlockDims&, const BlockDims&) = default;
};

// Parses "KxKxK" or "KxK" (k3 = 1).
BlockDims ParseBlockDims(const std::string& text);

// Throws Error(kConfig) naming the first axis whose length is not a
// positive multiple of the matching block dimension.
void CheckBlockMultiple(const Shape3& shape, const BlockDims& block,
                        const std::string& what);

// Frequency-domain values of one grid component.
struct CoefficientTensor {
  Array3<double> values;
  BlockDims block;
  int source_component = -1;  // index of the grid component it came from
};

// Orthonormal DCT-II applied independently to each non-overlapping block.
CoefficientTensor DctForward(const Array3<float>& component,
                             const BlockDims& block, int source_component = -1);
CoefficientTensor DctForward(const Array3<double>& component,
                             const BlockDims& block, int source_component = -1);

// Exact inverse (DCT-III) of DctForward. Because the transform is
// orthonormal this is also its adjoint, so it maps coefficient-domain
// gradients back to the parameter domain.
Array3<double> DctInverse(const CoefficientTensor& coeffs);

// Orthonormal DCT-II basis, row u holds frequency u: basis[u * n + x].
std::vector<double> DctBasis(int n);

}  // namespace dctrf

#endif  // DCTRF_TRANSFORM_HPP_
