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

#ifndef DCTRF_GRID_HPP_
#define DCTRF_GRID_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dctrf/math.hpp"
#include "dctrf/transform.hpp"

namespace dctrf {

enum class FieldKind { kDensity = 0, kAppearance = 1 };

// The twelve grid components in declared order:
//   0..2   density planes   YZ, XZ, XY
//   3..5   appearance planes YZ, XZ, XY
//   6..8   density lines    X, Y, Z
//   9..11  appearance lines X, Y, Z
// Plane YZ pairs with line X, XZ with Y, XY with Z.
inline constexpr int kNumComponents = 12;

inline constexpr int PlaneIndex(FieldKind kind, int axis) {
  return static_cast<int>(kind) * 3 + axis;
}
inline constexpr int LineIndex(FieldKind kind, int axis) {
  return 6 + static_cast<int>(kind) * 3 + axis;
}
inline constexpr bool IsPlane(int component) { return component < 6; }
inline constexpr FieldKind ComponentKind(int component) {
  return static_cast<FieldKind>((component % 6) / 3);
}
inline constexpr int ComponentAxis(int component) { return component % 3; }
std::string ComponentName(int component);

struct GridConfig {
  std::array<int, 3> resolution{64, 64, 64};
  int rank = 1;
  int density_channels = 16;
  int appearance_channels = 16;
  Box bounds{{-1.5, -1.5, -1.5}, {1.5, 1.5, 1.5}};
  BlockDims plane_block = BlockDims::PlaneDefault();
  BlockDims line_block = BlockDims::LineDefault();
  double init_scale = 0.1;

  int Channels(FieldKind kind) const {
    return kind == FieldKind::kDensity ? density_channels : appearance_channels;
  }
  // Shape of component `c`; the channel axis holds rank * channels entries,
  // rank-major.
  Shape3 ComponentShape(int c) const;
  BlockDims ComponentBlock(int c) const {
    return IsPlane(c) ? plane_block : line_block;
  }
  std::size_t NumParameters() const;

  // Throws Error(kConfig) naming the offending field.
  void Validate() const;
  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

// VM-decomposed feature grid {M_density, M_appearance, v_density,
// v_appearance}.
struct FeatureGrid {
  GridConfig config;
  std::vector<Array3<float>> components;  // kNumComponents entries

  Array3<float>& component(int c) { return components[c]; }
  const Array3<float>& component(int c) const { return components[c]; }
  bool AllFinite() const;
};

// Same layout as FeatureGrid, double precision; holds gradients.
struct GridGradient {
  std::vector<Array3<double>> components;

  static GridGradient ZerosLike(const FeatureGrid& grid);
  void SetZero();
  void Add(const GridGradient& other);
};

struct FeatureVector {
  std::vector<double> density;
  std::vector<double> appearance;
};

FeatureGrid GridNew(const GridConfig& config, std::uint64_t seed);

// Dense channels x I x J x K tensor.
struct DenseField {
  int channels = 0;
  std::array<int, 3> dims{0, 0, 0};
  std::vector<double> data;

  double at(int c, int i, int j, int k) const {
    return data[((static_cast<std::size_t>(c) * dims[0] + i) * dims[1] + j) *
                    dims[2] +
                k];
  }
  double& at(int c, int i, int j, int k) {
    return data[((static_cast<std::size_t>(c) * dims[0] + i) * dims[1] + j) *
                    dims[2] +
                k];
  }
};

// Materializes sum_r v^X o M^YZ + v^Y o M^XZ + v^Z o M^XY per channel.
DenseField ReconstructDense(const FeatureGrid& grid, FieldKind kind);

// Lower node index and fractional offset per axis for a world-space point.
struct Stencil {
  std::array<int, 3> base{0, 0, 0};
  std::array<double, 3> frac{0.0, 0.0, 0.0};
};

// Throws Error(kContract) if `point` lies outside the bounding box.
Stencil Locate(const GridConfig& config, const Vec3& point);

// Interpolated features of one kind; `out` has Channels(kind) entries.
void GatherFeatures(const FeatureGrid& grid, FieldKind kind,
                    const Stencil& stencil, std::span<double> out);

// Adds d(feature)/d(param) * upstream[c] for every touched parameter.
void ScatterFeatureGrad(const FeatureGrid& grid, FieldKind kind,
                        const Stencil& stencil,
                        std::span<const double> upstream, GridGradient& grad);

// Same as above on double-precision component values (config must describe
// their shapes).
void GatherFeatures(const GridConfig& config,
                    std::span<const Array3<double>> components, FieldKind kind,
                    const Stencil& stencil, std::span<double> out);
void ScatterFeatureGrad(const GridConfig& config,
                        std::span<const Array3<double>> components,
                        FieldKind kind, const Stencil& stencil,
                        std::span<const double> upstream, GridGradient& grad);

FeatureVector SampleFeatures(const FeatureGrid& grid, const Vec3& point);

}  // namespace dctrf

#endif  // DCTRF_GRID_HPP_
