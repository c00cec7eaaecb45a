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

#include "dctrf/grid.hpp"

#include <cmath>
#include <sstream>

#include "dctrf/error.hpp"

namespace dctrf {

namespace {

// The two plane axes paired with line axis `a`, in increasing order.
constexpr std::array<std::array<int, 2>, 3> kPlaneAxes = {
    {{1, 2}, {0, 2}, {0, 1}}};

}  // namespace

std::string ComponentName(int component) {
  static const char* kPlanes[3] = {"yz", "xz", "xy"};
  static const char* kLines[3] = {"x", "y", "z"};
  const char* kind =
      ComponentKind(component) == FieldKind::kDensity ? "density" : "appearance";
  std::ostringstream os;
  if (IsPlane(component)) {
    os << kind << "_plane_" << kPlanes[ComponentAxis(component)];
  } else {
    os << kind << "_line_" << kLines[ComponentAxis(component)];
  }
  return os.str();
}

Shape3 GridConfig::ComponentShape(int c) const {
  const int channels = rank * Channels(ComponentKind(c));
  const int axis = ComponentAxis(c);
  if (IsPlane(c)) {
    return {channels, resolution[kPlaneAxes[axis][0]],
            resolution[kPlaneAxes[axis][1]]};
  }
  return {channels, resolution[axis], 1};
}

std::size_t GridConfig::NumParameters() const {
  std::size_t n = 0;
  for (int c = 0; c < kNumComponents; ++c) n += ComponentShape(c).size();
  return n;
}

void GridConfig::Validate() const {
  static const char* kRes[3] = {"resolution.x", "resolution.y",
                                "resolution.z"};
  for (int a = 0; a < 3; ++a) {
    if (resolution[a] < 2) {
      throw Error(ErrorCode::kConfig,
                  std::string(kRes[a]) + " must be >= 2, got " +
                      std::to_string(resolution[a]));
    }
  }
  if (rank < 1) throw Error(ErrorCode::kConfig, "rank must be >= 1");
  if (density_channels < 1)
    throw Error(ErrorCode::kConfig, "density_channels must be >= 1");
  if (appearance_channels < 1)
    throw Error(ErrorCode::kConfig, "appearance_channels must be >= 1");
  for (int a = 0; a < 3; ++a) {
    if (!(bounds.hi[a] > bounds.lo[a])) {
      throw Error(ErrorCode::kConfig, "bounding_box is empty along axis " +
                                          std::to_string(a));
    }
  }
  if (!(init_scale >= 0.0))
    throw Error(ErrorCode::kConfig, "init_scale must be >= 0");
  // Channel counts are checked per kind (rank-major stacking keeps blocks
  // from straddling two rank terms).
  for (FieldKind kind : {FieldKind::kDensity, FieldKind::kAppearance}) {
    const int ch = Channels(kind);
    const char* name = kind == FieldKind::kDensity ? "density_channels"
                                                   : "appearance_channels";
    if (ch % plane_block.k1 != 0 || ch % line_block.k1 != 0) {
      throw Error(ErrorCode::kConfig,
                  std::string(name) + " = " + std::to_string(ch) +
                      " is not a multiple of the channel block dimension");
    }
  }
  // Every component must tile exactly into DCT blocks. Spatial failures are
  // reported against the world axis they come from.
  for (int c = 0; c < kNumComponents; ++c) {
    const BlockDims block = ComponentBlock(c);
    const int axis = ComponentAxis(c);
    const int world[2] = {IsPlane(c) ? kPlaneAxes[axis][0] : axis,
                          IsPlane(c) ? kPlaneAxes[axis][1] : -1};
    const int k[2] = {block.k2, block.k3};
    for (int s = 0; s < 2; ++s) {
      const int len = world[s] < 0 ? 1 : resolution[world[s]];
      if (len % k[s] != 0) {
        throw Error(ErrorCode::kConfig,
                    std::string(world[s] < 0 ? "line width" : kRes[world[s]]) +
                        " = " + std::to_string(len) +
                        " is not a multiple of block dimension " +
                        std::to_string(k[s]) + " (" + ComponentName(c) + ")");
      }
    }
    CheckBlockMultiple(ComponentShape(c), block, ComponentName(c));
  }
}

bool FeatureGrid::AllFinite() const {
  for (const auto& comp : components)
    for (float v : comp.data)
      if (!std::isfinite(v)) return false;
  return true;
}

GridGradient GridGradient::ZerosLike(const FeatureGrid& grid) {
  GridGradient g;
  g.components.reserve(grid.components.size());
  for (const auto& comp : grid.components)
    g.components.emplace_back(comp.shape, 0.0);
  return g;
}

void GridGradient::SetZero() {
  for (auto& comp : components) std::fill(comp.data.begin(), comp.data.end(), 0.0);
}

void GridGradient::Add(const GridGradient& other) {
  for (std::size_t c = 0; c < components.size(); ++c) {
    auto& dst = components[c].data;
    const auto& src = other.components[c].data;
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
}

FeatureGrid GridNew(const GridConfig& config, std::uint64_t seed) {
  config.Validate();
  FeatureGrid grid;
  grid.config = config;
  Rng rng(seed);
  for (int c = 0; c < kNumComponents; ++c) {
    Array3<float> comp(config.ComponentShape(c), 0.0f);
    for (float& v : comp.data)
      v = static_cast<float>(rng.Uniform(-config.init_scale, config.init_scale));
    grid.components.push_back(std::move(comp));
  }
  return grid;
}

DenseField ReconstructDense(const FeatureGrid& grid, FieldKind kind) {
  const GridConfig& cfg = grid.config;
  const int channels = cfg.Channels(kind);
  DenseField out;
  out.channels = channels;
  out.dims = cfg.resolution;
  out.data.assign(static_cast<std::size_t>(channels) * cfg.resolution[0] *
                      cfg.resolution[1] * cfg.resolution[2],
                  0.0);
  for (int a = 0; a < 3; ++a) {
    const auto& plane = grid.component(PlaneIndex(kind, a));
    const auto& line = grid.component(LineIndex(kind, a));
    for (int r = 0; r < cfg.rank; ++r) {
      for (int ch = 0; ch < channels; ++ch) {
        const int rc = r * channels + ch;
        for (int i = 0; i < cfg.resolution[0]; ++i) {
          for (int j = 0; j < cfg.resolution[1]; ++j) {
            for (int k = 0; k < cfg.resolution[2]; ++k) {
              const int idx[3] = {i, j, k};
              out.at(ch, i, j, k) +=
                  static_cast<double>(line.at(rc, idx[a], 0)) *
                  plane.at(rc, idx[kPlaneAxes[a][0]], idx[kPlaneAxes[a][1]]);
            }
          }
        }
      }
    }
  }
  return out;
}

Stencil Locate(const GridConfig& config, const Vec3& point) {
  if (!config.bounds.Contains(point)) {
    std::ostringstream os;
    os << "sample point (" << point.x << ", " << point.y << ", " << point.z
       << ") lies outside the grid bounding box";
    throw Error(ErrorCode::kContract, os.str());
  }
  Stencil s;
  for (int a = 0; a < 3; ++a) {
    const int n = config.resolution[a];
    const double u = (point[a] - config.bounds.lo[a]) /
                     (config.bounds.hi[a] - config.bounds.lo[a]) * (n - 1);
    int base = static_cast<int>(std::floor(u));
    if (base > n - 2) base = n - 2;
    if (base < 0) base = 0;
    s.base[a] = base;
    s.frac[a] = u - base;
  }
  return s;
}

namespace {

template <typename T>
void GatherImpl(const GridConfig& config, const Array3<T>* comps,
                FieldKind kind, const Stencil& st, std::span<double> out) {
  const int channels = config.Channels(kind);
  const int rank = config.rank;
  std::fill(out.begin(), out.end(), 0.0);
  for (int a = 0; a < 3; ++a) {
    const auto& plane = comps[PlaneIndex(kind, a)];
    const auto& line = comps[LineIndex(kind, a)];
    const int pb = kPlaneAxes[a][0];
    const int pc = kPlaneAxes[a][1];
    const int ib = st.base[pb], ic = st.base[pc], ia = st.base[a];
    const double fb = st.frac[pb], fc = st.frac[pc], fa = st.frac[a];
    const double w00 = (1 - fb) * (1 - fc), w10 = fb * (1 - fc);
    const double w01 = (1 - fb) * fc, w11 = fb * fc;
    const int total = rank * channels;
    const T* p00 = &plane.at(0, ib, ic);
    const T* p10 = &plane.at(0, ib + 1, ic);
    const T* p01 = &plane.at(0, ib, ic + 1);
    const T* p11 = &plane.at(0, ib + 1, ic + 1);
    const T* l0 = &line.at(0, ia, 0);
    const T* l1 = &line.at(0, ia + 1, 0);
    for (int rc = 0; rc < total; ++rc) {
      const double pv = w00 * p00[rc] + w10 * p10[rc] + w01 * p01[rc] +
                        w11 * p11[rc];
      const double lv = (1 - fa) * l0[rc] + fa * l1[rc];
      out[rc % channels] += pv * lv;
    }
  }
}

template <typename T>
void ScatterImpl(const GridConfig& config, const Array3<T>* comps,
                 FieldKind kind, const Stencil& st,
                 std::span<const double> upstream, GridGradient& grad) {
  const int channels = config.Channels(kind);
  const int rank = config.rank;
  for (int a = 0; a < 3; ++a) {
    const int pi = PlaneIndex(kind, a);
    const int li = LineIndex(kind, a);
    const auto& plane = comps[pi];
    const auto& line = comps[li];
    auto& gplane = grad.components[pi];
    auto& gline = grad.components[li];
    const int pb = kPlaneAxes[a][0];
    const int pc = kPlaneAxes[a][1];
    const int ib = st.base[pb], ic = st.base[pc], ia = st.base[a];
    const double fb = st.frac[pb], fc = st.frac[pc], fa = st.frac[a];
    const double w00 = (1 - fb) * (1 - fc), w10 = fb * (1 - fc);
    const double w01 = (1 - fb) * fc, w11 = fb * fc;
    const int total = rank * channels;
    const T* p00 = &plane.at(0, ib, ic);
    const T* p10 = &plane.at(0, ib + 1, ic);
    const T* p01 = &plane.at(0, ib, ic + 1);
    const T* p11 = &plane.at(0, ib + 1, ic + 1);
    const T* l0 = &line.at(0, ia, 0);
    const T* l1 = &line.at(0, ia + 1, 0);
    double* g00 = &gplane.at(0, ib, ic);
    double* g10 = &gplane.at(0, ib + 1, ic);
    double* g01 = &gplane.at(0, ib, ic + 1);
    double* g11 = &gplane.at(0, ib + 1, ic + 1);
    double* gl0 = &gline.at(0, ia, 0);
    double* gl1 = &gline.at(0, ia + 1, 0);
    for (int rc = 0; rc < total; ++rc) {
      const double g = upstream[rc % channels];
      const double pv = w00 * p00[rc] + w10 * p10[rc] + w01 * p01[rc] +
                        w11 * p11[rc];
      const double lv = (1 - fa) * l0[rc] + fa * l1[rc];
      const double gp = g * lv;
      const double gl = g * pv;
      g00[rc] += w00 * gp;
      g10[rc] += w10 * gp;
      g01[rc] += w01 * gp;
      g11[rc] += w11 * gp;
      gl0[rc] += (1 - fa) * gl;
      gl1[rc] += fa * gl;
    }
  }
}

}  // namespace

void GatherFeatures(const FeatureGrid& grid, FieldKind kind,
                    const Stencil& stencil, std::span<double> out) {
  GatherImpl(grid.config, grid.components.data(), kind, stencil, out);
}

void GatherFeatures(const GridConfig& config,
                    std::span<const Array3<double>> components, FieldKind kind,
                    const Stencil& stencil, std::span<double> out) {
  GatherImpl(config, components.data(), kind, stencil, out);
}

void ScatterFeatureGrad(const FeatureGrid& grid, FieldKind kind,
                        const Stencil& stencil,
                        std::span<const double> upstream, GridGradient& grad) {
  ScatterImpl(grid.config, grid.components.data(), kind, stencil, upstream,
              grad);
}

void ScatterFeatureGrad(const GridConfig& config,
                        std::span<const Array3<double>> components,
                        FieldKind kind, const Stencil& stencil,
                        std::span<const double> upstream, GridGradient& grad) {
  ScatterImpl(config, components.data(), kind, stencil, upstream, grad);
}

FeatureVector SampleFeatures(const FeatureGrid& grid, const Vec3& point) {
  const Stencil st = Locate(grid.config, point);
  FeatureVector f;
  f.density.resize(grid.config.density_channels);
  f.appearance.resize(grid.config.appearance_channels);
  GatherFeatures(grid, FieldKind::kDensity, st, f.density);
  GatherFeatures(grid, FieldKind::kAppearance, st, f.appearance);
  return f;
}

}  // namespace dctrf
