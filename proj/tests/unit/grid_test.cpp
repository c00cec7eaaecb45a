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


#include <cmath>

#include <gtest/gtest.h>

#include "dctrf/error.hpp"
#include "dctrf/grid.hpp"

namespace dctrf {
namespace {

GridConfig SmallConfig(int rank = 1, double scale = 0.1) {
  GridConfig c;
  c.resolution = {4, 4, 4};
  c.rank = rank;
  c.density_channels = 4;
  c.appearance_channels = 4;
  c.bounds = {{-1, -1, -1}, {1, 1, 1}};
  c.plane_block = {4, 4, 4};
  c.line_block = {4, 4, 1};
  c.init_scale = scale;
  return c;
}

// World position of node (i, j, k).
Vec3 NodePoint(const GridConfig& c, int i, int j, int k) {
  const int idx[3] = {i, j, k};
  Vec3 p;
  for (int a = 0; a < 3; ++a) {
    p[a] = c.bounds.lo[a] + (c.bounds.hi[a] - c.bounds.lo[a]) * idx[a] /
                                (c.resolution[a] - 1);
  }
  return p;
}

// Independent evaluation of the VM sum at a node.
double VmNode(const FeatureGrid& g, FieldKind kind, int ch, int i, int j,
              int k) {
  const int channels = g.config.Channels(kind);
  double s = 0.0;
  for (int r = 0; r < g.config.rank; ++r) {
    const int rc = r * channels + ch;
    s += g.component(LineIndex(kind, 0)).at(rc, i, 0) *
         double(g.component(PlaneIndex(kind, 0)).at(rc, j, k));
    s += g.component(LineIndex(kind, 1)).at(rc, j, 0) *
         double(g.component(PlaneIndex(kind, 1)).at(rc, i, k));
    s += g.component(LineIndex(kind, 2)).at(rc, k, 0) *
         double(g.component(PlaneIndex(kind, 2)).at(rc, i, j));
  }
  return s;
}

// Trilinear interpolation of node values, written out over the 8 corners.
double TrilinearOracle(const FeatureGrid& g, FieldKind kind, int ch,
                       const Vec3& p) {
  const GridConfig& c = g.config;
  int base[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    const double u = (p[a] - c.bounds.lo[a]) /
                     (c.bounds.hi[a] - c.bounds.lo[a]) * (c.resolution[a] - 1);
    base[a] = std::min(static_cast<int>(std::floor(u)), c.resolution[a] - 2);
    f[a] = u - base[a];
  }
  double s = 0.0;
  for (int di = 0; di < 2; ++di)
    for (int dj = 0; dj < 2; ++dj)
      for (int dk = 0; dk < 2; ++dk) {
        const double w = (di ? f[0] : 1 - f[0]) * (dj ? f[1] : 1 - f[1]) *
                         (dk ? f[2] : 1 - f[2]);
        s += w * VmNode(g, kind, ch, base[0] + di, base[1] + dj, base[2] + dk);
      }
  return s;
}

TEST(GridConfig, ComponentShapesFollowAxes) {
  GridConfig c = SmallConfig(2);
  c.resolution = {4, 8, 12};
  EXPECT_EQ(c.ComponentShape(PlaneIndex(FieldKind::kDensity, 0)),
            (Shape3{8, 8, 12}));  // YZ
  EXPECT_EQ(c.ComponentShape(PlaneIndex(FieldKind::kAppearance, 1)),
            (Shape3{8, 4, 12}));  // XZ
  EXPECT_EQ(c.ComponentShape(PlaneIndex(FieldKind::kDensity, 2)),
            (Shape3{8, 4, 8}));  // XY
  EXPECT_EQ(c.ComponentShape(LineIndex(FieldKind::kDensity, 0)),
            (Shape3{8, 4, 1}));
  EXPECT_EQ(c.ComponentShape(LineIndex(FieldKind::kAppearance, 2)),
            (Shape3{8, 12, 1}));
}

TEST(GridConfig, ValidationNamesTheDimension) {
  GridConfig c;
  c.resolution = {3, 64, 64};
  try {
    c.Validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_NE(std::string(e.what()).find("resolution.x"), std::string::npos)
        << e.what();
  }
  GridConfig tiny = SmallConfig();
  tiny.resolution = {1, 4, 4};
  EXPECT_THROW(tiny.Validate(), Error);
  GridConfig ch = SmallConfig();
  ch.density_channels = 6;
  try {
    ch.Validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("density_channels"), std::string::npos);
  }
  GridConfig ok;  // defaults are consistent
  EXPECT_NO_THROW(ok.Validate());
}

TEST(GridNew, ZeroScaleGivesZeros) {
  const auto g = GridNew(SmallConfig(1, 0.0), 7);
  ASSERT_EQ(g.components.size(), std::size_t(kNumComponents));
  for (const auto& comp : g.components)
    for (float v : comp.data) EXPECT_EQ(v, 0.0f);
}

TEST(GridNew, DeterministicAndBounded) {
  const auto a = GridNew(SmallConfig(), 42);
  const auto b = GridNew(SmallConfig(), 42);
  const auto c = GridNew(SmallConfig(), 43);
  EXPECT_EQ(a.components[5].data, b.components[5].data);
  EXPECT_NE(a.components[5].data, c.components[5].data);
  double mean = 0.0;
  std::size_t n = 0;
  for (const auto& comp : a.components)
    for (float v : comp.data) {
      EXPECT_LE(std::fabs(v), 0.1f);
      mean += v;
      ++n;
    }
  EXPECT_LT(std::fabs(mean / n), 0.02);
}

TEST(ReconstructDense, OneHotOuterProduct) {
  FeatureGrid g = GridNew(SmallConfig(1, 0.0), 0);
  g.component(LineIndex(FieldKind::kDensity, 0)).at(2, 1, 0) = 1.0f;
  g.component(PlaneIndex(FieldKind::kDensity, 0)).at(2, 3, 0) = 1.0f;
  const auto d = ReconstructDense(g, FieldKind::kDensity);
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k)
          EXPECT_EQ(d.at(c, i, j, k), (c == 2 && i == 1 && j == 3 && k == 0) ? 1.0 : 0.0);
  for (double v : ReconstructDense(g, FieldKind::kAppearance).data)
    EXPECT_EQ(v, 0.0);
}

TEST(ReconstructDense, MatchesTripleLoopAtRankTwo) {
  const auto g = GridNew(SmallConfig(2, 1.0), 9);
  for (FieldKind kind : {FieldKind::kDensity, FieldKind::kAppearance}) {
    const auto d = ReconstructDense(g, kind);
    for (int c = 0; c < 4; ++c)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          for (int k = 0; k < 4; ++k)
            EXPECT_NEAR(d.at(c, i, j, k), VmNode(g, kind, c, i, j, k), 1e-12);
  }
}

TEST(SampleFeatures, NodesMatchDense) {
  const auto g = GridNew(SmallConfig(2, 1.0), 10);
  const auto dd = ReconstructDense(g, FieldKind::kDensity);
  const auto da = ReconstructDense(g, FieldKind::kAppearance);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) {
        const auto f = SampleFeatures(g, NodePoint(g.config, i, j, k));
        for (int c = 0; c < 4; ++c) {
          EXPECT_NEAR(f.density[c], dd.at(c, i, j, k), 1e-9);
          EXPECT_NEAR(f.appearance[c], da.at(c, i, j, k), 1e-9);
        }
      }
}

TEST(SampleFeatures, MidpointAlongXIsMean) {
  const auto g = GridNew(SmallConfig(1, 1.0), 11);
  const Vec3 a = NodePoint(g.config, 1, 2, 3);
  const Vec3 b = NodePoint(g.config, 2, 2, 3);
  const auto fa = SampleFeatures(g, a);
  const auto fb = SampleFeatures(g, b);
  const auto fm = SampleFeatures(g, 0.5 * (a + b));
  for (int c = 0; c < 4; ++c)
    EXPECT_NEAR(fm.density[c], 0.5 * (fa.density[c] + fb.density[c]), 1e-9);
}

TEST(SampleFeatures, MatchesDenseTrilinearOracle) {
  const auto g = GridNew(SmallConfig(1, 1.0), 12);
  Rng rng(1);
  for (int n = 0; n < 100; ++n) {
    const Vec3 p{rng.Uniform(-1, 1), rng.Uniform(-1, 1), rng.Uniform(-1, 1)};
    const auto f = SampleFeatures(g, p);
    for (int c = 0; c < 4; ++c) {
      EXPECT_NEAR(f.density[c], TrilinearOracle(g, FieldKind::kDensity, c, p), 1e-6);
      EXPECT_NEAR(f.appearance[c],
                  TrilinearOracle(g, FieldKind::kAppearance, c, p), 1e-6);
    }
  }
}

TEST(SampleFeatures, OutsideBoxIsContractError) {
  const auto g = GridNew(SmallConfig(), 0);
  try {
    SampleFeatures(g, {1.01, 0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kContract);
  }
  EXPECT_NO_THROW(SampleFeatures(g, {1.0, -1.0, 1.0}));  // faces are inside
}

// The VM feature is a product of a plane and a line value, so sampling is
// linear in each factor group with the other held fixed (not jointly
// linear in all parameters).
TEST(SampleFeatures, LinearInPlanesAndInLinesSeparately) {
  const auto g1 = GridNew(SmallConfig(2, 1.0), 13);
  const auto g2 = GridNew(SmallConfig(2, 1.0), 14);
  const double a = 0.7, b = -1.3;
  Rng rng(2);
  for (bool vary_planes : {true, false}) {
    FeatureGrid h1 = g1, h2 = g1, mix = g1;
    for (int c = 0; c < kNumComponents; ++c) {
      if (IsPlane(c) != vary_planes) continue;
      h2.component(c) = g2.component(c);
      for (std::size_t i = 0; i < mix.component(c).data.size(); ++i) {
        mix.component(c).data[i] = static_cast<float>(
            a * g1.component(c).data[i] + b * g2.component(c).data[i]);
      }
    }
    for (int n = 0; n < 20; ++n) {
      const Vec3 p{rng.Uniform(-1, 1), rng.Uniform(-1, 1), rng.Uniform(-1, 1)};
      const auto f1 = SampleFeatures(h1, p), f2 = SampleFeatures(h2, p),
                 fm = SampleFeatures(mix, p);
      for (int c = 0; c < 4; ++c) {
        EXPECT_NEAR(fm.density[c], a * f1.density[c] + b * f2.density[c], 1e-5);
        EXPECT_NEAR(fm.appearance[c],
                    a * f1.appearance[c] + b * f2.appearance[c], 1e-5);
      }
    }
  }
}

TEST(SampleFeatures, JointScalingIsQuadratic) {
  const auto g = GridNew(SmallConfig(1, 1.0), 15);
  FeatureGrid twice = g;
  for (auto& comp : twice.components)
    for (float& v : comp.data) v *= 2.0f;
  const Vec3 p{0.1, -0.2, 0.3};
  const auto f = SampleFeatures(g, p), f2 = SampleFeatures(twice, p);
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(f2.density[c], 4.0 * f.density[c], 1e-6);
}

TEST(ScatterFeatureGrad, MatchesFiniteDifferences) {
  FeatureGrid g = GridNew(SmallConfig(2, 1.0), 16);
  const Vec3 p{0.23, -0.41, 0.67};
  const Stencil st = Locate(g.config, p);
  Rng rng(3);
  for (FieldKind kind : {FieldKind::kDensity, FieldKind::kAppearance}) {
    for (int ch = 0; ch < 4; ++ch) {
      std::vector<double> up(4, 0.0);
      up[ch] = 1.0;
      GridGradient grad = GridGradient::ZerosLike(g);
      ScatterFeatureGrad(g, kind, st, up, grad);
      int touched = 0;
      for (int c = 0; c < kNumComponents; ++c) {
        for (std::size_t i = 0; i < g.component(c).data.size(); ++i) {
          const double an = grad.components[c].data[i];
          if (an == 0.0) continue;
          ++touched;
          std::vector<double> out(4);
          float& v = g.component(c).data[i];
          const float orig = v;
          v = orig + 1e-3f;
          GatherFeatures(g, kind, st, out);
          const double hi = out[ch], h = double(v) - orig;
          v = orig - 1e-3f;
          GatherFeatures(g, kind, st, out);
          const double lo = out[ch], l = orig - double(v);
          v = orig;
          const double fd = (hi - lo) / (h + l);
          EXPECT_LT(std::fabs(fd - an) / std::max({std::fabs(fd), std::fabs(an), 1e-8}),
                    1e-3)
              << ComponentName(c) << " " << i;
        }
      }
      // 3 axis terms x rank 2 x (4 plane + 2 line) corners.
      EXPECT_EQ(touched, 3 * 2 * 6);
    }
  }
}

TEST(GatherFeatures, DoubleComponentsMatchFloat) {
  const auto g = GridNew(SmallConfig(1, 1.0), 17);
  std::vector<Array3<double>> comps;
  for (const auto& c : g.components) {
    Array3<double> d(c.shape);
    for (std::size_t i = 0; i < c.data.size(); ++i) d.data[i] = c.data[i];
    comps.push_back(std::move(d));
  }
  const Stencil st = Locate(g.config, {0.3, 0.1, -0.8});
  std::vector<double> a(4), b(4);
  GatherFeatures(g, FieldKind::kAppearance, st, a);
  GatherFeatures(g.config, comps, FieldKind::kAppearance, st, b);
  EXPECT_EQ(a, b);
}

}  // namespace
}  // namespace dctrf
