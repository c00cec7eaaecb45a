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

#ifndef DCTRF_SCENES_HPP_
#define DCTRF_SCENES_HPP_

#include <string>
#include <vector>

#include "dctrf/math.hpp"
#include "dctrf/renderer.hpp"

namespace dctrf {

struct GaussianBlob {
  Vec3 center;
  double width = 0.3;  // isotropic standard deviation
  double peak = 20.0;  // density at the center
  Vec3 color{1.0, 1.0, 1.0};
};

struct Sphere {
  Vec3 center;
  double radius = 0.5;
  double density = 20.0;
  Vec3 color{1.0, 1.0, 1.0};
};

struct CameraRing {
  int count = 32;
  double radius = 4.0;
  double elevation_deg = 20.0;
  int width = 64;
  int height = 64;
  double focal = 64.0;
  double near = 0.1;
  double far = 10.0;
  int test_every = 4;  // every n-th camera is held out for testing
};

struct SceneSpec {
  std::string name = "custom";
  std::vector<GaussianBlob> blobs;
  std::vector<Sphere> spheres;
  Box bounds{{-1.5, -1.5, -1.5}, {1.5, 1.5, 1.5}};
  CameraRing cameras;
  Vec3 background{1.0, 1.0, 1.0};

  // Throws kConfig naming the offending field.
  void Validate() const;

  Camera CameraAt(int index) const;
  std::vector<int> TrainIndices() const;
  std::vector<int> TestIndices() const;
};

struct FieldSample {
  double sigma = 0.0;
  Vec3 rgb{0.5, 0.5, 0.5};
};

// Density is the sum over primitives; color is their density-weighted mean
// (mid gray where the density vanishes).
FieldSample FieldEval(const SceneSpec& spec, const Vec3& point);

inline constexpr int kOracleSamples = 4 * 128;

// Ground truth: the renderer's quadrature on the analytic field.
Vec3 OracleRenderRay(const SceneSpec& spec, const Ray& ray,
                     int num_samples = kOracleSamples);
Image OracleRender(const SceneSpec& spec, const Camera& camera,
                   int num_samples = kOracleSamples);

std::vector<std::string> ScenePresetNames();
// Throws kConfig for unknown names.
SceneSpec ScenePreset(const std::string& name);

std::string SceneToJson(const SceneSpec& spec);
SceneSpec SceneFromJson(const std::string& text);
SceneSpec LoadScene(const std::string& path);
void SaveScene(const SceneSpec& spec, const std::string& path);
// Preset name or path to a scene file.
SceneSpec ResolveScene(const std::string& name_or_path);

}  // namespace dctrf

#endif  // DCTRF_SCENES_HPP_
