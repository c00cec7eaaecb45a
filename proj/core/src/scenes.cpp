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

#include "dctrf/scenes.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "dctrf/error.hpp"
#include "json.hpp"

namespace dctrf {

namespace {

using nlohmann::json;

json VecJson(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 JsonVec(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3)
    throw Error(ErrorCode::kConfig, field + " must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void CheckColor(const Vec3& c, const std::string& field) {
  for (int i = 0; i < 3; ++i)
    if (!(c[i] >= 0.0 && c[i] <= 1.0))
      throw Error(ErrorCode::kConfig, field + " must lie in [0, 1]");
}

}  // namespace

void SceneSpec::Validate() const {
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    const std::string f = "blobs[" + std::to_string(i) + "]";
    if (!(blobs[i].peak >= 0.0))
      throw Error(ErrorCode::kConfig, f + ".peak must be >= 0");
    if (!(blobs[i].width > 0.0))
      throw Error(ErrorCode::kConfig, f + ".width must be > 0");
    CheckColor(blobs[i].color, f + ".color");
  }
  for (std::size_t i = 0; i < spheres.size(); ++i) {
    const std::string f = "spheres[" + std::to_string(i) + "]";
    if (!(spheres[i].density >= 0.0))
      throw Error(ErrorCode::kConfig, f + ".density must be >= 0");
    if (!(spheres[i].radius > 0.0))
      throw Error(ErrorCode::kConfig, f + ".radius must be > 0");
    CheckColor(spheres[i].color, f + ".color");
  }
  CheckColor(background, "background");
  for (int i = 0; i < 3; ++i)
    if (!(bounds.lo[i] < bounds.hi[i]))
      throw Error(ErrorCode::kConfig, "bounds must be non-empty");
  const CameraRing& c = cameras;
  if (c.count < 1) throw Error(ErrorCode::kConfig, "cameras.count must be >= 1");
  if (c.test_every < 1)
    throw Error(ErrorCode::kConfig, "cameras.test_every must be >= 1");
  if (!(c.radius > 0.0))
    throw Error(ErrorCode::kConfig, "cameras.radius must be > 0");
  if (c.width < 1 || c.height < 1)
    throw Error(ErrorCode::kConfig, "cameras image size must be positive");
  if (!(c.focal > 0.0))
    throw Error(ErrorCode::kConfig, "cameras.focal must be > 0");
  if (!(c.near < c.far))
    throw Error(ErrorCode::kConfig, "cameras.near must be < cameras.far");
}

Camera SceneSpec::CameraAt(int index) const {
  if (index < 0 || index >= cameras.count)
    throw Error(ErrorCode::kContract,
                "camera index " + std::to_string(index) + " out of range");
  const double phi = 2.0 * std::numbers::pi * index / cameras.count;
  const double el = cameras.elevation_deg * std::numbers::pi / 180.0;
  const Vec3 center = bounds.Center();
  const Vec3 eye =
      center + cameras.radius * Vec3{std::cos(el) * std::cos(phi),
                                     std::cos(el) * std::sin(phi),
                                     std::sin(el)};
  return Camera::LookAt(eye, center, {0.0, 0.0, 1.0}, cameras.focal,
                        cameras.width, cameras.height, cameras.near,
                        cameras.far);
}

std::vector<int> SceneSpec::TrainIndices() const {
  std::vector<int> out;
  for (int i = 0; i < cameras.count; ++i)
    if (i % cameras.test_every != 0 || cameras.test_every == 1) out.push_back(i);
  return out;
}

std::vector<int> SceneSpec::TestIndices() const {
  std::vector<int> out;
  for (int i = 0; i < cameras.count; i += cameras.test_every) out.push_back(i);
  return out;
}

FieldSample FieldEval(const SceneSpec& spec, const Vec3& point) {
  FieldSample s;
  Vec3 weighted;
  for (const auto& b : spec.blobs) {
    const Vec3 d = point - b.center;
    const double sigma =
        b.peak * std::exp(-Dot(d, d) / (2.0 * b.width * b.width));
    s.sigma += sigma;
    weighted += sigma * b.color;
  }
  for (const auto& sp : spec.spheres) {
    if (Norm(point - sp.center) <= sp.radius) {
      s.sigma += sp.density;
      weighted += sp.density * sp.color;
    }
  }
  if (s.sigma > 0.0) s.rgb = (1.0 / s.sigma) * weighted;
  return s;
}

Vec3 OracleRenderRay(const SceneSpec& spec, const Ray& ray, int num_samples) {
  SampleConfig config;
  config.num_samples = num_samples;
  const RaySampleSet samples = SamplePoints(ray, spec.bounds, config);
  if (samples.empty()) return spec.background;
  std::vector<double> sigma(samples.size());
  std::vector<Vec3> colors(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const FieldSample f = FieldEval(spec, samples.points[i]);
    sigma[i] = f.sigma;
    colors[i] = f.rgb;
  }
  return Composite(sigma, samples.delta, colors, spec.background).color;
}

Image OracleRender(const SceneSpec& spec, const Camera& camera,
                   int num_samples) {
  camera.Validate();
  Image img(camera.width, camera.height);
  for (int y = 0; y < camera.height; ++y)
    for (int x = 0; x < camera.width; ++x)
      img.SetPixel(x, y,
                   OracleRenderRay(spec, GenerateRay(camera, x, y), num_samples));
  return img;
}

std::vector<std::string> ScenePresetNames() { return {"blobs3", "empty", "sphere"}; }

SceneSpec ScenePreset(const std::string& name) {
  SceneSpec s;
  s.name = name;
  if (name == "blobs3") {
    s.blobs = {
        {{0.55, 0.0, 0.0}, 0.3, 20.0, {0.9, 0.15, 0.1}},
        {{-0.3, 0.5, 0.1}, 0.3, 20.0, {0.1, 0.8, 0.2}},
        {{-0.3, -0.45, -0.15}, 0.3, 20.0, {0.15, 0.25, 0.9}},
    };
  } else if (name == "sphere") {
    s.spheres = {{{0.0, 0.0, 0.0}, 0.6, 20.0, {0.8, 0.6, 0.2}}};
  } else if (name != "empty") {
    throw Error(ErrorCode::kConfig, "unknown scene preset '" + name + "'");
  }
  return s;
}

std::string SceneToJson(const SceneSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["blobs"] = json::array();
  for (const auto& b : spec.blobs)
    j["blobs"].push_back({{"center", VecJson(b.center)},
                          {"width", b.width},
                          {"peak", b.peak},
                          {"color", VecJson(b.color)}});
  j["spheres"] = json::array();
  for (const auto& s : spec.spheres)
    j["spheres"].push_back({{"center", VecJson(s.center)},
                            {"radius", s.radius},
                            {"density", s.density},
                            {"color", VecJson(s.color)}});
  j["bounds"] = {{"lo", VecJson(spec.bounds.lo)},
                 {"hi", VecJson(spec.bounds.hi)}};
  const CameraRing& c = spec.cameras;
  j["cameras"] = {{"count", c.count},       {"radius", c.radius},
                  {"elevation_deg", c.elevation_deg},
                  {"width", c.width},       {"height", c.height},
                  {"focal", c.focal},       {"near", c.near},
                  {"far", c.far},           {"test_every", c.test_every}};
  j["background"] = VecJson(spec.background);
  return j.dump(2);
}

SceneSpec SceneFromJson(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("scene JSON: ") + e.what());
  }
  SceneSpec s;
  try {
    s.name = j.value("name", "custom");
    for (const auto& b : j.value("blobs", json::array()))
      s.blobs.push_back({JsonVec(b.at("center"), "blob.center"),
                         b.at("width").get<double>(),
                         b.at("peak").get<double>(),
                         JsonVec(b.at("color"), "blob.color")});
    for (const auto& sp : j.value("spheres", json::array()))
      s.spheres.push_back({JsonVec(sp.at("center"), "sphere.center"),
                           sp.at("radius").get<double>(),
                           sp.at("density").get<double>(),
                           JsonVec(sp.at("color"), "sphere.color")});
    if (j.contains("bounds")) {
      s.bounds.lo = JsonVec(j["bounds"].at("lo"), "bounds.lo");
      s.bounds.hi = JsonVec(j["bounds"].at("hi"), "bounds.hi");
    }
    if (j.contains("cameras")) {
      const json& c = j["cameras"];
      CameraRing& r = s.cameras;
      r.count = c.value("count", r.count);
      r.radius = c.value("radius", r.radius);
      r.elevation_deg = c.value("elevation_deg", r.elevation_deg);
      r.width = c.value("width", r.width);
      r.height = c.value("height", r.height);
      r.focal = c.value("focal", r.focal);
      r.near = c.value("near", r.near);
      r.far = c.value("far", r.far);
      r.test_every = c.value("test_every", r.test_every);
    }
    if (j.contains("background"))
      s.background = JsonVec(j["background"], "background");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("scene JSON: ") + e.what());
  }
  s.Validate();
  return s;
}

SceneSpec LoadScene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open scene file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return SceneFromJson(ss.str());
}

void SaveScene(const SceneSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << SceneToJson(spec) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

SceneSpec ResolveScene(const std::string& name_or_path) {
  for (const auto& n : ScenePresetNames())
    if (n == name_or_path) return ScenePreset(n);
  return LoadScene(name_or_path);
}

}  // namespace dctrf
