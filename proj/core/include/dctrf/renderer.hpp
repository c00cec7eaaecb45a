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

#ifndef DCTRF_RENDERER_HPP_
#define DCTRF_RENDERER_HPP_

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "dctrf/grid.hpp"
#include "dctrf/math.hpp"

namespace dctrf {

// Pinhole camera. `rotation` maps camera to world; the camera looks down its
// local -Z with +X right and +Y up. Image rows grow downward.
struct Camera {
  Mat3 rotation;
  Vec3 position;
  double focal = 64.0;  // pixels
  int width = 64;
  int height = 64;
  double near = 0.0;
  double far = 100.0;

  static Camera LookAt(const Vec3& eye, const Vec3& target, const Vec3& up,
                       double focal, int width, int height, double near,
                       double far);
  void Validate() const;
};

// `t_near`/`t_far` bound the ray parameter before box clipping.
struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length
  double t_near = 0.0;
  double t_far = std::numeric_limits<double>::infinity();
};

// Ray through the centre of pixel (px, py). Throws kContract when the pixel
// is outside the image.
Ray GenerateRay(const Camera& camera, int px, int py);
std::vector<Ray> GenerateRays(const Camera& camera,
                              std::span<const int> pixel_indices);

struct SampleConfig {
  int num_samples = 128;
  bool stratified = false;
};

struct RaySampleSet {
  std::vector<double> t;
  std::vector<double> delta;
  std::vector<Vec3> points;

  bool empty() const { return t.empty(); }
  std::size_t size() const { return t.size(); }
};

// Entry/exit parameters of the ray inside `box` clipped to [t_near, t_far].
// Returns false on a miss.
bool ClipToBox(const Ray& ray, const Box& box, double* t0, double* t1);

// Uniform samples over the clipped interval: midpoints in deterministic mode,
// one jittered sample per stratum when `config.stratified` (requires `rng`).
RaySampleSet SamplePoints(const Ray& ray, const Box& box,
                          const SampleConfig& config, Rng* rng = nullptr);

// Shallow colour decoder: feature (+ optional direction encoding) ->
// 64 ReLU -> 64 ReLU -> 3 logits. All weights live in one flat vector:
//   w1[hidden][in] b1[hidden] w2[hidden][hidden] b2[hidden]
//   w3[3][hidden] b3[3] density_bias
struct DecoderMLP {
  static constexpr int kDirectionEncodingDim = 15;  // d, sin/cos(2^k d), k<2

  int feature_dim = 16;
  int hidden = 64;
  bool view_dependent = false;
  std::vector<float> params;

  static DecoderMLP Create(int feature_dim, bool view_dependent,
                           std::uint64_t seed, double density_bias = -10.0,
                           int hidden = 64);
  static std::size_t ParamCount(int feature_dim, bool view_dependent,
                                int hidden);

  int InputDim() const {
    return feature_dim + (view_dependent ? kDirectionEncodingDim : 0);
  }
  std::size_t W1() const { return 0; }
  std::size_t B1() const { return W1() + std::size_t(hidden) * InputDim(); }
  std::size_t W2() const { return B1() + hidden; }
  std::size_t B2() const { return W2() + std::size_t(hidden) * hidden; }
  std::size_t W3() const { return B2() + hidden; }
  std::size_t B3() const { return W3() + 3 * std::size_t(hidden); }
  std::size_t DensityBias() const { return B3() + 3; }
  bool AllFinite() const;
};

void EncodeDirection(const Vec3& d, std::span<double> out);

struct DecodedSample {
  double sigma = 0.0;
  Vec3 rgb;
};

DecodedSample DecodeAppearance(const FeatureVector& feature,
                               const Vec3& direction, const DecoderMLP& mlp);

// Gradient of <upstream_sigma, sigma> + <upstream_rgb, rgb> with respect to
// the feature vector (returned) and the MLP parameters (accumulated into
// `mlp_grad`, which must have mlp.params.size() entries).
FeatureVector DecodeAppearanceBackward(const FeatureVector& feature,
                                       const Vec3& direction,
                                       const DecoderMLP& mlp,
                                       double upstream_sigma,
                                       const Vec3& upstream_rgb,
                                       std::span<double> mlp_grad);

// Emission-absorption compositing over ordered samples.
struct CompositeResult {
  Vec3 color;
  std::vector<double> transmittance;  // T_i, one per sample, plus T_final
  std::vector<double> weights;        // T_i (1 - exp(-sigma_i delta_i))
};
CompositeResult Composite(std::span<const double> sigma,
                          std::span<const double> delta,
                          std::span<const Vec3> colors,
                          const Vec3& background);

struct RenderOptions {
  SampleConfig sampling;
  Vec3 background{1.0, 1.0, 1.0};
  // Samples whose compositing weight does not exceed this skip the colour
  // decoder and contribute black.
  double weight_threshold = 1e-4;
};

// Differentiable renderer for a fixed grid/MLP snapshot. Holds scratch
// buffers, so use one instance per worker.
class RayRenderer {
 public:
  RayRenderer(const FeatureGrid& grid, const DecoderMLP& mlp,
              const RenderOptions& options);
  // Renders double-precision component values laid out as `config`
  // describes. The components must outlive the renderer.
  RayRenderer(const GridConfig& config,
              std::span<const Array3<double>> components,
              const DecoderMLP& mlp, const RenderOptions& options);

  // Forward pass. Keeps the intermediate state needed by Backward.
  Vec3 Render(const Ray& ray, Rng* jitter = nullptr);

  // Backpropagates dL/dC for the most recent Render call.
  void Backward(const Vec3& dcolor, GridGradient& grid_grad,
                std::span<double> mlp_grad);

  // Running hash of hidden-unit signs over every Render call so far.
  std::uint64_t ActivationPattern() const { return pattern_; }

 private:
  struct Activation {
    std::vector<double> input, pre1, h1, pre2, h2;
    Vec3 rgb;
  };
  void EvalMlp(Activation& act) const;
  void Gather(FieldKind kind, const Stencil& st, std::span<double> out) const;
  void Scatter(FieldKind kind, const Stencil& st,
               std::span<const double> upstream, GridGradient& grad) const;

  GridConfig config_;
  const FeatureGrid* grid_ = nullptr;             // float storage, or
  std::span<const Array3<double>> components_;  // double storage
  const DecoderMLP& mlp_;
  RenderOptions options_;
  std::vector<double> weights_;    // double copy of mlp_.params
  std::vector<double> weights_t_;  // same, layer matrices transposed

  Ray ray_;
  RaySampleSet samples_;
  std::vector<Stencil> stencils_;
  std::vector<double> pre_sigma_, sigma_;
  std::vector<Vec3> colors_;
  std::vector<int> active_;  // activation slot or -1
  std::vector<Activation> acts_;
  CompositeResult composite_;
  std::vector<double> scratch_;
  std::uint64_t pattern_ = 0xcbf29ce484222325ull;
};

Vec3 RenderRay(const FeatureGrid& grid, const DecoderMLP& mlp, const Ray& ray,
               const RenderOptions& options = {});

// Row-major RGB image with values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> rgb;

  Image() = default;
  Image(int w, int h, double fill = 0.0)
      : width(w), height(h), rgb(std::size_t(w) * h * 3, fill) {}
  Vec3 Pixel(int x, int y) const {
    const std::size_t i = (std::size_t(y) * width + x) * 3;
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
  void SetPixel(int x, int y, const Vec3& c) {
    const std::size_t i = (std::size_t(y) * width + x) * 3;
    rgb[i] = c.x;
    rgb[i + 1] = c.y;
    rgb[i + 2] = c.z;
  }
};

Image RenderImage(const FeatureGrid& grid, const DecoderMLP& mlp,
                  const Camera& camera, const RenderOptions& options = {});

inline constexpr double kPsnrCap = 99.0;

double MeanSquaredError(const Image& a, const Image& b);
// 10 log10(1 / MSE), capped at kPsnrCap. Throws kContract on shape mismatch.
double Psnr(const Image& a, const Image& b);

}  // namespace dctrf

#endif  // DCTRF_RENDERER_HPP_
