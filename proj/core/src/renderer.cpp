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

#include "dctrf/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dctrf/error.hpp"

namespace dctrf {

namespace {

// Same layout as DecoderMLP::params with W1, W2 and W3 stored
// input-major, which is what the forward pass wants.
std::vector<double> TransposeLayers(const std::vector<double>& w,
                                    const DecoderMLP& mlp) {
  std::vector<double> t = w;
  const auto transpose = [&](std::size_t off, int rows, int cols) {
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        t[off + std::size_t(c) * rows + r] = w[off + std::size_t(r) * cols + c];
  };
  transpose(mlp.W1(), mlp.hidden, mlp.InputDim());
  transpose(mlp.W2(), mlp.hidden, mlp.hidden);
  transpose(mlp.W3(), 3, mlp.hidden);
  return t;
}

// Forward pass of the colour MLP on transposed weights; fills
// pre-activations and activations.
void MlpForward(const double* wt, const DecoderMLP& mlp, const double* input,
                double* pre1, double* h1, double* pre2, double* h2,
                double logits[3]) {
  const int in = mlp.InputDim();
  const int hid = mlp.hidden;
  const double* w1 = wt + mlp.W1();
  const double* w2 = wt + mlp.W2();
  const double* w3 = wt + mlp.W3();
  std::copy_n(wt + mlp.B1(), hid, pre1);
  for (int i = 0; i < in; ++i) {
    const double x = input[i];
    if (x == 0.0) continue;
    const double* col = w1 + std::size_t(i) * hid;
    for (int h = 0; h < hid; ++h) pre1[h] += col[h] * x;
  }
  for (int h = 0; h < hid; ++h) h1[h] = pre1[h] > 0.0 ? pre1[h] : 0.0;
  std::copy_n(wt + mlp.B2(), hid, pre2);
  for (int k = 0; k < hid; ++k) {
    const double x = h1[k];
    if (x == 0.0) continue;
    const double* col = w2 + std::size_t(k) * hid;
    for (int h = 0; h < hid; ++h) pre2[h] += col[h] * x;
  }
  for (int h = 0; h < hid; ++h) h2[h] = pre2[h] > 0.0 ? pre2[h] : 0.0;
  const double* b3 = wt + mlp.B3();
  logits[0] = b3[0];
  logits[1] = b3[1];
  logits[2] = b3[2];
  for (int k = 0; k < hid; ++k) {
    const double x = h2[k];
    if (x == 0.0) continue;
    const double* col = w3 + std::size_t(k) * 3;
    logits[0] += col[0] * x;
    logits[1] += col[1] * x;
    logits[2] += col[2] * x;
  }
}

// Backward pass given dL/dlogits. Accumulates parameter gradients into
// `grad` and writes dL/dinput into `dinput`. `scratch` needs 2 * hidden.
void MlpBackward(const double* w, const DecoderMLP& mlp, const double* input,
                 const double* pre1, const double* h1, const double* pre2,
                 const double* h2, const double dlogits[3], double* grad,
                 double* dinput, double* scratch) {
  const int in = mlp.InputDim();
  const int hid = mlp.hidden;
  const double* w1 = w + mlp.W1();
  const double* w2 = w + mlp.W2();
  const double* w3 = w + mlp.W3();
  double* gw1 = grad + mlp.W1();
  double* gb1 = grad + mlp.B1();
  double* gw2 = grad + mlp.W2();
  double* gb2 = grad + mlp.B2();
  double* gw3 = grad + mlp.W3();
  double* gb3 = grad + mlp.B3();
  double* dpre2 = scratch;
  double* dpre1 = scratch + hid;

  for (int k = 0; k < hid; ++k) dpre2[k] = 0.0;
  for (int o = 0; o < 3; ++o) {
    gb3[o] += dlogits[o];
    const double* row = w3 + std::size_t(o) * hid;
    double* grow = gw3 + std::size_t(o) * hid;
    for (int k = 0; k < hid; ++k) {
      grow[k] += dlogits[o] * h2[k];
      dpre2[k] += dlogits[o] * row[k];
    }
  }
  for (int k = 0; k < hid; ++k)
    if (pre2[k] <= 0.0) dpre2[k] = 0.0;

  for (int k = 0; k < hid; ++k) dpre1[k] = 0.0;
  for (int h = 0; h < hid; ++h) {
    const double g = dpre2[h];
    if (g == 0.0) continue;
    gb2[h] += g;
    const double* row = w2 + std::size_t(h) * hid;
    double* grow = gw2 + std::size_t(h) * hid;
    for (int k = 0; k < hid; ++k) {
      grow[k] += g * h1[k];
      dpre1[k] += g * row[k];
    }
  }
  for (int k = 0; k < hid; ++k)
    if (pre1[k] <= 0.0) dpre1[k] = 0.0;

  for (int i = 0; i < in; ++i) dinput[i] = 0.0;
  for (int h = 0; h < hid; ++h) {
    const double g = dpre1[h];
    if (g == 0.0) continue;
    gb1[h] += g;
    const double* row = w1 + std::size_t(h) * in;
    double* grow = gw1 + std::size_t(h) * in;
    for (int i = 0; i < in; ++i) {
      grow[i] += g * input[i];
      dinput[i] += g * row[i];
    }
  }
}

std::vector<double> ToDouble(const std::vector<float>& v) {
  return std::vector<double>(v.begin(), v.end());
}

void FillInput(const DecoderMLP& mlp, std::span<const double> feature,
               const Vec3& direction, double* input) {
  for (int i = 0; i < mlp.feature_dim; ++i) input[i] = feature[i];
  if (mlp.view_dependent) {
    EncodeDirection(direction, std::span<double>(input + mlp.feature_dim,
                                                 DecoderMLP::kDirectionEncodingDim));
  }
}

}  // namespace

// ---------------------------------------------------------------- Camera --

Camera Camera::LookAt(const Vec3& eye, const Vec3& target, const Vec3& up,
                      double focal, int width, int height, double near,
                      double far) {
  const Vec3 back = Normalized(eye - target);
  const Vec3 right = Normalized(Cross(up, back));
  const Vec3 true_up = Cross(back, right);
  Camera cam;
  cam.rotation = Mat3::FromColumns(right, true_up, back);
  cam.position = eye;
  cam.focal = focal;
  cam.width = width;
  cam.height = height;
  cam.near = near;
  cam.far = far;
  cam.Validate();
  return cam;
}

void Camera::Validate() const {
  if (!(focal > 0.0)) throw Error(ErrorCode::kConfig, "camera focal must be > 0");
  if (!(near < far)) throw Error(ErrorCode::kConfig, "camera near must be < far");
  if (width < 1 || height < 1)
    throw Error(ErrorCode::kConfig, "camera image size must be positive");
}

Ray GenerateRay(const Camera& camera, int px, int py) {
  if (px < 0 || py < 0 || px >= camera.width || py >= camera.height) {
    std::ostringstream os;
    os << "pixel (" << px << ", " << py << ") outside " << camera.width << "x"
       << camera.height << " image";
    throw Error(ErrorCode::kContract, os.str());
  }
  const double cx = 0.5 * camera.width;
  const double cy = 0.5 * camera.height;
  const Vec3 local{(px + 0.5 - cx) / camera.focal,
                   -(py + 0.5 - cy) / camera.focal, -1.0};
  Ray ray;
  ray.origin = camera.position;
  ray.direction = Normalized(camera.rotation * local);
  ray.t_near = camera.near;
  ray.t_far = camera.far;
  return ray;
}

std::vector<Ray> GenerateRays(const Camera& camera,
                              std::span<const int> pixel_indices) {
  std::vector<Ray> rays;
  rays.reserve(pixel_indices.size());
  for (int idx : pixel_indices) {
    if (idx < 0 || idx >= camera.width * camera.height) {
      throw Error(ErrorCode::kContract,
                  "pixel index " + std::to_string(idx) + " out of range");
    }
    rays.push_back(GenerateRay(camera, idx % camera.width, idx / camera.width));
  }
  return rays;
}

// -------------------------------------------------------------- Sampling --

bool ClipToBox(const Ray& ray, const Box& box, double* t0, double* t1) {
  double lo = ray.t_near;
  double hi = ray.t_far;
  for (int a = 0; a < 3; ++a) {
    const double o = ray.origin[a];
    const double d = ray.direction[a];
    if (d == 0.0) {
      if (o < box.lo[a] || o > box.hi[a]) return false;
      continue;
    }
    double ta = (box.lo[a] - o) / d;
    double tb = (box.hi[a] - o) / d;
    if (ta > tb) std::swap(ta, tb);
    lo = std::max(lo, ta);
    hi = std::min(hi, tb);
  }
  if (!(lo < hi)) return false;
  *t0 = lo;
  *t1 = hi;
  return true;
}

RaySampleSet SamplePoints(const Ray& ray, const Box& box,
                          const SampleConfig& config, Rng* rng) {
  RaySampleSet set;
  double t0 = 0.0, t1 = 0.0;
  if (config.num_samples < 1 || !ClipToBox(ray, box, &t0, &t1)) return set;
  if (config.stratified && rng == nullptr) {
    throw Error(ErrorCode::kContract, "stratified sampling needs an rng");
  }
  const int n = config.num_samples;
  const double step = (t1 - t0) / n;
  set.t.resize(n);
  for (int i = 0; i < n; ++i) {
    const double offset = config.stratified ? rng->Uniform() : 0.5;
    set.t[i] = t0 + (i + offset) * step;
  }
  set.delta.resize(n);
  for (int i = 0; i + 1 < n; ++i) set.delta[i] = set.t[i + 1] - set.t[i];
  set.delta[n - 1] = n > 1 ? set.delta[n - 2] : step;
  set.points.resize(n);
  for (int i = 0; i < n; ++i)
    set.points[i] = box.Clamp(ray.origin + set.t[i] * ray.direction);
  return set;
}

// ------------------------------------------------------------------- MLP --

std::size_t DecoderMLP::ParamCount(int feature_dim, bool view_dependent,
                                   int hidden) {
  const std::size_t in =
      feature_dim + (view_dependent ? kDirectionEncodingDim : 0);
  return hidden * in + hidden + std::size_t(hidden) * hidden + hidden +
         3 * std::size_t(hidden) + 3 + 1;
}

DecoderMLP DecoderMLP::Create(int feature_dim, bool view_dependent,
                              std::uint64_t seed, double density_bias,
                              int hidden) {
  if (feature_dim < 1 || hidden < 1)
    throw Error(ErrorCode::kConfig, "decoder dimensions must be positive");
  DecoderMLP mlp;
  mlp.feature_dim = feature_dim;
  mlp.hidden = hidden;
  mlp.view_dependent = view_dependent;
  mlp.params.assign(ParamCount(feature_dim, view_dependent, hidden), 0.0f);
  Rng rng(seed);
  auto fill = [&](std::size_t begin, std::size_t count, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i)
      mlp.params[begin + i] = static_cast<float>(rng.Uniform(-bound, bound));
  };
  const int in = mlp.InputDim();
  fill(mlp.W1(), std::size_t(hidden) * in, in);
  fill(mlp.B1(), hidden, in);
  fill(mlp.W2(), std::size_t(hidden) * hidden, hidden);
  fill(mlp.B2(), hidden, hidden);
  fill(mlp.W3(), 3 * std::size_t(hidden), hidden);
  fill(mlp.B3(), 3, hidden);
  mlp.params[mlp.DensityBias()] = static_cast<float>(density_bias);
  return mlp;
}

bool DecoderMLP::AllFinite() const {
  return std::all_of(params.begin(), params.end(),
                     [](float v) { return std::isfinite(v); });
}

void EncodeDirection(const Vec3& d, std::span<double> out) {
  out[0] = d.x;
  out[1] = d.y;
  out[2] = d.z;
  int k = 3;
  for (double freq : {1.0, 2.0}) {
    for (int a = 0; a < 3; ++a) {
      out[k++] = std::sin(freq * d[a]);
      out[k++] = std::cos(freq * d[a]);
    }
  }
}

DecodedSample DecodeAppearance(const FeatureVector& feature,
                               const Vec3& direction, const DecoderMLP& mlp) {
  const std::vector<double> w = ToDouble(mlp.params);
  double pre = w[mlp.DensityBias()];
  for (double v : feature.density) pre += v;
  std::vector<double> input(mlp.InputDim());
  FillInput(mlp, feature.appearance, direction, input.data());
  std::vector<double> buf(4 * mlp.hidden);
  double logits[3];
  MlpForward(TransposeLayers(w, mlp).data(), mlp, input.data(), buf.data(),
             buf.data() + mlp.hidden,
             buf.data() + 2 * mlp.hidden, buf.data() + 3 * mlp.hidden, logits);
  return {Softplus(pre),
          {Sigmoid(logits[0]), Sigmoid(logits[1]), Sigmoid(logits[2])}};
}

FeatureVector DecodeAppearanceBackward(const FeatureVector& feature,
                                       const Vec3& direction,
                                       const DecoderMLP& mlp,
                                       double upstream_sigma,
                                       const Vec3& upstream_rgb,
                                       std::span<double> mlp_grad) {
  const std::vector<double> w = ToDouble(mlp.params);
  double pre = w[mlp.DensityBias()];
  for (double v : feature.density) pre += v;
  const double dpre = upstream_sigma * Sigmoid(pre);
  mlp_grad[mlp.DensityBias()] += dpre;

  const int hid = mlp.hidden;
  std::vector<double> input(mlp.InputDim());
  FillInput(mlp, feature.appearance, direction, input.data());
  std::vector<double> buf(6 * hid);
  double logits[3];
  MlpForward(TransposeLayers(w, mlp).data(), mlp, input.data(), buf.data(),
             buf.data() + hid, buf.data() + 2 * hid, buf.data() + 3 * hid,
             logits);
  double dlogits[3];
  for (int o = 0; o < 3; ++o) {
    const double s = Sigmoid(logits[o]);
    dlogits[o] = upstream_rgb[o] * s * (1.0 - s);
  }
  std::vector<double> dinput(mlp.InputDim());
  MlpBackward(w.data(), mlp, input.data(), buf.data(), buf.data() + hid,
              buf.data() + 2 * hid, buf.data() + 3 * hid, dlogits,
              mlp_grad.data(), dinput.data(), buf.data() + 4 * hid);

  FeatureVector grad;
  grad.density.assign(feature.density.size(), dpre);
  grad.appearance.assign(dinput.begin(), dinput.begin() + mlp.feature_dim);
  return grad;
}

// ------------------------------------------------------------ Compositing --

CompositeResult Composite(std::span<const double> sigma,
                          std::span<const double> delta,
                          std::span<const Vec3> colors,
                          const Vec3& background) {
  const std::size_t n = sigma.size();
  CompositeResult r;
  r.transmittance.resize(n + 1);
  r.weights.resize(n);
  double optical_depth = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r.transmittance[i] = std::exp(-optical_depth);
    const double tau = sigma[i] * delta[i];
    r.weights[i] = r.transmittance[i] * -std::expm1(-tau);
    optical_depth += tau;
    r.color += r.weights[i] * colors[i];
  }
  r.transmittance[n] = std::exp(-optical_depth);
  r.color += r.transmittance[n] * background;
  return r;
}

// ----------------------------------------------------------- RayRenderer --

RayRenderer::RayRenderer(const FeatureGrid& grid, const DecoderMLP& mlp,
                         const RenderOptions& options)
    : config_(grid.config), grid_(&grid), mlp_(mlp), options_(options),
      weights_(ToDouble(mlp.params)),
      weights_t_(TransposeLayers(weights_, mlp)) {
  if (mlp.feature_dim != config_.appearance_channels) {
    throw Error(ErrorCode::kConfig,
                "decoder feature_dim does not match appearance_channels");
  }
}

RayRenderer::RayRenderer(const GridConfig& config,
                         std::span<const Array3<double>> components,
                         const DecoderMLP& mlp, const RenderOptions& options)
    : config_(config), components_(components), mlp_(mlp), options_(options),
      weights_(ToDouble(mlp.params)),
      weights_t_(TransposeLayers(weights_, mlp)) {
  if (components.size() != kNumComponents)
    throw Error(ErrorCode::kContract, "expected 12 grid components");
  if (mlp.feature_dim != config_.appearance_channels) {
    throw Error(ErrorCode::kConfig,
                "decoder feature_dim does not match appearance_channels");
  }
}

void RayRenderer::Gather(FieldKind kind, const Stencil& st,
                         std::span<double> out) const {
  if (grid_) {
    GatherFeatures(*grid_, kind, st, out);
  } else {
    GatherFeatures(config_, components_, kind, st, out);
  }
}

void RayRenderer::Scatter(FieldKind kind, const Stencil& st,
                          std::span<const double> upstream,
                          GridGradient& grad) const {
  if (grid_) {
    ScatterFeatureGrad(*grid_, kind, st, upstream, grad);
  } else {
    ScatterFeatureGrad(config_, components_, kind, st, upstream, grad);
  }
}

void RayRenderer::EvalMlp(Activation& act) const {
  const int hid = mlp_.hidden;
  act.pre1.resize(hid);
  act.h1.resize(hid);
  act.pre2.resize(hid);
  act.h2.resize(hid);
  double logits[3];
  MlpForward(weights_t_.data(), mlp_, act.input.data(), act.pre1.data(),
             act.h1.data(), act.pre2.data(), act.h2.data(), logits);
  act.rgb = {Sigmoid(logits[0]), Sigmoid(logits[1]), Sigmoid(logits[2])};
}

Vec3 RayRenderer::Render(const Ray& ray, Rng* jitter) {
  ray_ = ray;
  samples_ = SamplePoints(ray, config_.bounds, options_.sampling, jitter);
  const std::size_t n = samples_.size();
  stencils_.resize(n);
  pre_sigma_.resize(n);
  sigma_.resize(n);
  colors_.assign(n, Vec3{});
  active_.assign(n, -1);
  if (n == 0) {
    composite_ = Composite({}, {}, {}, options_.background);
    return composite_.color;
  }

  const int dch = config_.density_channels;
  const int ach = config_.appearance_channels;
  scratch_.resize(std::max(dch, ach));
  const double bias = weights_[mlp_.DensityBias()];
  for (std::size_t i = 0; i < n; ++i) {
    stencils_[i] = Locate(config_, samples_.points[i]);
    std::span<double> feat(scratch_.data(), dch);
    Gather(FieldKind::kDensity, stencils_[i], feat);
    double pre = bias;
    for (double v : feat) pre += v;
    pre_sigma_[i] = pre;
    sigma_[i] = Softplus(pre);
  }

  // Weights depend only on density; colours are decoded where they matter.
  composite_ = Composite(sigma_, samples_.delta, colors_, options_.background);
  int slots = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (composite_.weights[i] <= options_.weight_threshold) continue;
    if (static_cast<std::size_t>(slots) >= acts_.size()) acts_.emplace_back();
    Activation& act = acts_[slots];
    act.input.resize(mlp_.InputDim());
    std::span<double> feat(act.input.data(), ach);
    Gather(FieldKind::kAppearance, stencils_[i], feat);
    if (mlp_.view_dependent) {
      EncodeDirection(ray.direction,
                      std::span<double>(act.input.data() + ach,
                                        DecoderMLP::kDirectionEncodingDim));
    }
    EvalMlp(act);
    for (const auto* pre : {&act.pre1, &act.pre2}) {
      for (double v : *pre) {
        pattern_ = (pattern_ ^ static_cast<std::uint64_t>(v > 0.0)) *
                   0x100000001b3ull;
      }
    }
    colors_[i] = act.rgb;
    active_[i] = slots++;
  }

  Vec3 color = composite_.transmittance[n] * options_.background;
  for (std::size_t i = 0; i < n; ++i) color += composite_.weights[i] * colors_[i];
  composite_.color = color;
  return color;
}

void RayRenderer::Backward(const Vec3& dcolor, GridGradient& grid_grad,
                           std::span<double> mlp_grad) {
  const std::size_t n = samples_.size();
  if (n == 0) return;
  const int dch = config_.density_channels;
  const int ach = config_.appearance_channels;
  const int hid = mlp_.hidden;
  std::vector<double> dinput(mlp_.InputDim());
  std::vector<double> mlp_scratch(2 * hid);
  std::vector<double> dfeat(std::max(dch, ach));

  // Colour path.
  for (std::size_t i = 0; i < n; ++i) {
    if (active_[i] < 0) continue;
    const Activation& act = acts_[active_[i]];
    const double w = composite_.weights[i];
    double dlogits[3];
    for (int o = 0; o < 3; ++o) {
      const double s = act.rgb[o];
      dlogits[o] = w * dcolor[o] * s * (1.0 - s);
    }
    MlpBackward(weights_.data(), mlp_, act.input.data(), act.pre1.data(),
                act.h1.data(), act.pre2.data(), act.h2.data(), dlogits,
                mlp_grad.data(), dinput.data(), mlp_scratch.data());
    Scatter(FieldKind::kAppearance, stencils_[i],
                       std::span<const double>(dinput.data(), ach), grid_grad);
  }

  // Density path: dC/dsigma_k = delta_k (T_{k+1} c_k - S_k), where S_k is
  // everything composited behind sample k including the background.
  double suffix = composite_.transmittance[n] * Dot(dcolor, options_.background);
  double& gbias = mlp_grad[mlp_.DensityBias()];
  for (std::size_t k = n; k-- > 0;) {
    const double gc = Dot(dcolor, colors_[k]);
    const double dsigma =
        samples_.delta[k] * (composite_.transmittance[k + 1] * gc - suffix);
    suffix += composite_.weights[k] * gc;
    const double dpre = dsigma * Sigmoid(pre_sigma_[k]);
    if (dpre == 0.0) continue;
    gbias += dpre;
    std::fill(dfeat.begin(), dfeat.begin() + dch, dpre);
    Scatter(FieldKind::kDensity, stencils_[k],
                       std::span<const double>(dfeat.data(), dch), grid_grad);
  }
}

Vec3 RenderRay(const FeatureGrid& grid, const DecoderMLP& mlp, const Ray& ray,
               const RenderOptions& options) {
  RayRenderer renderer(grid, mlp, options);
  return renderer.Render(ray);
}

Image RenderImage(const FeatureGrid& grid, const DecoderMLP& mlp,
                  const Camera& camera, const RenderOptions& options) {
  RayRenderer renderer(grid, mlp, options);
  Image img(camera.width, camera.height);
  for (int y = 0; y < camera.height; ++y)
    for (int x = 0; x < camera.width; ++x)
      img.SetPixel(x, y, renderer.Render(GenerateRay(camera, x, y)));
  return img;
}

double MeanSquaredError(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height || a.rgb.size() != b.rgb.size()) {
    throw Error(ErrorCode::kContract, "image shapes differ");
  }
  if (a.rgb.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rgb.size(); ++i) {
    const double d = a.rgb[i] - b.rgb[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.rgb.size());
}

double Psnr(const Image& a, const Image& b) {
  const double mse = MeanSquaredError(a, b);
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

}  // namespace dctrf
