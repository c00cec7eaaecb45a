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

#ifndef DCTRF_TRAINER_HPP_
#define DCTRF_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dctrf/entropy.hpp"
#include "dctrf/grid.hpp"
#include "dctrf/renderer.hpp"
#include "dctrf/scenes.hpp"
#include "dctrf/transform.hpp"

namespace dctrf {

struct LossConfig {
  double lambda_e = 0.0;  // rate weight, per bit
  double alpha = 0.0;     // lambda_r = alpha * lambda_e
  int total_iters = 5000;
  double entropy_start_fraction = 16.0 / 30.0;
  // Once the rate terms are active, render through noise-quantized
  // coefficients as well (the same realization as the rate estimate).
  // Ignored when lambda_e == 0.
  bool quantization_noise_in_render = false;

  double lambda_r() const { return alpha * lambda_e; }
  int EntropyStart() const;
  bool RateActive(int iteration) const {
    return iteration >= EntropyStart();
  }
  void Validate() const;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-15;
};

struct TrainConfig {
  int batch_size = 512;
  SampleConfig sampling{128, true};
  double weight_threshold = 1e-4;
  Vec3 background{1.0, 1.0, 1.0};
  AdamConfig grid_opt{2e-2};
  AdamConfig mlp_opt{1e-3};
  AdamConfig entropy_opt{1e-3};
  bool view_dependent = false;
  int hidden = 64;  // decoder width
  double density_bias = -10.0;
  double entropy_init_scale = 10.0;
  std::uint64_t seed = 0;

  RenderOptions Render() const {
    return {sampling, background, weight_threshold};
  }
  void Validate() const;
};

// Adam first/second moments for one flat parameter family.
struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;
  long long steps = 0;
};

struct TrainState {
  FeatureGrid grid;
  DecoderMLP mlp;
  EntropyModel entropy;
  AdamMoments grid_moments;  // components concatenated in declared order
  AdamMoments mlp_moments;
  AdamMoments entropy_moments;
  int iteration = 0;
  Rng rng{0};
};

TrainState InitTrainState(const GridConfig& grid_config,
                          const TrainConfig& config);

// Training rays with their ground-truth colors.
struct RayDataset {
  std::vector<Ray> rays;
  std::vector<Vec3> colors;
  std::size_t size() const { return rays.size(); }
};

RayDataset BuildDataset(const SceneSpec& scene, std::span<const int> views);

// Sum of squares of every coefficient.
double RegLoss(std::span<const CoefficientTensor> coeffs);

struct LossBreakdown {
  double mse = 0.0;   // mean over rays of the squared RGB error sum
  double bits = 0.0;  // rate estimate; zero when rate terms are off
  double reg = 0.0;   // zero when rate terms are off
  double total = 0.0;
  // Hash of the decoder's ReLU sign pattern over the batch. Equal hashes at
  // two parameter values mean no kink was crossed between them.
  std::uint64_t activation_pattern = 0;
};

// Per-term gradients. Grid gradients are in the parameter domain.
struct LossGradients {
  GridGradient grid_mse;
  GridGradient grid_rate;  // of bits (unweighted)
  GridGradient grid_reg;   // of reg (unweighted)
  std::vector<double> mlp;      // of mse
  std::vector<double> entropy;  // of bits (unweighted)
};

// Everything stochastic in one loss evaluation, so it can be replayed.
struct LossSample {
  std::vector<int> rays;
  std::vector<std::uint64_t> jitter_seeds;  // one per ray
  std::vector<std::vector<double>> noise;   // one per component, may be empty
};

LossSample DrawLossSample(TrainState& state, const RayDataset& data,
                          const LossConfig& loss, const TrainConfig& config);

// Evaluates the loss at state.iteration. `grads` may be null.
LossBreakdown EvaluateLoss(const TrainState& state, const RayDataset& data,
                           const LossSample& sample, const LossConfig& loss,
                           const TrainConfig& config, LossGradients* grads);

// One Adam step on all families. Rate terms (and the entropy model) are
// updated only at or after the entropy start. Throws kNonFinite naming the
// offending term.
LossBreakdown TrainStep(TrainState& state, const RayDataset& data,
                        const LossConfig& loss, const TrainConfig& config);

struct GradCheckRow {
  std::string term;    // mse, rate, reg, total
  std::string family;  // grid, mlp, entropy
  int checked = 0;
  int skipped = 0;  // stencil crossed a ReLU kink
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckRow> rows;
  double MaxRelError() const;
};

// Central differences on `per_family` sampled parameters per family, with
// the loss sample frozen. Rate terms are forced on. For rendered terms,
// points whose stencil crosses a decoder ReLU kink are skipped and another
// parameter is drawn.
GradCheckReport GradientCheck(TrainState state, const RayDataset& data,
                              const LossConfig& loss, const TrainConfig& config,
                              int per_family, std::uint64_t seed,
                              double step = 1e-3);

// Test-view PSNR of a model against oracle images.
struct EvalResult {
  std::vector<int> views;
  std::vector<double> psnr;
  std::vector<double> mse;
  double mean_psnr = 0.0;
};

EvalResult EvaluateViews(const FeatureGrid& grid, const DecoderMLP& mlp,
                         const SceneSpec& scene, std::span<const int> views,
                         const std::vector<Image>& targets,
                         const RenderOptions& options);

struct TrainLogRow {
  int iteration = 0;
  double mse = 0.0;
  double bits = 0.0;
  double reg = 0.0;
  double psnr = -1.0;  // negative when not evaluated
  double seconds = 0.0;
};

std::string TrainLogHeader();
std::string TrainLogLine(const TrainLogRow& row);

}  // namespace dctrf

#endif  // DCTRF_TRAINER_HPP_
