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

#include "dctrf/codec.hpp"
#include "dctrf/error.hpp"
#include "dctrf/scenes.hpp"
#include "dctrf/trainer.hpp"

namespace dctrf {
namespace {

GridConfig TinyGrid(int res = 8, int channels = 4) {
  GridConfig c;
  c.resolution = {res, res, res};
  c.density_channels = channels;
  c.appearance_channels = channels;
  c.plane_block = {4, 4, 4};
  c.line_block = {4, 4, 1};
  return c;
}

SceneSpec TinyScene(int size = 8) {
  SceneSpec s = ScenePreset("blobs3");
  s.cameras.width = size;
  s.cameras.height = size;
  s.cameras.focal = size;
  return s;
}

TrainConfig TinyTrain(int batch = 16) {
  TrainConfig t;
  t.batch_size = batch;
  t.sampling = {32, true};
  t.hidden = 16;
  t.seed = 3;
  return t;
}

struct Fixture {
  GridConfig grid = TinyGrid();
  SceneSpec scene = TinyScene();
  TrainConfig train = TinyTrain();
  RayDataset data;
  TrainState state;

  Fixture() {
    grid.bounds = scene.bounds;
    const auto views = scene.TrainIndices();
    data = BuildDataset(scene, std::span(views).first(2));
    state = InitTrainState(grid, train);
  }
};

TEST(LossConfig, ScheduleAndValidation) {
  LossConfig l;
  l.total_iters = 5000;
  EXPECT_EQ(l.EntropyStart(), 2667);
  EXPECT_FALSE(l.RateActive(2666));
  EXPECT_TRUE(l.RateActive(2667));
  l.lambda_e = 2e-10;
  l.alpha = 1.0;
  EXPECT_DOUBLE_EQ(l.lambda_r(), 2e-10);
  l.lambda_e = -1.0;
  EXPECT_THROW(l.Validate(), Error);
  l.lambda_e = 0.0;
  l.entropy_start_fraction = 1.0;
  EXPECT_THROW(l.Validate(), Error);
}

TEST(RegLoss, ZeroSingleEntryAndNaive) {
  GridConfig c = TinyGrid();
  c.init_scale = 0.0;
  FeatureGrid g = GridNew(c, 0);
  EXPECT_EQ(RegLoss(GridCoefficients(g)), 0.0);
  g.component(4).at(1, 2, 3) = 1.75f;
  EXPECT_NEAR(RegLoss(GridCoefficients(g)), 1.75 * 1.75, 1e-12);

  const FeatureGrid r = GridNew(TinyGrid(), 5);
  const auto coeffs = GridCoefficients(r);
  double naive = 0.0, params = 0.0;
  for (const auto& t : coeffs)
    for (double v : t.values.data) naive += v * v;
  for (const auto& comp : r.components)
    for (float v : comp.data) params += double(v) * v;
  EXPECT_NEAR(RegLoss(coeffs), naive, 1e-6 * naive);
  EXPECT_NEAR(RegLoss(coeffs), params, 1e-6 * params);  // Parseval
}

TEST(EvaluateLoss, DegenerateWeightsGivePlainMse) {
  Fixture s;
  LossConfig l;
  l.total_iters = 10;
  const auto sample = DrawLossSample(s.state, s.data, l, s.train);
  const auto lb = EvaluateLoss(s.state, s.data, sample, l, s.train, nullptr);
  EXPECT_EQ(lb.total, lb.mse);
  EXPECT_EQ(lb.bits, 0.0);
  EXPECT_GT(lb.mse, 0.0);
}

TEST(EvaluateLoss, BreakdownSumsToTotal) {
  Fixture s;
  LossConfig l;
  l.total_iters = 10;
  l.lambda_e = 1e-4;
  l.alpha = 3.0;
  s.state.iteration = l.EntropyStart();
  const auto sample = DrawLossSample(s.state, s.data, l, s.train);
  ASSERT_EQ(sample.noise.size(), std::size_t(kNumComponents));
  const auto lb = EvaluateLoss(s.state, s.data, sample, l, s.train, nullptr);
  EXPECT_GT(lb.bits, 0.0);
  EXPECT_GT(lb.reg, 0.0);
  const double sum = lb.mse + l.lambda_e * lb.bits + l.lambda_r() * lb.reg;
  EXPECT_NEAR(lb.total, sum, 1e-9 * std::fabs(sum));
  // Rate terms use the frozen estimate over the grid's coefficients.
  EXPECT_NEAR(lb.bits,
              BitEstimateFrozen(s.state.entropy, GridCoefficients(s.state.grid),
                                sample.noise, nullptr),
              1e-9 * lb.bits);
}

TEST(TrainStep, RateTermsAreInactiveBeforeStart) {
  Fixture s;
  LossConfig l;
  l.total_iters = 30;
  l.lambda_e = 1.0;
  l.alpha = 1.0;
  const auto before = s.state.entropy.params;
  for (int i = 0; i < l.EntropyStart(); ++i) {
    const auto lb = TrainStep(s.state, s.data, l, s.train);
    EXPECT_EQ(lb.bits, 0.0);
    EXPECT_EQ(lb.reg, 0.0);
    EXPECT_EQ(lb.total, lb.mse);
  }
  EXPECT_EQ(s.state.entropy.params, before);
  EXPECT_EQ(s.state.entropy_moments.steps, 0);
  TrainStep(s.state, s.data, l, s.train);
  EXPECT_NE(s.state.entropy.params, before);
}

TEST(TrainStep, ZeroLearningRatesLeaveParameters) {
  Fixture s;
  s.train.grid_opt.lr = 0.0;
  s.train.mlp_opt.lr = 0.0;
  s.train.entropy_opt.lr = 0.0;
  LossConfig l;
  l.total_iters = 4;
  l.lambda_e = 1e-3;
  const TrainState before = s.state;
  for (int i = 0; i < 4; ++i) TrainStep(s.state, s.data, l, s.train);
  EXPECT_EQ(s.state.iteration, 4);
  for (int c = 0; c < kNumComponents; ++c)
    EXPECT_EQ(s.state.grid.component(c).data, before.grid.component(c).data);
  EXPECT_EQ(s.state.mlp.params, before.mlp.params);
  EXPECT_EQ(s.state.entropy.params, before.entropy.params);
}

TEST(TrainStep, SmallStepOnOneRayDescends) {
  Fixture s;
  s.train.batch_size = 1;
  s.train.sampling.stratified = false;
  s.train.grid_opt.lr = 1e-4;
  s.train.mlp_opt.lr = 1e-4;
  // Start from visible density so the ray carries gradient.
  s.train.density_bias = 0.0;
  s.state = InitTrainState(s.grid, s.train);
  LossConfig l;
  l.total_iters = 100;
  TrainState probe = s.state;
  const auto sample = DrawLossSample(probe, s.data, l, s.train);
  const auto before = EvaluateLoss(s.state, s.data, sample, l, s.train, nullptr);
  TrainStep(s.state, s.data, l, s.train);
  --s.state.iteration;
  const auto after = EvaluateLoss(s.state, s.data, sample, l, s.train, nullptr);
  EXPECT_LT(after.mse, before.mse);
}

TEST(TrainStep, DeterministicGivenSeed) {
  Fixture a, b;
  LossConfig l;
  l.total_iters = 6;
  l.lambda_e = 1e-4;
  for (int i = 0; i < 6; ++i) {
    TrainStep(a.state, a.data, l, a.train);
    TrainStep(b.state, b.data, l, b.train);
  }
  for (int c = 0; c < kNumComponents; ++c)
    EXPECT_EQ(a.state.grid.component(c).data, b.state.grid.component(c).data);
  EXPECT_EQ(a.state.mlp.params, b.state.mlp.params);
  EXPECT_EQ(a.state.entropy.params, b.state.entropy.params);
  EXPECT_TRUE(a.state.rng == b.state.rng);
}

TEST(TrainStep, NonFiniteIsNamed) {
  Fixture s;
  s.state.grid.component(0).data[0] = std::nanf("");
  s.state.grid.component(6).data[0] = std::nanf("");
  LossConfig l;
  l.total_iters = 2;
  l.lambda_e = 1e-3;
  s.state.iteration = 1;
  try {
    for (int i = 0; i < 1; ++i) TrainStep(s.state, s.data, l, s.train);
    FAIL() << "expected a non-finite error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
    EXPECT_NE(std::string(e.what()).find("L_"), std::string::npos) << e.what();
  }
}

// With no rate terms the trainer is plain grid fitting: the mean of L_MSE
// over consecutive 100-iteration windows keeps falling for 500 iterations.
TEST(TrainStep, PlainFittingMseFallsPerWindow) {
  SceneSpec scene = TinyScene(32);
  GridConfig grid = TinyGrid(32, 8);
  grid.plane_block = {8, 8, 8};
  grid.line_block = {8, 8, 1};
  grid.bounds = scene.bounds;
  TrainConfig train;
  train.batch_size = 256;
  const auto views = scene.TrainIndices();
  const RayDataset data = BuildDataset(scene, views);
  TrainState state = InitTrainState(grid, train);
  LossConfig l;
  l.total_iters = 500;
  std::vector<double> window_means;
  double acc = 0.0;
  for (int it = 0; it < 500; ++it) {
    acc += TrainStep(state, data, l, train).mse;
    if ((it + 1) % 100 == 0) {
      window_means.push_back(acc / 100.0);
      acc = 0.0;
    }
  }
  for (std::size_t i = 1; i < window_means.size(); ++i)
    EXPECT_LT(window_means[i], window_means[i - 1]) << "window " << i;
}

TEST(GradientCheck, AllFamiliesAgree) {
  GridConfig grid = TinyGrid(8, 4);
  SceneSpec scene = TinyScene(8);
  grid.bounds = scene.bounds;
  grid.init_scale = 0.5;
  TrainConfig train = TinyTrain(4);
  train.density_bias = 0.0;
  train.entropy_init_scale = 1.0;
  const auto views = scene.TrainIndices();
  const RayDataset data = BuildDataset(scene, std::span(views).first(1));
  const TrainState state = InitTrainState(grid, train);
  LossConfig l;
  l.total_iters = 10;
  l.lambda_e = 1e-3;
  l.alpha = 1.0;
  for (bool render_noise : {false, true}) {
    l.quantization_noise_in_render = render_noise;
    const auto rep = GradientCheck(state, data, l, train, 16, 7);
    ASSERT_EQ(rep.rows.size(), 8u);
    for (const auto& row : rep.rows) {
      EXPECT_EQ(row.checked, 16) << row.term << "/" << row.family;
      EXPECT_LT(row.max_rel_error, 1e-3)
          << row.term << "/" << row.family << " noise " << render_noise;
    }
  }
}

TEST(TrainLog, CsvColumns) {
  EXPECT_EQ(TrainLogHeader(), "iteration,L_MSE,L_e_bits,L_r,psnr,seconds");
  TrainLogRow row;
  row.iteration = 7;
  row.mse = 0.5;
  const std::string line = TrainLogLine(row);
  EXPECT_EQ(line.rfind("7,0.5,0,0,,", 0), 0u) << line;
}

}  // namespace
}  // namespace dctrf
