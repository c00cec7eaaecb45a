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

#include "dctrf/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <tuple>

#include "dctrf/error.hpp"
#include "json.hpp"

namespace dctrf {

namespace {

using nlohmann::json;

template <typename T>
void Read(const json& j, const char* key, T& field, const std::string& path) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kConfig, "bad value for " + path + "." + key);
  }
}

void ReadBlock(const json& j, const char* key, BlockDims& block,
               const std::string& path) {
  if (!j.contains(key)) return;
  if (!j[key].is_string())
    throw Error(ErrorCode::kConfig, path + "." + key + " must be a string");
  block = ParseBlockDims(j[key].get<std::string>());
}

}  // namespace

void RunConfig::Validate() const {
  grid.Validate();
  loss.Validate();
  train.Validate();
  if (log_every < 0) throw Error(ErrorCode::kConfig, "log_every must be >= 0");
  if (eval_every < 0) throw Error(ErrorCode::kConfig, "eval_every must be >= 0");
}

RunConfig RunConfigFromJson(const std::string& text, const RunConfig& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("config JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "config must be an object");
  RunConfig c = base;
  Read(j, "scene", c.scene, "config");
  Read(j, "seed", c.seed, "config");
  Read(j, "output_dir", c.output_dir, "config");
  Read(j, "log_every", c.log_every, "config");
  Read(j, "eval_every", c.eval_every, "config");
  if (j.contains("grid")) {
    const json& g = j["grid"];
    if (g.contains("resolution")) {
      try {
        c.grid.resolution = g["resolution"].get<std::array<int, 3>>();
      } catch (const json::exception&) {
        throw Error(ErrorCode::kConfig,
                    "grid.resolution must be three integers");
      }
    }
    Read(g, "rank", c.grid.rank, "grid");
    Read(g, "density_channels", c.grid.density_channels, "grid");
    Read(g, "appearance_channels", c.grid.appearance_channels, "grid");
    Read(g, "init_scale", c.grid.init_scale, "grid");
    ReadBlock(g, "plane_block", c.grid.plane_block, "grid");
    ReadBlock(g, "line_block", c.grid.line_block, "grid");
  }
  if (j.contains("loss")) {
    const json& l = j["loss"];
    Read(l, "lambda_e", c.loss.lambda_e, "loss");
    Read(l, "alpha", c.loss.alpha, "loss");
    Read(l, "iterations", c.loss.total_iters, "loss");
    Read(l, "entropy_start_fraction", c.loss.entropy_start_fraction, "loss");
    Read(l, "quantization_noise_in_render",
         c.loss.quantization_noise_in_render, "loss");
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    Read(t, "batch_size", c.train.batch_size, "train");
    Read(t, "num_samples", c.train.sampling.num_samples, "train");
    Read(t, "stratified", c.train.sampling.stratified, "train");
    Read(t, "weight_threshold", c.train.weight_threshold, "train");
    Read(t, "lr_grid", c.train.grid_opt.lr, "train");
    Read(t, "lr_mlp", c.train.mlp_opt.lr, "train");
    Read(t, "lr_entropy", c.train.entropy_opt.lr, "train");
    double b1 = c.train.grid_opt.beta1, b2 = c.train.grid_opt.beta2,
           eps = c.train.grid_opt.eps;
    Read(t, "beta1", b1, "train");
    Read(t, "beta2", b2, "train");
    Read(t, "eps", eps, "train");
    for (AdamConfig* o :
         {&c.train.grid_opt, &c.train.mlp_opt, &c.train.entropy_opt}) {
      o->beta1 = b1;
      o->beta2 = b2;
      o->eps = eps;
    }
    Read(t, "view_dependent", c.train.view_dependent, "train");
    Read(t, "hidden", c.train.hidden, "train");
    Read(t, "density_bias", c.train.density_bias, "train");
    Read(t, "entropy_init_scale", c.train.entropy_init_scale, "train");
  }
  c.train.seed = c.seed;
  return c;
}

std::string RunConfigToJson(const RunConfig& c) {
  json j;
  j["scene"] = c.scene;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["log_every"] = c.log_every;
  j["eval_every"] = c.eval_every;
  j["grid"] = {{"resolution", c.grid.resolution},
               {"rank", c.grid.rank},
               {"density_channels", c.grid.density_channels},
               {"appearance_channels", c.grid.appearance_channels},
               {"init_scale", c.grid.init_scale},
               {"plane_block", c.grid.plane_block.ToString()},
               {"line_block", c.grid.line_block.ToString()}};
  j["loss"] = {{"lambda_e", c.loss.lambda_e},
               {"alpha", c.loss.alpha},
               {"iterations", c.loss.total_iters},
               {"entropy_start_fraction", c.loss.entropy_start_fraction},
               {"quantization_noise_in_render",
                c.loss.quantization_noise_in_render}};
  j["train"] = {{"batch_size", c.train.batch_size},
                {"num_samples", c.train.sampling.num_samples},
                {"stratified", c.train.sampling.stratified},
                {"weight_threshold", c.train.weight_threshold},
                {"lr_grid", c.train.grid_opt.lr},
                {"lr_mlp", c.train.mlp_opt.lr},
                {"lr_entropy", c.train.entropy_opt.lr},
                {"beta1", c.train.grid_opt.beta1},
                {"beta2", c.train.grid_opt.beta2},
                {"eps", c.train.grid_opt.eps},
                {"view_dependent", c.train.view_dependent},
                {"hidden", c.train.hidden},
                {"density_bias", c.train.density_bias},
                {"entropy_init_scale", c.train.entropy_init_scale}};
  return j.dump(2);
}

RunConfig LoadRunConfig(const std::string& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return RunConfigFromJson(ss.str(), base);
}

std::string ResolveOutputPath(const std::string& path) {
  const char* root = std::getenv("DCTRF_OUTPUT_ROOT");
  const std::filesystem::path p(path);
  if (root == nullptr || *root == '\0' || p.is_absolute()) return path;
  return (std::filesystem::path(root) / p).string();
}

std::vector<Image> OracleViews(const SceneSpec& scene,
                               std::span<const int> views) {
  std::vector<Image> out;
  for (int v : views) out.push_back(OracleRender(scene, scene.CameraAt(v)));
  return out;
}

TrainOutcome RunTraining(const RunConfig& config, const SceneSpec& scene,
                         const LogSink& sink) {
  RunConfig cfg = config;
  cfg.grid.bounds = scene.bounds;
  cfg.train.seed = cfg.seed;
  cfg.Validate();
  scene.Validate();

  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  const auto train_views = scene.TrainIndices();
  const auto test_views = scene.TestIndices();
  const RayDataset data = BuildDataset(scene, train_views);
  const std::vector<Image> targets = OracleViews(scene, test_views);
  RenderOptions eval_options = cfg.train.Render();
  eval_options.sampling.stratified = false;

  TrainState state = InitTrainState(cfg.grid, cfg.train);
  TrainOutcome out;
  // Sums over the logging window.
  TrainLogRow acc;
  int window = 0;
  for (int it = 0; it < cfg.loss.total_iters; ++it) {
    const LossBreakdown lb = TrainStep(state, data, cfg.loss, cfg.train);
    acc.mse += lb.mse;
    acc.bits += lb.bits;
    acc.reg += lb.reg;
    ++window;
    const bool last = it + 1 == cfg.loss.total_iters;
    const bool eval = cfg.eval_every > 0 && (it + 1) % cfg.eval_every == 0;
    if ((cfg.log_every > 0 && (it + 1) % cfg.log_every == 0) || last || eval) {
      TrainLogRow row;
      row.iteration = it + 1;
      row.mse = acc.mse / window;
      row.bits = acc.bits / window;
      row.reg = acc.reg / window;
      if (eval && !last)
        row.psnr = EvaluateViews(state.grid, state.mlp, scene, test_views,
                                 targets, eval_options)
                       .mean_psnr;
      row.seconds = elapsed();
      acc = {};
      window = 0;
      if (!last) {
        out.log.push_back(row);
        if (sink) sink(row);
      } else {
        out.test = EvaluateViews(state.grid, state.mlp, scene, test_views,
                                 targets, eval_options);
        row.psnr = out.test.mean_psnr;
        row.seconds = elapsed();
        out.log.push_back(row);
        if (sink) sink(row);
      }
    }
  }
  if (cfg.loss.total_iters == 0)
    out.test = EvaluateViews(state.grid, state.mlp, scene, test_views, targets,
                             eval_options);
  out.model.grid = std::move(state.grid);
  out.model.mlp = std::move(state.mlp);
  out.model.entropy = std::move(state.entropy);
  out.seconds = elapsed();
  return out;
}

std::string SweepCsvHeader() {
  return "lambda_e,alpha,block,size_bytes,psnr_db,L_e_bits,saturated,status";
}

std::string SweepCsvLine(const SweepRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%.6g,%.6g,%s,%zu,%.4f,%.1f,%zu,%s",
                r.lambda_e, r.alpha, r.block.c_str(), r.size_bytes, r.psnr,
                r.bits, r.saturated, r.status.c_str());
  return buf;
}

SweepRow RunSweepCell(const RunConfig& config, const SceneSpec& scene) {
  SweepRow row;
  row.lambda_e = config.loss.lambda_e;
  row.alpha = config.loss.alpha;
  row.block = config.grid.plane_block.ToString();
  try {
    const TrainOutcome t = RunTraining(config, scene);
    const EncodeResult enc =
        Encode(t.model.grid, t.model.mlp, *t.model.entropy);
    const DecodedModel dec = Decode(enc.bytes);
    RenderOptions opts = config.train.Render();
    opts.sampling.stratified = false;
    const auto views = scene.TestIndices();
    row.psnr = EvaluateViews(dec.grid, dec.mlp, scene, views,
                             OracleViews(scene, views), opts)
                   .mean_psnr;
    row.size_bytes = enc.report.total_bytes;
    row.saturated = enc.report.saturated;
    QuantSurrogate eval{QuantMode::kEval, Rng(0)};
    row.bits = BitEstimate(*t.model.entropy, GridCoefficients(t.model.grid),
                           eval);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    row.status = "error: " + msg;
  }
  return row;
}

void SortSweepRows(std::vector<SweepRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const SweepRow& a, const SweepRow& b) {
                     return std::tie(a.lambda_e, a.alpha, a.block) <
                            std::tie(b.lambda_e, b.alpha, b.block);
                   });
}

}  // namespace dctrf
