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

#ifndef DCTRF_PIPELINE_HPP_
#define DCTRF_PIPELINE_HPP_

#include <functional>
#include <string>
#include <vector>

#include "dctrf/checkpoint.hpp"
#include "dctrf/codec.hpp"
#include "dctrf/grid.hpp"
#include "dctrf/scenes.hpp"
#include "dctrf/trainer.hpp"

namespace dctrf {

struct RunConfig {
  std::string scene = "blobs3";  // preset name or scene file
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  GridConfig grid;
  LossConfig loss;
  TrainConfig train;
  int log_every = 100;
  int eval_every = 0;  // 0: evaluate only at the end

  // Cross-field checks; grid bounds are taken from the scene.
  void Validate() const;
};

// JSON with the same nesting as the struct; missing keys keep `base`.
RunConfig RunConfigFromJson(const std::string& text,
                            const RunConfig& base = {});
std::string RunConfigToJson(const RunConfig& config);
RunConfig LoadRunConfig(const std::string& path, const RunConfig& base = {});

// Joins `path` onto $DCTRF_OUTPUT_ROOT when set and `path` is relative.
std::string ResolveOutputPath(const std::string& path);

struct TrainOutcome {
  Model model;
  std::vector<TrainLogRow> log;
  EvalResult test;
  double seconds = 0.0;
};

using LogSink = std::function<void(const TrainLogRow&)>;

// Trains from scratch on the scene's training views and evaluates the test
// views at the end.
TrainOutcome RunTraining(const RunConfig& config, const SceneSpec& scene,
                         const LogSink& sink = nullptr);

std::vector<Image> OracleViews(const SceneSpec& scene,
                               std::span<const int> views);

struct SweepRow {
  double lambda_e = 0.0;
  double alpha = 0.0;
  std::string block;  // plane block dims
  std::size_t size_bytes = 0;
  double psnr = 0.0;     // decoded model, test views
  double bits = 0.0;     // eval-mode rate estimate of the final grid
  std::size_t saturated = 0;
  std::string status = "ok";
};

std::string SweepCsvHeader();
std::string SweepCsvLine(const SweepRow& row);

// Train, compress, decompress and evaluate one configuration. Errors are
// captured in the row's status.
SweepRow RunSweepCell(const RunConfig& config, const SceneSpec& scene);

// Sorted by lambda_e, then alpha, then block.
void SortSweepRows(std::vector<SweepRow>& rows);

}  // namespace dctrf

#endif  // DCTRF_PIPELINE_HPP_
