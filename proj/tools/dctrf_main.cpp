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

// dctrf: train, compress, decompress, render and evaluate compressed
// tensorial radiance fields.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dctrf/checkpoint.hpp"
#include "dctrf/codec.hpp"
#include "dctrf/error.hpp"
#include "dctrf/image_io.hpp"
#include "dctrf/pipeline.hpp"
#include "dctrf/scenes.hpp"
#include "dctrf/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace dctrf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return kExitUsage;
    case ErrorCode::kBadMagic: return 3;
    case ErrorCode::kBadVersion: return 4;
    case ErrorCode::kChecksum: return 5;
    case ErrorCode::kTruncated: return 6;
    case ErrorCode::kCorrupt: return 7;
    default: return kExitRuntime;
  }
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

double ParseDouble(const std::string& s, const std::string& field) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kConfig, "bad number '" + s + "' for " + field);
}

// Flags shared by every command that builds a RunConfig.
struct RunFlags {
  std::optional<std::string> config_path;
  std::optional<std::string> scene;
  std::optional<std::uint64_t> seed;
  std::optional<int> iters;
  std::optional<double> lambda_e;
  std::optional<double> alpha;
  std::optional<int> batch;
  std::optional<int> samples;
  std::optional<std::string> resolution;
  std::optional<int> rank;
  std::optional<int> channels;
  std::optional<int> hidden;
  std::optional<std::string> plane_block;
  std::optional<std::string> line_block;
  std::optional<int> log_every;
  std::optional<int> eval_every;
  bool render_noise = false;

  void Register(CLI::App* app) {
    app->add_option("--config", config_path, "JSON run config");
    app->add_option("--scene", scene, "Scene preset or scene JSON file");
    app->add_option("--seed", seed, "Random seed");
    app->add_option("--iters", iters, "Training iterations");
    app->add_option("--lambda-e", lambda_e, "Rate weight");
    app->add_option("--alpha", alpha, "Regularization offset (lambda_r = alpha * lambda_e)");
    app->add_option("--batch", batch, "Rays per iteration");
    app->add_option("--samples", samples, "Samples per ray");
    app->add_option("--resolution", resolution, "N or I,J,K");
    app->add_option("--rank", rank, "Decomposition rank");
    app->add_option("--channels", channels, "Density and appearance channels");
    app->add_option("--hidden", hidden, "Decoder hidden width");
    app->add_option("--plane-block", plane_block, "Plane DCT block, e.g. 16x16x16");
    app->add_option("--line-block", line_block, "Line DCT block, e.g. 8x8");
    app->add_option("--log-every", log_every, "Log interval in iterations");
    app->add_option("--eval-every", eval_every, "Test PSNR interval (0: end only)");
    app->add_flag("--render-noise", render_noise,
                  "Render through noise-quantized coefficients during rate training");
  }

  RunConfig Build() const {
    RunConfig c;
    if (config_path) c = LoadRunConfig(*config_path, c);
    if (scene) c.scene = *scene;
    if (seed) c.seed = *seed;
    if (iters) c.loss.total_iters = *iters;
    if (lambda_e) c.loss.lambda_e = *lambda_e;
    if (alpha) c.loss.alpha = *alpha;
    if (batch) c.train.batch_size = *batch;
    if (samples) c.train.sampling.num_samples = *samples;
    if (resolution) {
      const auto parts = SplitList(*resolution);
      if (parts.size() != 1 && parts.size() != 3)
        throw Error(ErrorCode::kConfig, "--resolution takes N or I,J,K");
      for (int a = 0; a < 3; ++a)
        c.grid.resolution[a] = static_cast<int>(
            ParseDouble(parts[parts.size() == 1 ? 0 : a], "--resolution"));
    }
    if (rank) c.grid.rank = *rank;
    if (channels) c.grid.density_channels = c.grid.appearance_channels = *channels;
    if (hidden) c.train.hidden = *hidden;
    if (plane_block) c.grid.plane_block = ParseBlockDims(*plane_block);
    if (line_block) c.grid.line_block = ParseBlockDims(*line_block);
    if (log_every) c.log_every = *log_every;
    if (eval_every) c.eval_every = *eval_every;
    if (render_noise) c.loss.quantization_noise_in_render = true;
    c.train.seed = c.seed;
    return c;
  }
};

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

std::string EnsureDir(const std::string& dir) {
  const std::string resolved = ResolveOutputPath(dir);
  std::error_code ec;
  fs::create_directories(resolved, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + resolved);
  return resolved;
}

std::string ResolveFile(const std::string& path) {
  const std::string resolved = ResolveOutputPath(path);
  const fs::path parent = fs::path(resolved).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
  }
  return resolved;
}

// A model loaded from a checkpoint or a bitstream.
Model LoadModel(const std::string& path, bool quantize) {
  const auto bytes = ReadFileBytes(path);
  Model m;
  if (LooksLikeBitstream(bytes)) {
    DecodedModel d = Decode(bytes);
    m.grid = std::move(d.grid);
    m.mlp = std::move(d.mlp);
    return m;
  }
  m = ParseCheckpoint(bytes);
  if (quantize) m.grid = QuantizeGrid(m.grid);
  return m;
}

std::vector<int> SplitViews(const SceneSpec& scene, const std::string& split,
                            const std::vector<int>& explicit_views) {
  if (!explicit_views.empty()) return explicit_views;
  if (split == "test") return scene.TestIndices();
  if (split == "train") return scene.TrainIndices();
  if (split == "all") {
    std::vector<int> v(scene.cameras.count);
    for (int i = 0; i < scene.cameras.count; ++i) v[i] = i;
    return v;
  }
  throw Error(ErrorCode::kConfig, "--split must be test, train or all");
}

std::string EvalCsv(const EvalResult& r) {
  std::ostringstream os;
  os << "view,psnr_db,mse\n";
  char buf[128];
  for (std::size_t i = 0; i < r.views.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%d,%.4f,%.9g\n", r.views[i], r.psnr[i],
                  r.mse[i]);
    os << buf;
  }
  std::snprintf(buf, sizeof(buf), "mean,%.4f,\n", r.mean_psnr);
  os << buf;
  return os.str();
}

nlohmann::json SizeReportJson(const SizeReport& r) {
  return {{"total_bytes", r.total_bytes},
          {"header_bytes", r.header_bytes},
          {"table_bytes", r.table_bytes},
          {"mlp_bytes", r.mlp_bytes},
          {"payload_bytes", r.payload_bytes},
          {"raw_float_grid_bytes", r.raw_float_grid_bytes},
          {"raw_8bit_grid_bytes", r.raw_8bit_grid_bytes},
          {"raw_mlp_bytes", r.raw_mlp_bytes},
          {"stages",
           {{"raw_float32", r.raw_float_grid_bytes + r.raw_mlp_bytes},
            {"8bit_quantization", r.raw_8bit_grid_bytes + r.raw_mlp_bytes},
            {"entropy_coding", r.total_bytes}}},
          {"num_symbols", r.num_symbols},
          {"saturated", r.saturated},
          {"cross_entropy_bits", r.cross_entropy_bits}};
}

int CmdTrain(const RunFlags& flags, const std::optional<std::string>& out_dir) {
  RunConfig cfg = flags.Build();
  if (out_dir) cfg.output_dir = *out_dir;
  const SceneSpec scene = ResolveScene(cfg.scene);
  cfg.grid.bounds = scene.bounds;
  cfg.Validate();
  const std::string dir = EnsureDir(cfg.output_dir);
  WriteText(dir + "/run_config.json", RunConfigToJson(cfg) + "\n");

  std::ofstream log(dir + "/train_log.csv");
  if (!log) throw Error(ErrorCode::kIo, "cannot write " + dir + "/train_log.csv");
  log << TrainLogHeader() << '\n';
  const TrainOutcome out = RunTraining(cfg, scene, [&](const TrainLogRow& row) {
    log << TrainLogLine(row) << '\n';
    log.flush();
    std::fprintf(stderr, "iter %d  L_MSE %.3g  L_e %.4g bits  %.1fs\n",
                 row.iteration, row.mse, row.bits, row.seconds);
  });
  SaveCheckpoint(out.model, dir + "/model.ckpt");
  WriteText(dir + "/eval.csv", EvalCsv(out.test));
  std::printf("test PSNR %.3f dB (%zu views), %.1f s\n", out.test.mean_psnr,
              out.test.views.size(), out.seconds);
  std::printf("checkpoint %s/model.ckpt\n", dir.c_str());
  return kExitOk;
}

int CmdCompress(const std::string& input, std::optional<std::string> output,
                const std::optional<std::string>& report_path) {
  const Model m = ParseCheckpoint(ReadFileBytes(input));
  if (!m.entropy)
    throw Error(ErrorCode::kConfig,
                "checkpoint " + input + " carries no entropy model");
  const EncodeResult enc = Encode(m.grid, m.mlp, *m.entropy);
  const std::string out = ResolveFile(
      output.value_or(fs::path(input).replace_extension(".ecrf").string()));
  WriteFileBytes(out, enc.bytes);
  const std::string report = SizeReportJson(enc.report).dump(2);
  if (report_path) WriteText(ResolveFile(*report_path), report + "\n");
  std::printf("%s\n", report.c_str());
  if (enc.report.saturated > 0)
    std::fprintf(stderr, "warning: %zu coefficients saturated at +-%d\n",
                 enc.report.saturated, kSymbolLimit);
  return kExitOk;
}

int CmdDecompress(const std::string& input, std::optional<std::string> output) {
  const DecodedModel d = Decode(ReadFileBytes(input));
  Model m{d.grid, d.mlp, std::nullopt};
  const std::string out = ResolveFile(
      output.value_or(fs::path(input).replace_extension(".ckpt").string()));
  SaveCheckpoint(m, out);
  std::printf("wrote %s\n", out.c_str());
  return kExitOk;
}

RenderOptions EvalRenderOptions(int samples) {
  RenderOptions o;
  o.sampling.num_samples = samples;
  o.sampling.stratified = false;
  return o;
}

int CmdRender(const std::string& model_path, const std::string& scene_name,
              const std::string& split, const std::vector<int>& views,
              bool quantize, int samples, const std::string& out_dir) {
  const SceneSpec scene = ResolveScene(scene_name);
  const auto ids = SplitViews(scene, split, views);
  const std::string dir = EnsureDir(out_dir);
  const bool oracle = model_path == "oracle";
  Model m;
  if (!oracle) m = LoadModel(model_path, quantize);
  for (int v : ids) {
    const Camera cam = scene.CameraAt(v);
    const Image img = oracle ? OracleRender(scene, cam)
                             : RenderImage(m.grid, m.mlp, cam,
                                           EvalRenderOptions(samples));
    char name[64];
    std::snprintf(name, sizeof(name), "/view_%03d.png", v);
    WritePng(img, dir + name);
  }
  std::printf("rendered %zu views to %s\n", ids.size(), dir.c_str());
  return kExitOk;
}

int CmdEval(const std::string& model_path, const std::string& scene_name,
            const std::string& split, bool quantize, int samples,
            const std::optional<std::string>& output) {
  const SceneSpec scene = ResolveScene(scene_name);
  const auto ids = SplitViews(scene, split, {});
  const auto targets = OracleViews(scene, ids);
  EvalResult r;
  if (model_path == "oracle") {
    double sum = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const Image img = OracleRender(scene, scene.CameraAt(ids[i]));
      r.views.push_back(ids[i]);
      r.mse.push_back(MeanSquaredError(img, targets[i]));
      r.psnr.push_back(Psnr(img, targets[i]));
      sum += r.psnr.back();
    }
    r.mean_psnr = ids.empty() ? 0.0 : sum / ids.size();
  } else {
    const Model m = LoadModel(model_path, quantize);
    r = EvaluateViews(m.grid, m.mlp, scene, ids, targets,
                      EvalRenderOptions(samples));
  }
  const std::string csv = EvalCsv(r);
  if (output) {
    WriteText(ResolveFile(*output), csv);
  } else {
    std::printf("%s", csv.c_str());
  }
  std::fprintf(stderr, "mean PSNR %.4f dB\n", r.mean_psnr);
  return kExitOk;
}

int CmdSweep(const RunFlags& flags, const std::string& lambdas,
             const std::string& alphas, const std::string& blocks,
             const std::string& output) {
  const RunConfig base = flags.Build();
  const SceneSpec scene = ResolveScene(base.scene);
  std::vector<double> ls, as;
  for (const auto& s : SplitList(lambdas)) ls.push_back(ParseDouble(s, "--lambdas"));
  for (const auto& s : SplitList(alphas)) as.push_back(ParseDouble(s, "--alphas"));
  std::vector<BlockDims> bs;
  for (const auto& s : SplitList(blocks)) bs.push_back(ParseBlockDims(s));
  if (bs.empty()) bs.push_back(base.grid.plane_block);
  if (ls.empty() || as.empty())
    throw Error(ErrorCode::kConfig, "--lambdas and --alphas must be non-empty");

  const std::string out = ResolveFile(output);
  WriteText(fs::path(out).replace_extension(".run_config.json").string(),
            RunConfigToJson(base) + "\n");
  std::vector<SweepRow> rows;
  for (const BlockDims& b : bs) {
    for (double l : ls) {
      for (double a : as) {
        RunConfig cfg = base;
        cfg.grid.plane_block = b;
        cfg.loss.lambda_e = l;
        cfg.loss.alpha = a;
        std::fprintf(stderr, "sweep: lambda_e=%g alpha=%g block=%s\n", l, a,
                     b.ToString().c_str());
        rows.push_back(RunSweepCell(cfg, scene));
        std::fprintf(stderr, "  %s\n", SweepCsvLine(rows.back()).c_str());
      }
    }
  }
  SortSweepRows(rows);
  std::ostringstream os;
  os << SweepCsvHeader() << '\n';
  for (const auto& r : rows) os << SweepCsvLine(r) << '\n';
  WriteText(out, os.str());
  std::printf("%s", os.str().c_str());
  return kExitOk;
}

int CmdSceneGen(const std::string& preset, const std::optional<std::string>& out) {
  const std::string text = SceneToJson(ScenePreset(preset)) + "\n";
  if (out) {
    WriteText(ResolveFile(*out), text);
  } else {
    std::printf("%s", text.c_str());
  }
  return kExitOk;
}

int CmdGradCheck(const RunFlags& flags, int per_family, double step,
                 double tolerance) {
  // Small defaults so the check runs in seconds; flags override.
  RunFlags f = flags;
  if (!f.resolution) f.resolution = "8";
  if (!f.channels) f.channels = 4;
  if (!f.plane_block) f.plane_block = "4x4x4";
  if (!f.line_block) f.line_block = "4x4";
  if (!f.batch) f.batch = 4;
  if (!f.samples) f.samples = 32;
  if (!f.lambda_e) f.lambda_e = 1e-3;
  if (!f.alpha) f.alpha = 1.0;
  RunConfig cfg = f.Build();
  const SceneSpec scene = ResolveScene(cfg.scene);
  cfg.grid.bounds = scene.bounds;
  cfg.grid.init_scale = 1.0;
  cfg.train.density_bias = 0.0;
  cfg.Validate();
  const std::vector<int> views = {scene.TrainIndices().front()};
  const RayDataset data = BuildDataset(scene, views);
  const TrainState state = InitTrainState(cfg.grid, cfg.train);
  const GradCheckReport rep = GradientCheck(state, data, cfg.loss, cfg.train,
                                            per_family, cfg.seed + 1, step);
  std::printf("term,family,checked,skipped,max_rel_error,status\n");
  bool ok = true;
  for (const auto& r : rep.rows) {
    const bool pass = r.max_rel_error < tolerance;
    ok = ok && pass;
    std::printf("%s,%s,%d,%d,%.3e,%s\n", r.term.c_str(), r.family.c_str(),
                r.checked, r.skipped, r.max_rel_error, pass ? "pass" : "FAIL");
  }
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dctrf: entropy-coded tensorial radiance fields"};
  app.require_subcommand(1);

  RunFlags train_flags;
  std::optional<std::string> train_out;
  auto* train = app.add_subcommand("train", "Train a model on a scene");
  train_flags.Register(train);
  train->add_option("-o,--out", train_out, "Output directory");

  std::string compress_in;
  std::optional<std::string> compress_out, compress_report;
  auto* compress = app.add_subcommand("compress", "Checkpoint to bitstream");
  compress->add_option("checkpoint", compress_in)->required();
  compress->add_option("-o,--out", compress_out, "Bitstream path");
  compress->add_option("--report", compress_report, "Write the size report JSON");

  std::string decompress_in;
  std::optional<std::string> decompress_out;
  auto* decompress = app.add_subcommand("decompress", "Bitstream to checkpoint");
  decompress->add_option("bitstream", decompress_in)->required();
  decompress->add_option("-o,--out", decompress_out, "Checkpoint path");

  std::string render_model, render_scene = "blobs3", render_split = "test",
                            render_out = "renders";
  std::vector<int> render_views;
  bool render_quantize = false;
  int render_samples = 128;
  auto* render = app.add_subcommand("render", "Render views to PNG");
  render->add_option("model", render_model,
                     "Checkpoint, bitstream or 'oracle'")->required();
  render->add_option("--scene", render_scene, "Scene preset or file");
  render->add_option("--split", render_split, "test, train or all");
  render->add_option("--view", render_views, "Explicit view index (repeatable)");
  render->add_flag("--quantize", render_quantize,
                   "Quantize a checkpoint's grid as the codec would");
  render->add_option("--samples", render_samples, "Samples per ray");
  render->add_option("-o,--out", render_out, "Output directory");

  std::string eval_model, eval_scene = "blobs3", eval_split = "test";
  std::optional<std::string> eval_out;
  bool eval_quantize = false;
  int eval_samples = 128;
  auto* eval = app.add_subcommand("eval", "Per-view PSNR against the oracle");
  eval->add_option("model", eval_model,
                   "Checkpoint, bitstream or 'oracle'")->required();
  eval->add_option("--scene", eval_scene, "Scene preset or file");
  eval->add_option("--split", eval_split, "test, train or all");
  eval->add_flag("--quantize", eval_quantize,
                 "Quantize a checkpoint's grid as the codec would");
  eval->add_option("--samples", eval_samples, "Samples per ray");
  eval->add_option("-o,--out", eval_out, "CSV path (default stdout)");

  RunFlags sweep_flags;
  std::string sweep_lambdas, sweep_alphas = "1", sweep_blocks,
                             sweep_out = "rd_sweep.csv";
  auto* sweep = app.add_subcommand("rd-sweep", "Rate-distortion sweep");
  sweep_flags.Register(sweep);
  sweep->add_option("--lambdas", sweep_lambdas, "Comma-separated lambda_e values")
      ->required();
  sweep->add_option("--alphas", sweep_alphas, "Comma-separated alpha values");
  sweep->add_option("--blocks", sweep_blocks,
                    "Comma-separated plane block dims, e.g. 1x8x8,8x8x8");
  sweep->add_option("-o,--out", sweep_out, "CSV path");

  auto* scene = app.add_subcommand("scene", "Scene utilities");
  scene->require_subcommand(1);
  std::string gen_preset;
  std::optional<std::string> gen_out;
  auto* gen = scene->add_subcommand("gen", "Write a preset scene as JSON");
  gen->add_option("preset", gen_preset, "Preset name")->required();
  gen->add_option("-o,--out", gen_out, "Output path (default stdout)");
  auto* list = scene->add_subcommand("list", "List preset names");

  RunFlags grad_flags;
  int grad_per_family = 64;
  double grad_step = 1e-3, grad_tol = 1e-3;
  auto* grad = app.add_subcommand("gradcheck",
                                  "Analytic vs finite-difference gradients");
  grad_flags.Register(grad);
  grad->add_option("--per-family", grad_per_family, "Parameters per family");
  grad->add_option("--step", grad_step, "Finite-difference step");
  grad->add_option("--tolerance", grad_tol, "Max relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*train) return CmdTrain(train_flags, train_out);
    if (*compress) return CmdCompress(compress_in, compress_out, compress_report);
    if (*decompress) return CmdDecompress(decompress_in, decompress_out);
    if (*render)
      return CmdRender(render_model, render_scene, render_split, render_views,
                       render_quantize, render_samples, render_out);
    if (*eval)
      return CmdEval(eval_model, eval_scene, eval_split, eval_quantize,
                     eval_samples, eval_out);
    if (*sweep)
      return CmdSweep(sweep_flags, sweep_lambdas, sweep_alphas, sweep_blocks,
                      sweep_out);
    if (*gen) return CmdSceneGen(gen_preset, gen_out);
    if (*list) {
      for (const auto& n : ScenePresetNames()) std::printf("%s\n", n.c_str());
      return kExitOk;
    }
    if (*grad) return CmdGradCheck(grad_flags, grad_per_family, grad_step, grad_tol);
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", ErrorCodeName(e.code()), e.what());
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
