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

#include "dctrf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "dctrf/codec.hpp"
#include "dctrf/error.hpp"

namespace dctrf {

namespace {

void AdamUpdate(const AdamConfig& opt, AdamMoments& mom, float* params,
                const double* grad, std::size_t offset, std::size_t n,
                double bc1, double bc2) {
  double* m = mom.m.data() + offset;
  double* v = mom.v.data() + offset;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g;
    v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g * g;
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    params[i] = static_cast<float>(params[i] -
                                   opt.lr * mhat / (std::sqrt(vhat) + opt.eps));
  }
}

void ResetMoments(AdamMoments& mom, std::size_t n) {
  mom.m.assign(n, 0.0);
  mom.v.assign(n, 0.0);
  mom.steps = 0;
}

// Grid with the inverse transform of per-coefficient noise added.
// Kept in double so that finite differences of the render are not rounded.
std::vector<Array3<double>> NoisyGrid(
    const FeatureGrid& grid, const std::vector<std::vector<double>>& noise) {
  std::vector<Array3<double>> out;
  out.reserve(kNumComponents);
  for (int c = 0; c < kNumComponents; ++c) {
    CoefficientTensor t;
    t.values = Array3<double>(grid.component(c).shape);
    t.values.data = noise[c];
    t.block = grid.config.ComponentBlock(c);
    t.source_component = c;
    Array3<double> values = DctInverse(t);
    const auto& src = grid.component(c).data;
    for (std::size_t i = 0; i < src.size(); ++i) values.data[i] += src[i];
    out.push_back(std::move(values));
  }
  return out;
}

bool RenderNoise(const LossConfig& loss, int iteration) {
  return loss.quantization_noise_in_render && loss.lambda_e > 0.0 &&
         loss.RateActive(iteration);
}

}  // namespace

int LossConfig::EntropyStart() const {
  return static_cast<int>(std::lround(total_iters * entropy_start_fraction));
}

void LossConfig::Validate() const {
  if (!(lambda_e >= 0.0)) throw Error(ErrorCode::kConfig, "lambda_e must be >= 0");
  if (!(alpha >= 0.0)) throw Error(ErrorCode::kConfig, "alpha must be >= 0");
  if (total_iters < 0)
    throw Error(ErrorCode::kConfig, "total_iters must be >= 0");
  if (!(entropy_start_fraction >= 0.0 && entropy_start_fraction < 1.0))
    throw Error(ErrorCode::kConfig,
                "entropy_start_fraction must be in [0, 1)");
}

void TrainConfig::Validate() const {
  if (batch_size < 1) throw Error(ErrorCode::kConfig, "batch_size must be >= 1");
  if (sampling.num_samples < 1)
    throw Error(ErrorCode::kConfig, "num_samples must be >= 1");
  if (!(weight_threshold >= 0.0))
    throw Error(ErrorCode::kConfig, "weight_threshold must be >= 0");
  for (const AdamConfig* o : {&grid_opt, &mlp_opt, &entropy_opt}) {
    if (!(o->lr >= 0.0)) throw Error(ErrorCode::kConfig, "learning rates must be >= 0");
    if (!(o->beta1 >= 0.0 && o->beta1 < 1.0 && o->beta2 >= 0.0 &&
          o->beta2 < 1.0))
      throw Error(ErrorCode::kConfig, "Adam betas must be in [0, 1)");
    if (!(o->eps > 0.0)) throw Error(ErrorCode::kConfig, "Adam eps must be > 0");
  }
  if (hidden < 1) throw Error(ErrorCode::kConfig, "hidden must be >= 1");
  if (!(entropy_init_scale > 0.0))
    throw Error(ErrorCode::kConfig, "entropy_init_scale must be > 0");
}

TrainState InitTrainState(const GridConfig& grid_config,
                          const TrainConfig& config) {
  config.Validate();
  TrainState s;
  Rng root(config.seed);
  s.grid = GridNew(grid_config, root.Fork(1).NextU64());
  s.mlp = DecoderMLP::Create(grid_config.appearance_channels,
                             config.view_dependent, root.Fork(2).NextU64(),
                             config.density_bias, config.hidden);
  s.entropy = EntropyModel::ForGrid(grid_config, config.entropy_init_scale);
  ResetMoments(s.grid_moments, grid_config.NumParameters());
  ResetMoments(s.mlp_moments, s.mlp.params.size());
  ResetMoments(s.entropy_moments, s.entropy.params.size());
  s.rng = root.Fork(3);
  return s;
}

RayDataset BuildDataset(const SceneSpec& scene, std::span<const int> views) {
  RayDataset d;
  for (int v : views) {
    const Camera cam = scene.CameraAt(v);
    for (int y = 0; y < cam.height; ++y) {
      for (int x = 0; x < cam.width; ++x) {
        const Ray ray = GenerateRay(cam, x, y);
        d.rays.push_back(ray);
        d.colors.push_back(OracleRenderRay(scene, ray));
      }
    }
  }
  return d;
}

double RegLoss(std::span<const CoefficientTensor> coeffs) {
  double s = 0.0;
  for (const auto& t : coeffs)
    for (double v : t.values.data) s += v * v;
  return s;
}

LossSample DrawLossSample(TrainState& state, const RayDataset& data,
                          const LossConfig& loss, const TrainConfig& config) {
  if (data.size() == 0) throw Error(ErrorCode::kContract, "empty ray dataset");
  LossSample s;
  s.rays.resize(config.batch_size);
  s.jitter_seeds.resize(config.batch_size);
  for (int i = 0; i < config.batch_size; ++i) {
    s.rays[i] = static_cast<int>(state.rng.Below(data.size()));
    s.jitter_seeds[i] = state.rng.NextU64();
  }
  if (loss.RateActive(state.iteration)) {
    for (int c = 0; c < kNumComponents; ++c) {
      std::vector<double> u(state.grid.component(c).data.size());
      for (double& v : u) v = state.rng.Uniform() - 0.5;
      s.noise.push_back(std::move(u));
    }
  }
  return s;
}

LossBreakdown EvaluateLoss(const TrainState& state, const RayDataset& data,
                           const LossSample& sample, const LossConfig& loss,
                           const TrainConfig& config, LossGradients* grads) {
  if (sample.rays.empty()) throw Error(ErrorCode::kContract, "empty batch");
  const bool rate_on = loss.RateActive(state.iteration);
  if (rate_on && sample.noise.size() != kNumComponents)
    throw Error(ErrorCode::kContract, "loss sample lacks a noise realization");

  if (grads) {
    grads->grid_mse = GridGradient::ZerosLike(state.grid);
    grads->grid_rate = GridGradient::ZerosLike(state.grid);
    grads->grid_reg = GridGradient::ZerosLike(state.grid);
    grads->mlp.assign(state.mlp.params.size(), 0.0);
    grads->entropy.assign(state.entropy.params.size(), 0.0);
  }

  LossBreakdown out;
  {
    std::vector<Array3<double>> noisy;
    const bool use_noise = RenderNoise(loss, state.iteration);
    if (use_noise) noisy = NoisyGrid(state.grid, sample.noise);
    RayRenderer renderer =
        use_noise ? RayRenderer(state.grid.config, noisy, state.mlp,
                                config.Render())
                  : RayRenderer(state.grid, state.mlp, config.Render());
    const double inv_b = 1.0 / static_cast<double>(sample.rays.size());
    for (std::size_t i = 0; i < sample.rays.size(); ++i) {
      const int r = sample.rays[i];
      Rng jitter(sample.jitter_seeds[i]);
      const Vec3 c = renderer.Render(
          data.rays[r], config.sampling.stratified ? &jitter : nullptr);
      const Vec3 diff = c - data.colors[r];
      out.mse += Dot(diff, diff) * inv_b;
      // The noise is additive in the parameter domain, so gradients with
      // respect to the noisy grid are gradients with respect to the grid.
      if (grads)
        renderer.Backward((2.0 * inv_b) * diff, grads->grid_mse, grads->mlp);
    }
    out.activation_pattern = renderer.ActivationPattern();
  }

  if (rate_on) {
    const auto coeffs = GridCoefficients(state.grid);
    RateGradient rg;
    out.bits = BitEstimateFrozen(state.entropy, coeffs, sample.noise,
                                 grads ? &rg : nullptr);
    out.reg = RegLoss(coeffs);
    if (grads) {
      for (int c = 0; c < kNumComponents; ++c) {
        CoefficientTensor t{std::move(rg.coeffs[c]), coeffs[c].block, c};
        grads->grid_rate.components[c] = DctInverse(t);
        const auto& g = state.grid.component(c).data;
        auto& dst = grads->grid_reg.components[c].data;
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] = 2.0 * g[i];
      }
      grads->entropy = std::move(rg.model);
    }
  }
  out.total = out.mse + loss.lambda_e * out.bits + loss.lambda_r() * out.reg;
  return out;
}

LossBreakdown TrainStep(TrainState& state, const RayDataset& data,
                        const LossConfig& loss, const TrainConfig& config) {
  const LossSample sample = DrawLossSample(state, data, loss, config);
  LossGradients g;
  const LossBreakdown lb = EvaluateLoss(state, data, sample, loss, config, &g);
  const auto check = [&](double v, const char* term) {
    if (!std::isfinite(v))
      throw Error(ErrorCode::kNonFinite,
                  std::string("non-finite ") + term + " at iteration " +
                      std::to_string(state.iteration));
  };
  check(lb.mse, "L_MSE");
  check(lb.bits, "L_e");
  check(lb.reg, "L_r");
  check(lb.total, "total loss");

  const bool rate_on = loss.RateActive(state.iteration);
  const double le = rate_on ? loss.lambda_e : 0.0;
  const double lr = rate_on ? loss.lambda_r() : 0.0;

  {
    AdamMoments& mom = state.grid_moments;
    ++mom.steps;
    const double bc1 = 1.0 - std::pow(config.grid_opt.beta1, mom.steps);
    const double bc2 = 1.0 - std::pow(config.grid_opt.beta2, mom.steps);
    std::size_t offset = 0;
    std::vector<double> buf;
    for (int c = 0; c < kNumComponents; ++c) {
      const auto& gm = g.grid_mse.components[c].data;
      const auto& gr = g.grid_rate.components[c].data;
      const auto& gq = g.grid_reg.components[c].data;
      buf.resize(gm.size());
      for (std::size_t i = 0; i < gm.size(); ++i)
        buf[i] = gm[i] + le * gr[i] + lr * gq[i];
      auto& p = state.grid.component(c).data;
      AdamUpdate(config.grid_opt, mom, p.data(), buf.data(), offset, p.size(),
                 bc1, bc2);
      offset += p.size();
    }
  }
  {
    AdamMoments& mom = state.mlp_moments;
    ++mom.steps;
    AdamUpdate(config.mlp_opt, mom, state.mlp.params.data(), g.mlp.data(), 0,
               g.mlp.size(), 1.0 - std::pow(config.mlp_opt.beta1, mom.steps),
               1.0 - std::pow(config.mlp_opt.beta2, mom.steps));
  }
  if (rate_on) {
    // The prior is fitted to the unweighted rate so it tracks the
    // coefficients for every lambda_e, including zero.
    AdamMoments& mom = state.entropy_moments;
    ++mom.steps;
    AdamUpdate(config.entropy_opt, mom, state.entropy.params.data(),
               g.entropy.data(), 0, g.entropy.size(),
               1.0 - std::pow(config.entropy_opt.beta1, mom.steps),
               1.0 - std::pow(config.entropy_opt.beta2, mom.steps));
  }
  if (!state.grid.AllFinite() || !state.mlp.AllFinite() ||
      !state.entropy.AllFinite())
    throw Error(ErrorCode::kNonFinite,
                "non-finite parameters after iteration " +
                    std::to_string(state.iteration));
  ++state.iteration;
  return lb;
}

double GradCheckReport::MaxRelError() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, r.max_rel_error);
  return m;
}

GradCheckReport GradientCheck(TrainState state, const RayDataset& data,
                              const LossConfig& loss, const TrainConfig& config,
                              int per_family, std::uint64_t seed, double step) {
  TrainConfig cfg = config;
  cfg.weight_threshold = 0.0;  // the skip rule is not differentiable
  state.iteration = std::max(state.iteration, loss.EntropyStart());
  const LossSample sample = DrawLossSample(state, data, loss, cfg);
  LossGradients g;
  EvaluateLoss(state, data, sample, loss, cfg, &g);

  enum Family { kGrid, kMlp, kEntropy };
  enum Term { kMse, kRate, kReg, kTotal };
  const char* family_names[] = {"grid", "mlp", "entropy"};
  const char* term_names[] = {"mse", "rate", "reg", "total"};

  // Parameter addressing: grid uses (component, index) flattened.
  std::vector<std::size_t> grid_offsets{0};
  for (const auto& comp : state.grid.components)
    grid_offsets.push_back(grid_offsets.back() + comp.data.size());
  auto param_ref = [&](Family f, std::size_t idx) -> float& {
    if (f == kMlp) return state.mlp.params[idx];
    if (f == kEntropy) return state.entropy.params[idx];
    const auto it =
        std::upper_bound(grid_offsets.begin(), grid_offsets.end(), idx) - 1;
    const int c = static_cast<int>(it - grid_offsets.begin());
    return state.grid.component(c).data[idx - *it];
  };
  auto analytic = [&](Family f, Term t, std::size_t idx) -> double {
    if (f == kMlp) return (t == kMse || t == kTotal) ? g.mlp[idx] : 0.0;
    if (f == kEntropy) {
      if (t == kRate) return g.entropy[idx];
      if (t == kTotal) return loss.lambda_e * g.entropy[idx];
      return 0.0;
    }
    const auto it =
        std::upper_bound(grid_offsets.begin(), grid_offsets.end(), idx) - 1;
    const int c = static_cast<int>(it - grid_offsets.begin());
    const std::size_t i = idx - *it;
    const double m = g.grid_mse.components[c].data[i];
    const double r = g.grid_rate.components[c].data[i];
    const double q = g.grid_reg.components[c].data[i];
    switch (t) {
      case kMse: return m;
      case kRate: return r;
      case kReg: return q;
      case kTotal: return m + loss.lambda_e * r + loss.lambda_r() * q;
    }
    return 0.0;
  };
  auto term_value = [](const LossBreakdown& lb, Term t) {
    switch (t) {
      case kMse: return lb.mse;
      case kRate: return lb.bits;
      case kReg: return lb.reg;
      case kTotal: return lb.total;
    }
    return 0.0;
  };
  const std::size_t family_size[] = {grid_offsets.back(),
                                     state.mlp.params.size(),
                                     state.entropy.params.size()};
  // ReLU kinks make the decoder the least smooth family.
  const double family_step[] = {step, 0.1 * step, step};
  const std::vector<Term> family_terms[] = {
      {kMse, kRate, kReg, kTotal}, {kMse, kTotal}, {kRate, kTotal}};

  Rng rng(seed);
  GradCheckReport report;
  for (int fi = 0; fi < 3; ++fi) {
    const Family f = static_cast<Family>(fi);
    for (Term t : family_terms[fi]) {
      // Sample among parameters the term actually touches.
      std::vector<std::size_t> candidates;
      double scale = 0.0;
      for (std::size_t i = 0; i < family_size[fi]; ++i) {
        const double a = analytic(f, t, i);
        if (a != 0.0) {
          candidates.push_back(i);
          scale = std::max(scale, std::fabs(a));
        }
      }
      GradCheckRow row{term_names[t], family_names[fi]};
      if (candidates.empty()) {
        report.rows.push_back(row);
        continue;
      }
      const double floor = std::max(1e-6 * scale, 1e-12);
      for (std::size_t k = 0;
           k < candidates.size() && row.checked < per_family; ++k) {
        const std::size_t j =
            static_cast<std::size_t>(rng.Below(candidates.size() - k)) + k;
        std::swap(candidates[k], candidates[j]);
        const std::size_t idx = candidates[k];
        float& p = param_ref(f, idx);
        const float orig = p;
        std::uint64_t base_pattern = 0;
        bool kink = false;
        const auto eval_at = [&](float v) {
          p = v;
          const LossBreakdown lb =
              EvaluateLoss(state, data, sample, loss, cfg, nullptr);
          p = orig;
          kink = kink || lb.activation_pattern != base_pattern;
          return term_value(lb, t);
        };
        base_pattern =
            EvaluateLoss(state, data, sample, loss, cfg, nullptr)
                .activation_pattern;
        const auto central = [&](double h) {
          const float hi = static_cast<float>(orig + h);
          const float lo = static_cast<float>(orig - h);
          const double lp = eval_at(hi), lm = eval_at(lo);
          return (lp - lm) / (double(hi) - double(lo));
        };
        const double d1 = central(family_step[fi]);
        const double d2 = central(0.5 * family_step[fi]);
        // A ReLU changed sign inside the stencil: the difference quotient
        // straddles a kink and says nothing about the derivative.
        if (kink && (t == kMse || t == kTotal)) {
          ++row.skipped;
          continue;
        }
        // Richardson extrapolation: O(h^4) truncation.
        const double numeric = (4.0 * d2 - d1) / 3.0;
        const double a = analytic(f, t, idx);
        const double err = std::fabs(a - numeric) /
                           std::max({std::fabs(a), std::fabs(numeric), floor});
        row.max_rel_error = std::max(row.max_rel_error, err);
        ++row.checked;
      }
      report.rows.push_back(row);
    }
  }
  return report;
}

EvalResult EvaluateViews(const FeatureGrid& grid, const DecoderMLP& mlp,
                         const SceneSpec& scene, std::span<const int> views,
                         const std::vector<Image>& targets,
                         const RenderOptions& options) {
  if (targets.size() != views.size())
    throw Error(ErrorCode::kContract, "one target image per view required");
  EvalResult r;
  double sum = 0.0;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const Image img = RenderImage(grid, mlp, scene.CameraAt(views[i]), options);
    r.views.push_back(views[i]);
    r.mse.push_back(MeanSquaredError(img, targets[i]));
    r.psnr.push_back(Psnr(img, targets[i]));
    sum += r.psnr.back();
  }
  r.mean_psnr = views.empty() ? 0.0 : sum / static_cast<double>(views.size());
  return r;
}

std::string TrainLogHeader() { return "iteration,L_MSE,L_e_bits,L_r,psnr,seconds"; }

std::string TrainLogLine(const TrainLogRow& row) {
  char buf[256];
  if (row.psnr >= 0.0) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.4f,%.3f", row.iteration,
                  row.mse, row.bits, row.reg, row.psnr, row.seconds);
  } else {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,,%.3f", row.iteration,
                  row.mse, row.bits, row.reg, row.seconds);
  }
  return buf;
}

}  // namespace dctrf
