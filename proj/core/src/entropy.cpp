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

#include "dctrf/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dctrf/error.hpp"

namespace dctrf {

namespace {

constexpr int kS = EntropyModel::kStages;

// Network parameters after the positivity/gating reparameterization.
struct CdfNet {
  double slope[kS];
  double bias[kS];
  double gate[kS - 1];    // tanh(a)
  double dslope[kS];      // d softplus(w) / dw = sigmoid(w)
  double dgate[kS - 1];   // 1 - tanh(a)^2

  explicit CdfNet(const float* p) {
    for (int s = 0; s < kS; ++s) {
      slope[s] = Softplus(p[s]);
      dslope[s] = Sigmoid(p[s]);
      bias[s] = p[kS + s];
    }
    for (int s = 0; s < kS - 1; ++s) {
      gate[s] = std::tanh(p[2 * kS + s]);
      dgate[s] = 1.0 - gate[s] * gate[s];
    }
  }

  double Logit(double x) const {
    for (int s = 0; s < kS; ++s) {
      x = x * slope[s] + bias[s];
      if (s < kS - 1) x += gate[s] * std::tanh(x);
    }
    return x;
  }

  double Forward(double x, double* in, double* tn) const {
    for (int s = 0; s < kS; ++s) {
      in[s] = x;
      x = x * slope[s] + bias[s];
      if (s < kS - 1) {
        tn[s] = std::tanh(x);
        x += gate[s] * tn[s];
      }
    }
    return x;
  }

  // Returns upstream * dlogit/dx given the intermediates of Forward.
  double Backward(double g, const double* in, const double* tn,
                  double* dparams) const {
    for (int s = kS - 1; s >= 0; --s) {
      if (s < kS - 1) {
        if (dparams) dparams[2 * kS + s] += g * tn[s] * dgate[s];
        g *= 1.0 + gate[s] * (1.0 - tn[s] * tn[s]);
      }
      if (dparams) {
        dparams[s] += g * in[s] * dslope[s];
        dparams[kS + s] += g;
      }
      g *= slope[s];
    }
    return g;
  }
};

// sigmoid(h), sigmoid(-h) and the derivative from a single exp.
struct LogisticPair {
  double pos, neg, deriv;
  explicit LogisticPair(double h) {
    const double e = std::exp(-std::fabs(h));
    const double big = 1.0 / (1.0 + e);
    const double small = e * big;
    pos = h >= 0.0 ? big : small;
    neg = h >= 0.0 ? small : big;
    deriv = big * small;
  }
};

// pmf with the sign trick for accurate upper tails.
double PmfFromLogits(double lower, double upper) {
  const double sign = (lower + upper) > 0.0 ? -1.0 : 1.0;
  return std::fabs(Sigmoid(sign * upper) - Sigmoid(sign * lower));
}

void CheckCoverage(const EntropyModel& model,
                   std::span<const CoefficientTensor> coeffs) {
  for (const auto& t : coeffs) {
    const int comp = t.source_component;
    if (comp < 0 ||
        comp >= static_cast<int>(model.channels_per_component.size()) ||
        model.channels_per_component[comp] != t.values.shape.channels) {
      throw Error(ErrorCode::kContract,
                  "entropy model channels do not cover coefficient tensor of "
                  "component " + std::to_string(comp));
    }
  }
}

}  // namespace

EntropyModel EntropyModel::Create(std::span<const int> channels_per_component,
                                  double init_scale) {
  if (!(init_scale > 0.0))
    throw Error(ErrorCode::kConfig, "entropy init_scale must be > 0");
  EntropyModel m;
  m.channels_per_component.assign(channels_per_component.begin(),
                                  channels_per_component.end());
  int total = 0;
  for (int ch : m.channels_per_component) {
    if (ch < 1) throw Error(ErrorCode::kConfig, "channel count must be >= 1");
    m.network_offset.push_back(total);
    total += ch;
  }
  const float w = static_cast<float>(
      SoftplusInverse(std::pow(init_scale, -1.0 / kStages)));
  m.params.assign(static_cast<std::size_t>(total) * kParamsPerNetwork, 0.0f);
  for (int n = 0; n < total; ++n)
    for (int s = 0; s < kStages; ++s) m.params[n * kParamsPerNetwork + s] = w;
  return m;
}

EntropyModel EntropyModel::ForGrid(const GridConfig& config,
                                   double init_scale) {
  std::vector<int> channels;
  for (int c = 0; c < kNumComponents; ++c)
    channels.push_back(config.ComponentShape(c).channels);
  return Create(channels, init_scale);
}

int EntropyModel::Network(int component, int channel) const {
  if (component < 0 ||
      component >= static_cast<int>(channels_per_component.size()) ||
      channel < 0 || channel >= channels_per_component[component]) {
    throw Error(ErrorCode::kContract,
                "no entropy network for component " +
                    std::to_string(component) + " channel " +
                    std::to_string(channel));
  }
  return network_offset[component] + channel;
}

bool EntropyModel::AllFinite() const {
  return std::all_of(params.begin(), params.end(),
                     [](float v) { return std::isfinite(v); });
}

double CdfLogit(const EntropyModel& model, int network, double x) {
  return CdfNet(&model.params[network * EntropyModel::kParamsPerNetwork])
      .Logit(x);
}

double CdfEval(const EntropyModel& model, int network, double x) {
  return Sigmoid(CdfLogit(model, network, x));
}

std::vector<double> NoiseQuantize(std::span<const double> x,
                                  QuantSurrogate& surrogate) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = surrogate.mode == QuantMode::kTrain
                 ? x[i] + (surrogate.rng.Uniform() - 0.5)
                 : RoundHalfAway(x[i]);
  }
  return out;
}

double PmfDiscrete(const EntropyModel& model, int network, double y) {
  const CdfNet net(&model.params[network * EntropyModel::kParamsPerNetwork]);
  return std::max(PmfFromLogits(net.Logit(y - 0.5), net.Logit(y + 0.5)),
                  kPmfFloor);
}

std::vector<double> PmfTable(const EntropyModel& model, int network, int k_min,
                             int k_max) {
  if (k_max < k_min) throw Error(ErrorCode::kContract, "empty pmf support");
  const CdfNet net(&model.params[network * EntropyModel::kParamsPerNetwork]);
  const int n = k_max - k_min + 1;
  std::vector<double> logits(n + 1);
  for (int i = 0; i <= n; ++i) logits[i] = net.Logit(k_min + i - 0.5);
  std::vector<double> pmf(n);
  for (int i = 0; i < n; ++i) pmf[i] = PmfFromLogits(logits[i], logits[i + 1]);
  // Tails: P(x < k_min - 1/2) and P(x > k_max + 1/2).
  pmf.front() += Sigmoid(logits.front());
  pmf.back() += Sigmoid(-logits.back());
  return pmf;
}

std::vector<std::vector<double>> DrawNoise(
    std::span<const CoefficientTensor> coeffs, Rng& rng) {
  std::vector<std::vector<double>> noise;
  noise.reserve(coeffs.size());
  for (const auto& t : coeffs) {
    std::vector<double> u(t.values.data.size());
    for (double& v : u) v = rng.Uniform() - 0.5;
    noise.push_back(std::move(u));
  }
  return noise;
}

double BitEstimateFrozen(const EntropyModel& model,
                         std::span<const CoefficientTensor> coeffs,
                         std::span<const std::vector<double>> noise,
                         RateGradient* grad) {
  CheckCoverage(model, coeffs);
  if (noise.size() != coeffs.size())
    throw Error(ErrorCode::kContract, "one noise vector per tensor required");

  const int nets = model.NumNetworks();
  std::vector<CdfNet> cache;
  cache.reserve(nets);
  for (int n = 0; n < nets; ++n)
    cache.emplace_back(&model.params[n * EntropyModel::kParamsPerNetwork]);

  if (grad) {
    grad->coeffs.clear();
    for (const auto& t : coeffs) grad->coeffs.emplace_back(t.values.shape, 0.0);
    grad->model.assign(model.params.size(), 0.0);
  }
  const double inv_ln2 = 1.0 / std::numbers::ln2;
  double bits = 0.0;
  for (std::size_t ti = 0; ti < coeffs.size(); ++ti) {
    const auto& t = coeffs[ti];
    const auto& u = noise[ti];
    if (u.size() != t.values.data.size())
      throw Error(ErrorCode::kContract, "noise size mismatch");
    const int channels = t.values.shape.channels;
    const int first = model.network_offset[t.source_component];
    for (std::size_t i = 0; i < t.values.data.size(); ++i) {
      const int net_id = first + static_cast<int>(i % channels);
      const CdfNet& net = cache[net_id];
      const double y = t.values.data[i] + u[i];
      if (!grad) {
        const double p = std::max(
            PmfFromLogits(net.Logit(y - 0.5), net.Logit(y + 0.5)), kPmfFloor);
        bits -= std::log2(p);
        continue;
      }
      double in_l[kS], tn_l[kS - 1], in_u[kS], tn_u[kS - 1];
      const double hl = net.Forward(y - 0.5, in_l, tn_l);
      const double hu = net.Forward(y + 0.5, in_u, tn_u);
      const LogisticPair sl(hl), su(hu);
      // Sign trick: difference of the smaller-tail sigmoids.
      const double p = (hl + hu) > 0.0 ? sl.neg - su.neg : su.pos - sl.pos;
      if (!(p >= kPmfFloor)) {
        bits -= std::log2(kPmfFloor);
        continue;
      }
      bits -= std::log2(p);
      // bits = -log2(sigmoid(hu) - sigmoid(hl)).
      const double dbits_dp = -inv_ln2 / p;
      const double dhu = dbits_dp * su.deriv;
      const double dhl = -dbits_dp * sl.deriv;
      double* dparams =
          &grad->model[static_cast<std::size_t>(net_id) *
                       EntropyModel::kParamsPerNetwork];
      grad->coeffs[ti].data[i] = net.Backward(dhu, in_u, tn_u, dparams) +
                                 net.Backward(dhl, in_l, tn_l, dparams);
    }
  }
  return bits;
}

double BitEstimate(const EntropyModel& model,
                   std::span<const CoefficientTensor> coeffs,
                   QuantSurrogate& surrogate) {
  if (surrogate.mode == QuantMode::kTrain) {
    const auto noise = DrawNoise(coeffs, surrogate.rng);
    return BitEstimateFrozen(model, coeffs, noise, nullptr);
  }
  CheckCoverage(model, coeffs);
  double bits = 0.0;
  for (const auto& t : coeffs) {
    const int channels = t.values.shape.channels;
    const int first = model.network_offset[t.source_component];
    for (std::size_t i = 0; i < t.values.data.size(); ++i) {
      const int net_id = first + static_cast<int>(i % channels);
      bits -= std::log2(PmfDiscrete(model, net_id, RoundHalfAway(t.values.data[i])));
    }
  }
  return bits;
}

FrequencyTable FreezeTable(const EntropyModel& model, int network, int k_min,
                           int k_max) {
  const long long n = static_cast<long long>(k_max) - k_min + 1;
  if (n > static_cast<long long>(kFrequencyTotal)) {
    throw Error(ErrorCode::kConfig,
                "support [" + std::to_string(k_min) + ", " +
                    std::to_string(k_max) + "] is too wide for 2^16 precision");
  }
  return QuantizeFrequencies(PmfTable(model, network, k_min, k_max), k_min);
}

}  // namespace dctrf
