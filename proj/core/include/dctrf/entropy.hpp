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

#ifndef DCTRF_ENTROPY_HPP_
#define DCTRF_ENTROPY_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "dctrf/grid.hpp"
#include "dctrf/math.hpp"
#include "dctrf/range_coder.hpp"
#include "dctrf/transform.hpp"

namespace dctrf {

inline constexpr double kPmfFloor = 1e-9;

// Factorized prior: one monotone CDF network per (component, channel).
//
// Each network is a chain of kStages scalar maps
//   x <- x * softplus(w_s) + b_s
//   x <- x + tanh(a_s) * tanh(x)        (all but the last stage)
// whose output is a logit; the CDF is its sigmoid. Both maps have positive
// slope, so the CDF is non-decreasing by construction.
struct EntropyModel {
  static constexpr int kStages = 4;
  // Per-network parameter layout: w[0..3], b[0..3], a[0..2].
  static constexpr int kParamsPerNetwork = 3 * kStages - 1;

  std::vector<int> channels_per_component;
  std::vector<int> network_offset;  // first network of each component
  std::vector<float> params;

  // Every stage starts with slope init_scale^(-1/kStages) and zero bias, so
  // the initial CDF is sigmoid(x / init_scale).
  static EntropyModel Create(std::span<const int> channels_per_component,
                             double init_scale = 10.0);
  static EntropyModel ForGrid(const GridConfig& config,
                              double init_scale = 10.0);

  int NumNetworks() const {
    return static_cast<int>(params.size()) / kParamsPerNetwork;
  }
  // Throws kContract for an unknown (component, channel) pair.
  int Network(int component, int channel) const;
  bool AllFinite() const;
};

// Logit of the CDF at x.
double CdfLogit(const EntropyModel& model, int network, double x);
// P_c(x) in [0, 1].
double CdfEval(const EntropyModel& model, int network, double x);

enum class QuantMode { kTrain, kEval };

// Train mode adds U(-1/2, 1/2) noise drawn from `rng`; eval mode rounds half
// away from zero.
struct QuantSurrogate {
  QuantMode mode = QuantMode::kTrain;
  Rng rng{0};
};

std::vector<double> NoiseQuantize(std::span<const double> x,
                                  QuantSurrogate& surrogate);

inline double RoundHalfAway(double x) { return std::round(x); }

// P(y) = P_c(y + 1/2) - P_c(y - 1/2), floored at kPmfFloor.
double PmfDiscrete(const EntropyModel& model, int network, double y);

// Probabilities of k_min..k_max with the two tails folded into the end
// symbols, so the vector sums to one.
std::vector<double> PmfTable(const EntropyModel& model, int network, int k_min,
                             int k_max);

// -sum log2 pmf(Phi(coeff)) over all coefficients of all tensors. Each
// tensor's source_component selects the networks.
double BitEstimate(const EntropyModel& model,
                   std::span<const CoefficientTensor> coeffs,
                   QuantSurrogate& surrogate);

// Gradients of the bit estimate; layout mirrors the inputs.
struct RateGradient {
  std::vector<Array3<double>> coeffs;
  std::vector<double> model;  // same layout as EntropyModel::params
};

// Train-mode estimate with an explicit noise realization (noise[t] has one
// entry per coefficient of coeffs[t]). Fills `grad` when non-null; the noise
// is treated as a constant, so d/dcoeff = d/d(noisy value).
double BitEstimateFrozen(const EntropyModel& model,
                         std::span<const CoefficientTensor> coeffs,
                         std::span<const std::vector<double>> noise,
                         RateGradient* grad);

// Draws one noise realization per coefficient.
std::vector<std::vector<double>> DrawNoise(
    std::span<const CoefficientTensor> coeffs, Rng& rng);

// Integer coding table for one network over [k_min, k_max].
FrequencyTable FreezeTable(const EntropyModel& model, int network, int k_min,
                           int k_max);

}  // namespace dctrf

#endif  // DCTRF_ENTROPY_HPP_
