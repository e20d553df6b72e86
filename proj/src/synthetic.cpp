// Copyright 2026 The gradcomp Authors. All Rights Reserved.
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
// =============================================================================

#include "gradcomp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gradcomp/kernels.hpp"
#include "gradcomp/random.hpp"

namespace gradcomp {
namespace {

constexpr double kMaxActivation = 0.9;
constexpr double kPowerLaw = 0.7;

std::vector<double> activation_probabilities(const SyntheticSpec& spec) {
  std::vector<double> p(spec.dim);
  for (std::size_t j = 0; j < spec.dim; ++j) {
    p[j] = std::pow(static_cast<double>(j + 1), -kPowerLaw);
  }
  // Rescale to the requested mean row density; capped entries are frozen.
  for (int pass = 0; pass < 50; ++pass) {
    double free_sum = 0.0, capped = 0.0;
    for (double v : p) (v >= kMaxActivation ? capped : free_sum) += v;
    if (free_sum <= 0.0) break;
    const double scale = (spec.mean_active - capped) / free_sum;
    for (double& v : p) {
      if (v < kMaxActivation) v = std::min(kMaxActivation, v * scale);
    }
  }
  return p;
}

}  // namespace

SyntheticSpec w8a_like_spec() { return SyntheticSpec{}; }

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.samples == 0 || spec.dim == 0) throw std::invalid_argument("empty synthetic spec");
  if (spec.mean_active <= 0.0 || spec.mean_active > kMaxActivation * spec.dim) {
    throw std::invalid_argument("mean_active out of range");
  }
  if (!(spec.feature_value > 0.0)) throw std::invalid_argument("feature_value must be positive");
  if (spec.positive_rate <= 0.0 || spec.positive_rate >= 1.0) {
    throw std::invalid_argument("positive_rate must lie in (0, 1)");
  }
  const std::uint32_t tag = static_cast<std::uint32_t>(StreamTag::kDataset);
  const CounterStream perm_rng(spec.seed, 0, 0, tag);
  const CounterStream weight_rng(spec.seed, 1, 0, tag);
  const CounterStream feature_rng(spec.seed, 2, 0, tag);
  const CounterStream label_rng(spec.seed, 3, 0, tag);

  // Shuffle which feature gets which popularity rank.
  std::vector<std::size_t> order(spec.dim);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> keys(spec.dim);
  for (std::size_t j = 0; j < spec.dim; ++j) keys[j] = perm_rng.uniform(j);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  const auto ranked = activation_probabilities(spec);
  std::vector<double> prob(spec.dim);
  for (std::size_t r = 0; r < spec.dim; ++r) prob[order[r]] = ranked[r];

  std::vector<double> weights(spec.dim, 0.0);
  const std::size_t informative = std::min(spec.informative, spec.dim);
  for (std::size_t i = 0; i < informative; ++i) {
    weights[order[(i * 7) % spec.dim]] = spec.weight_scale * weight_rng.normal(i);
  }

  Dataset ds;
  ds.dim = spec.dim;
  ds.features.assign(spec.samples * spec.dim, 0.0);
  ds.labels.resize(spec.samples);
  std::vector<double> scores(spec.samples);
  for (std::size_t i = 0; i < spec.samples; ++i) {
    double* row = ds.features.data() + i * spec.dim;
    double score = 0.0;
    for (std::size_t j = 0; j < spec.dim; ++j) {
      if (feature_rng.uniform(i * spec.dim + j) < prob[j]) {
        row[j] = spec.feature_value;
        score += weights[j];
      }
    }
    scores[i] = score;
  }

  // Offset such that the mean label probability equals positive_rate.
  double lo = -50.0, hi = 50.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    double mean = 0.0;
    for (double s : scores) mean += kernels::sigmoid(s + mid);
    mean /= static_cast<double>(spec.samples);
    (mean < spec.positive_rate ? lo : hi) = mid;
  }
  const double offset = 0.5 * (lo + hi);
  for (std::size_t i = 0; i < spec.samples; ++i) {
    ds.labels[i] = label_rng.uniform(i) < kernels::sigmoid(scores[i] + offset) ? 1.0 : -1.0;
  }
  return ds;
}

}  // namespace gradcomp
