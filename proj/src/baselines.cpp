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

#include "gradcomp/baselines.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace gradcomp {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kProposed:
      return "proposed";
    case Method::kProposedTopL:
      return "proposed_topl";
    case Method::kGradDiff:
      return "grad_diff";
    case Method::kLaq:
      return "laq";
    case Method::kEf21:
      return "ef21";
    case Method::kExactGd:
      return "gd";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::kProposed, Method::kProposedTopL, Method::kGradDiff, Method::kLaq,
                   Method::kEf21, Method::kExactGd}) {
    if (method_name(m) == name) return m;
  }
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

SchemeConfig proposed_scheme(std::size_t s, double rate_bits, int coeff_bits,
                             TriggerSchedule schedule) {
  SchemeConfig c;
  c.predictor = s == 0 ? PredictorKind::kNone : PredictorKind::kLeastSquares;
  c.memory = s;
  c.coeff_bits = coeff_bits;
  c.interval_bits = coeff_bits;
  c.compressor = CompressorKind::kQuantized;
  c.rate_bits = rate_bits;
  c.trigger = TriggerKind::kSchedule;
  c.schedule = std::move(schedule);
  return c;
}

SchemeConfig proposed_topl_scheme(std::size_t s, std::size_t L, int coeff_bits,
                                  TriggerSchedule schedule) {
  SchemeConfig c = proposed_scheme(s, 1.0, coeff_bits, std::move(schedule));
  c.compressor = CompressorKind::kTopL;
  c.topl = L;
  return c;
}

SchemeConfig grad_diff_scheme(double rate_bits, int interval_bits) {
  SchemeConfig c;
  c.predictor = PredictorKind::kPrevious;
  c.memory = 1;
  c.coeff_bits = interval_bits;
  c.interval_bits = interval_bits;
  c.compressor = CompressorKind::kQuantized;
  c.rate_bits = rate_bits;
  c.trigger = TriggerKind::kAlways;
  return c;
}

SchemeConfig laq_scheme(double rate_bits, int interval_bits, LaqParams params) {
  SchemeConfig c = grad_diff_scheme(rate_bits, interval_bits);
  c.trigger = TriggerKind::kLaq;
  c.laq = params;
  return c;
}

SchemeConfig ef21_scheme(std::size_t L) {
  SchemeConfig c;
  c.predictor = PredictorKind::kPrevious;
  c.memory = 1;
  c.compressor = CompressorKind::kTopL;
  c.topl = L;
  c.trigger = TriggerKind::kAlways;
  return c;
}

SchemeConfig exact_gd_scheme() {
  SchemeConfig c;
  c.predictor = PredictorKind::kNone;
  c.memory = 0;
  c.compressor = CompressorKind::kExact;
  c.trigger = TriggerKind::kAlways;
  return c;
}

LaqCriterion laq_criterion(double change_sq, std::span<const double> recent_update_sq_norms,
                           double gamma, std::size_t agents, std::size_t dim, double delta,
                           const LaqParams& params, std::size_t skip_count,
                           bool ever_transmitted) {
  if (!(gamma > 0.0)) throw std::invalid_argument("step size must be positive");
  if (params.history == 0) throw std::invalid_argument("LAQ history must be >= 1");
  LaqCriterion c;
  c.change_sq = change_sq;
  const std::size_t n = std::min(params.history, recent_update_sq_norms.size());
  double updates = 0.0;
  for (std::size_t j = 0; j < n; ++j) updates += recent_update_sq_norms[j];
  const double gk = gamma * static_cast<double>(agents);
  c.threshold_sq = params.weight / static_cast<double>(params.history) * updates / (gk * gk) +
                   params.noise_factor * static_cast<double>(dim) * delta * delta / 4.0;
  c.forced = !ever_transmitted || skip_count >= params.max_skip;
  c.transmit = c.forced || change_sq >= c.threshold_sq;
  return c;
}

namespace {

void require(const Agent& agent, PredictorKind p, CompressorKind c, TriggerKind t,
             const char* what) {
  const SchemeConfig& s = agent.scheme();
  if (s.predictor != p || s.compressor != c || s.trigger != t) {
    throw std::invalid_argument(std::string("agent is not configured for ") + what);
  }
}

}  // namespace

EncodeResult grad_diff_step(Agent& agent, std::span<const double> x, const EncodeContext& ctx) {
  require(agent, PredictorKind::kPrevious, CompressorKind::kQuantized, TriggerKind::kAlways,
          "gradient difference");
  return agent.step(x, ctx);
}

EncodeResult laq_step(Agent& agent, std::span<const double> x, const EncodeContext& ctx) {
  require(agent, PredictorKind::kPrevious, CompressorKind::kQuantized, TriggerKind::kLaq, "LAQ");
  return agent.step(x, ctx);
}

EncodeResult ef21_step(Agent& agent, std::span<const double> x, const EncodeContext& ctx) {
  require(agent, PredictorKind::kPrevious, CompressorKind::kTopL, TriggerKind::kAlways, "EF21");
  return agent.step(x, ctx);
}

EncodeResult proposed_with_topl_step(Agent& agent, std::span<const double> x,
                                     const EncodeContext& ctx) {
  require(agent, PredictorKind::kLeastSquares, CompressorKind::kTopL, TriggerKind::kSchedule,
          "least-squares prediction with top-L");
  return agent.step(x, ctx);
}

}  // namespace gradcomp
