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

#include "gradcomp/trigger.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gradcomp/kernels.hpp"

namespace gradcomp {

TriggerSchedule TriggerSchedule::linear_decay(std::size_t agents, double horizon) {
  if (agents == 0) throw std::invalid_argument("agent count must be >= 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  TriggerSchedule s;
  s.kind = Kind::kLinearDecay;
  s.agents = agents;
  s.horizon = horizon;
  return s;
}

TriggerSchedule TriggerSchedule::constant_value(double c) {
  if (!(c >= 0.0)) throw std::invalid_argument("trigger coefficient must be >= 0");
  TriggerSchedule s;
  s.kind = Kind::kConstant;
  s.constant = c;
  return s;
}

TriggerSchedule TriggerSchedule::per_agent_values(std::vector<double> c) {
  for (double v : c) {
    if (!(v >= 0.0)) throw std::invalid_argument("trigger coefficient must be >= 0");
  }
  TriggerSchedule s;
  s.kind = Kind::kPerAgent;
  s.agents = c.size();
  s.per_agent = std::move(c);
  return s;
}

double TriggerSchedule::coefficient(std::size_t agent, std::size_t t) const {
  switch (kind) {
    case Kind::kLinearDecay:
      return std::max(0.0, (1.0 - static_cast<double>(t) / horizon) / static_cast<double>(agents));
    case Kind::kConstant:
      return constant;
    case Kind::kPerAgent:
      return per_agent.at(agent);
  }
  return 0.0;
}

double TriggerSchedule::max_coefficient(std::size_t t) const {
  if (kind == Kind::kPerAgent) {
    return per_agent.empty() ? 0.0 : *std::max_element(per_agent.begin(), per_agent.end());
  }
  return coefficient(0, t);
}

double threshold(std::size_t agent, std::size_t t, double grad_norm, const TriggerSchedule& sched) {
  if (grad_norm < 0.0 || std::isnan(grad_norm)) {
    throw std::invalid_argument("gradient norm must be >= 0");
  }
  return sched.coefficient(agent, t) * grad_norm;
}

TriggerDecision decide_norm(double residual_norm, double th) {
  return TriggerDecision{residual_norm > th, th, residual_norm};
}

TriggerDecision decide(std::span<const double> e, double th) {
  return decide_norm(std::sqrt(kernels::sum_squares(e)), th);
}

ThresholdRatio compute_b(std::span<const double> thresholds, double global_grad_norm) {
  ThresholdRatio r;
  if (!(global_grad_norm > 0.0)) {
    r.converged = true;
    return r;
  }
  double sum = 0.0;
  for (double th : thresholds) sum += th;
  r.b = sum / global_grad_norm;
  r.violation = r.b >= 1.0;
  return r;
}

}  // namespace gradcomp
