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

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gradcomp {

/// Per-agent trigger coefficient c_k(t); the residual threshold is
/// c_k(t) * ||g_k||.
struct TriggerSchedule {
  enum class Kind {
    kLinearDecay,  // c(t) = max(0, (1 - t / horizon) / K)
    kConstant,     // c(t) = constant
    kPerAgent,     // c_k(t) = per_agent[k]
  };

  Kind kind = Kind::kLinearDecay;
  std::size_t agents = 1;
  double horizon = 1000.0;
  double constant = 0.0;
  std::vector<double> per_agent;

  static TriggerSchedule linear_decay(std::size_t agents, double horizon = 1000.0);
  static TriggerSchedule constant_value(double c);
  static TriggerSchedule per_agent_values(std::vector<double> c);

  double coefficient(std::size_t agent, std::size_t t) const;
  // max_k c_k(t)
  double max_coefficient(std::size_t t) const;
};

double threshold(std::size_t agent, std::size_t t, double grad_norm, const TriggerSchedule& sched);

struct TriggerDecision {
  bool transmit = false;
  double threshold = 0.0;
  double residual_norm = 0.0;
};

/// Transmit iff ||e|| > threshold; equality omits.
TriggerDecision decide(std::span<const double> e, double threshold);
TriggerDecision decide_norm(double residual_norm, double threshold);

struct ThresholdRatio {
  double b = 0.0;
  bool converged = false;  // global gradient is zero; b is not defined
  bool violation = false;  // b >= 1
};

/// b(t) = sum_k e_th,k / ||g||.
ThresholdRatio compute_b(std::span<const double> thresholds, double global_grad_norm);

}  // namespace gradcomp
