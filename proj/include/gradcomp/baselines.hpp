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
#include <string>
#include <string_view>

#include "gradcomp/protocol.hpp"

namespace gradcomp {

enum class Method {
  kProposed,
  kProposedTopL,
  kGradDiff,
  kLaq,
  kEf21,
  kExactGd,
};

std::string_view method_name(Method m);
// Throws std::invalid_argument for unknown names.
Method parse_method(std::string_view name);

/// Least-squares prediction with s memory entries, quantized residual,
/// event-triggered.
SchemeConfig proposed_scheme(std::size_t s, double rate_bits, int coeff_bits,
                             TriggerSchedule schedule);
/// As above with a Top-L sparsifier in place of the quantizer.
SchemeConfig proposed_topl_scheme(std::size_t s, std::size_t L, int coeff_bits,
                                  TriggerSchedule schedule);
/// Previous reconstruction as prediction, residual quantized every iteration.
SchemeConfig grad_diff_scheme(double rate_bits, int interval_bits);
/// Previous reconstruction as prediction, lazily transmitted.
SchemeConfig laq_scheme(double rate_bits, int interval_bits, LaqParams params = {});
/// Server estimate updated by Top-L of the difference, every iteration.
SchemeConfig ef21_scheme(std::size_t L);
/// Uncompressed gradients every iteration.
SchemeConfig exact_gd_scheme();

struct LaqCriterion {
  double change_sq = 0.0;     // ||g - last transmitted||^2
  double threshold_sq = 0.0;  // right-hand side
  bool forced = false;        // max_skip reached or nothing sent yet
  bool transmit = false;
};

/// Transmit iff change_sq >= (w/D) sum_j ||x(t+1-j) - x(t-j)||^2 / (gamma K)^2
/// + noise_factor * d * delta^2 / 4, or the send is forced. Only the first D
/// recent update norms are used.
LaqCriterion laq_criterion(double change_sq, std::span<const double> recent_update_sq_norms,
                           double gamma, std::size_t agents, std::size_t dim, double delta,
                           const LaqParams& params, std::size_t skip_count,
                           bool ever_transmitted);

// Per-method steps. Each checks that the agent was built with the matching
// scheme and then runs the shared agent procedure.
EncodeResult grad_diff_step(Agent& agent, std::span<const double> x, const EncodeContext& ctx);
EncodeResult laq_step(Agent& agent, std::span<const double> x, const EncodeContext& ctx);
EncodeResult ef21_step(Agent& agent, std::span<const double> x, const EncodeContext& ctx);
EncodeResult proposed_with_topl_step(Agent& agent, std::span<const double> x,
                                     const EncodeContext& ctx);

}  // namespace gradcomp
