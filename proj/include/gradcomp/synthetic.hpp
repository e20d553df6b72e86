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
#include <cstdint>

#include "gradcomp/workload.hpp"

namespace gradcomp {

/// Parameters of a sparse classification set whose active features all take
/// the value feature_value.
///
/// Feature j is active with probability p_j, where p follows a power law over
/// a shuffled feature order and sums to mean_active. Labels come from a
/// logistic model over `informative` features with an offset tuned so that
/// about positive_rate of the samples are +1.
struct SyntheticSpec {
  std::size_t samples = 49749;
  std::size_t dim = 300;
  double mean_active = 11.65;
  double feature_value = 0.1;
  double positive_rate = 0.03;
  std::size_t informative = 40;
  double weight_scale = 2.0;
  std::uint64_t seed = 0x5eed0008a;
};

/// Same shape as the LIBSVM w8a set (N = 49749, d = 300, ~11.65 active
/// features per row, ~3% positives). A stand-in when the real file is
/// unavailable; it does not reproduce w8a's values. Active features are 0.1
/// rather than 1 so that gradient descent with step 0.05 on the summed
/// logistic loss settles instead of oscillating.
SyntheticSpec w8a_like_spec();

Dataset make_synthetic(const SyntheticSpec& spec);

}  // namespace gradcomp
