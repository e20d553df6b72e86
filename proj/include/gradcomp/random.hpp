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

#include <array>
#include <cstdint>

namespace gradcomp {

/// Philox4x32-10 counter-based block cipher (Salmon et al., SC'11).
///
/// A pure function of (counter, key); there is no hidden state, so any draw
/// can be regenerated from its coordinates.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter counter, Key key);
};

/// Stream tags separate independent purposes that share a seed.
enum class StreamTag : std::uint32_t {
  kQuantizer = 0,
  kIntervalSearch = 1,
  kDataset = 2,
  kTest = 3,
  // Monte-Carlo replicates use kReplicateBase + r.
  kReplicateBase = 16,
};

/// Uniform draws addressed by (seed, agent, t, tag, element index).
///
/// uniform(i) is the i-th draw of the stream; calling it twice with the same
/// index returns the same value. Two 53-bit uniforms come out of every Philox
/// block.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint32_t agent, std::uint32_t iteration,
                std::uint32_t tag);

  double uniform(std::uint64_t index) const;
  // Standard normal via Box-Muller over draws 2*index and 2*index + 1.
  double normal(std::uint64_t index) const;

 private:
  Philox4x32::Key key_;
  std::uint32_t agent_;
  std::uint32_t iteration_;
  std::uint32_t tag_;
};

inline std::uint32_t replicate_tag(std::uint32_t replicate) {
  return static_cast<std::uint32_t>(StreamTag::kReplicateBase) + replicate;
}

}  // namespace gradcomp
