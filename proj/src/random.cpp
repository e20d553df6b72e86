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

#include "gradcomp/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gradcomp {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter c, Key k) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

CounterStream::CounterStream(std::uint64_t seed, std::uint32_t agent, std::uint32_t iteration,
                             std::uint32_t tag)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      agent_(agent),
      iteration_(iteration),
      tag_(tag) {}

double CounterStream::uniform(std::uint64_t index) const {
  const std::uint64_t blk = index >> 1;
  if (blk > 0xFFFFFFFFull) throw std::out_of_range("CounterStream index exceeds 2^33");
  const auto out =
      Philox4x32::block({static_cast<std::uint32_t>(blk), tag_, agent_, iteration_}, key_);
  const std::size_t w = (index & 1u) * 2;
  const std::uint64_t bits =
      (static_cast<std::uint64_t>(out[w]) << 21) | (static_cast<std::uint64_t>(out[w + 1]) >> 11);
  return static_cast<double>(bits) * 0x1.0p-53;
}

double CounterStream::normal(std::uint64_t index) const {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform(2 * index);
  const double u2 = uniform(2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace gradcomp
