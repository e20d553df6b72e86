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

#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>

#include "gradcomp/random.hpp"

using namespace gradcomp;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}) ==
        C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::block(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                          K{0xffffffffu, 0xffffffffu}) ==
        C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::block(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                          K{0xa4093822u, 0x299f31d0u}) ==
        C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are pure functions of their coordinates") {
  const CounterStream a(42, 3, 17, 0), b(42, 3, 17, 0);
  for (std::uint64_t i = 0; i < 100; ++i) CHECK(a.uniform(i) == b.uniform(i));
  CHECK(a.uniform(5) == a.uniform(5));
  std::set<double> distinct;
  for (const auto& s : {CounterStream(42, 3, 17, 0), CounterStream(43, 3, 17, 0),
                        CounterStream(42, 4, 17, 0), CounterStream(42, 3, 18, 0),
                        CounterStream(42, 3, 17, 1), CounterStream(42, 3, 17, replicate_tag(1))}) {
    distinct.insert(s.uniform(0));
  }
  CHECK(distinct.size() == 6);
}

TEST_CASE("uniform draws lie in [0, 1) with the right moments") {
  const CounterStream s(1, 0, 1, static_cast<std::uint32_t>(StreamTag::kTest));
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform(i);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sq += u * u;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(sq / n - mean * mean == doctest::Approx(1.0 / 12.0).epsilon(0.01));
}

TEST_CASE("normal draws have zero mean and unit variance") {
  const CounterStream s(9, 2, 5, static_cast<std::uint32_t>(StreamTag::kTest));
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal(i);
    REQUIRE(std::isfinite(z));
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 4.0 / std::sqrt(double(n)));
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("indices beyond the counter range are rejected") {
  const CounterStream s(1, 0, 0, 0);
  CHECK_NOTHROW(s.uniform((1ull << 33) - 1));
  CHECK_THROWS_AS(s.uniform(1ull << 33), std::out_of_range);
}
