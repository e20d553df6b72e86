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
#include <span>
#include <stdexcept>
#include <vector>

#include "gradcomp/random.hpp"

namespace gradcomp {

/// Stochastic fixed-interval quantizer output. Element i dequantizes to
/// delta * levels[i].
struct QuantizedResidual {
  std::vector<std::int16_t> levels;
  double delta = 1.0;
  std::size_t payload_bits = 0;  // entropy-coded size of levels, table included
};

class LevelOverflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// level_i = floor(e_i / delta) + Bernoulli(frac(e_i / delta)), the Bernoulli
/// draw for element i being stream.uniform(i) < frac. Throws LevelOverflow
/// when a level leaves the int16 range.
QuantizedResidual quantize(std::span<const double> e, double delta, const CounterStream& stream);
std::vector<double> dequantize(const QuantizedResidual& qr);

/// MSB-first packed bits.
struct Bitstream {
  std::vector<std::uint8_t> bytes;
  std::size_t bit_count = 0;
};

/// Canonical Huffman code over the distinct symbols of `levels`.
///
/// Layout: [distinct count: 16][(symbol: int16, code length: 5) per distinct
/// symbol, ascending symbol order][codes]. A single-symbol alphabet uses a
/// 1-bit code. The empty vector encodes to zero bits.
Bitstream entropy_encode(std::span<const std::int16_t> levels);
std::vector<std::int16_t> entropy_decode(const Bitstream& bits, std::size_t count);
// Same number entropy_encode(levels).bit_count would report, without packing.
std::size_t entropy_coded_bits(std::span<const std::int16_t> levels);

/// Huffman code lengths for the given symbol frequencies (all > 0), in the
/// same order. Ties are broken by insertion order so the result is stable.
std::vector<int> huffman_code_lengths(std::span<const std::size_t> frequencies);

struct IntervalChoice {
  double delta = 1.0;
  std::size_t measured_bits = 0;
  bool budget_saturated = false;
};

/// Picks delta = m * 2^-j (m = max |e_i|, j in [0, 24]) with the largest j
/// whose coded payload fits within rate_bits * dim bits. Grid points whose
/// levels would overflow int16 are skipped. The payload is measured on a
/// quantization drawn from a fixed stream, so the choice depends only on
/// (e, rate_bits); the dither used for transmission is independent of it.
/// When even j = 0 exceeds the budget, j = 0 is returned with
/// budget_saturated set. An all-zero e yields delta = 1.
IntervalChoice select_interval(std::span<const double> e, double rate_bits, std::size_t dim);

/// Top-L sparsification: the min(L, d) entries of largest magnitude, ties
/// to the lower index, stored with increasing indices.
struct SparseResidual {
  std::size_t dim = 0;
  std::vector<std::size_t> indices;
  std::vector<double> values;

  std::vector<double> dense() const;
};

SparseResidual top_l(std::span<const double> e, std::size_t budget);

}  // namespace gradcomp
