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

#include "gradcomp/codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <string>
#include <utility>

namespace gradcomp {
namespace {

constexpr int kCountBits = 16;
constexpr int kSymbolBits = 16;
constexpr int kLengthBits = 5;
constexpr int kMaxCodeLength = (1 << kLengthBits) - 1;
constexpr int kMaxGridExponent = 24;
// Seed of the measurement stream used by select_interval.
constexpr std::uint64_t kIntervalSearchSeed = 0x1D7E5A1ull;

template <typename UniformAt>
void quantize_into(std::span<const double> e, double delta, UniformAt&& uniform_at,
                   std::vector<std::int16_t>& levels) {
  levels.resize(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double scaled = e[i] / delta;
    const double floor_level = std::floor(scaled);
    const double frac = scaled - floor_level;
    const double level = floor_level + (uniform_at(i) < frac ? 1.0 : 0.0);
    if (level < std::numeric_limits<std::int16_t>::min() ||
        level > std::numeric_limits<std::int16_t>::max()) {
      throw LevelOverflow("quantization level " + std::to_string(level) +
                          " outside the int16 range");
    }
    levels[i] = static_cast<std::int16_t>(level);
  }
}

class BitWriter {
 public:
  void put(std::uint32_t value, int width) {
    for (int b = width - 1; b >= 0; --b) {
      if (out_.bit_count % 8 == 0) out_.bytes.push_back(0);
      if ((value >> b) & 1u) out_.bytes.back() |= static_cast<std::uint8_t>(0x80u >> (out_.bit_count % 8));
      ++out_.bit_count;
    }
  }
  Bitstream take() { return std::move(out_); }

 private:
  Bitstream out_;
};

class BitReader {
 public:
  explicit BitReader(const Bitstream& in) : in_(in) {}
  std::uint32_t get(int width) {
    std::uint32_t v = 0;
    for (int b = 0; b < width; ++b) v = (v << 1) | bit();
    return v;
  }
  std::uint32_t bit() {
    if (pos_ >= in_.bit_count) throw std::runtime_error("bitstream truncated");
    const std::uint32_t b = (in_.bytes[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
    ++pos_;
    return b;
  }

 private:
  const Bitstream& in_;
  std::size_t pos_ = 0;
};

struct CodeBook {
  std::vector<std::int16_t> symbols;  // ascending symbol order
  std::vector<int> lengths;
};

CodeBook build_codebook(std::span<const std::int16_t> levels) {
  std::map<std::int16_t, std::size_t> freq;
  for (auto s : levels) ++freq[s];
  if (freq.size() > 0xFFFF) throw std::length_error("too many distinct symbols for the table");
  CodeBook book;
  std::vector<std::size_t> counts;
  for (const auto& [sym, n] : freq) {
    book.symbols.push_back(sym);
    counts.push_back(n);
  }
  book.lengths = huffman_code_lengths(counts);
  return book;
}

// Canonical codes in (length, symbol) order.
struct CanonicalEntry {
  int length;
  std::int16_t symbol;
  std::uint32_t code;
};

std::vector<CanonicalEntry> canonical_codes(const CodeBook& book) {
  std::vector<CanonicalEntry> entries;
  for (std::size_t i = 0; i < book.symbols.size(); ++i) {
    entries.push_back({book.lengths[i], book.symbols[i], 0});
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.length != b.length ? a.length < b.length : a.symbol < b.symbol;
  });
  std::uint32_t code = 0;
  int prev_len = entries.empty() ? 0 : entries.front().length;
  for (auto& e : entries) {
    code <<= (e.length - prev_len);
    prev_len = e.length;
    e.code = code++;
  }
  return entries;
}

}  // namespace

QuantizedResidual quantize(std::span<const double> e, double delta, const CounterStream& stream) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("quantization interval must be positive and finite");
  }
  for (double v : e) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite residual element");
  }
  QuantizedResidual qr;
  qr.delta = delta;
  quantize_into(e, delta, [&](std::size_t i) { return stream.uniform(i); }, qr.levels);
  qr.payload_bits = entropy_coded_bits(qr.levels);
  return qr;
}

std::vector<double> dequantize(const QuantizedResidual& qr) {
  std::vector<double> out(qr.levels.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = qr.delta * qr.levels[i];
  return out;
}

std::vector<int> huffman_code_lengths(std::span<const std::size_t> frequencies) {
  const std::size_t n = frequencies.size();
  if (n == 0) return {};
  if (n == 1) return {1};
  // Node ids: leaves 0..n-1, internal nodes from n. Ties go to the older node.
  using Item = std::pair<std::size_t, std::size_t>;  // (weight, id)
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  std::vector<std::size_t> parent(2 * n - 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (frequencies[i] == 0) throw std::invalid_argument("zero symbol frequency");
    heap.emplace(frequencies[i], i);
  }
  std::size_t next = n;
  while (heap.size() > 1) {
    const auto a = heap.top();
    heap.pop();
    const auto b = heap.top();
    heap.pop();
    parent[a.second] = next;
    parent[b.second] = next;
    heap.emplace(a.first + b.first, next++);
  }
  const std::size_t root = next - 1;
  std::vector<int> depth(2 * n - 1, 0);
  for (std::size_t id = root; id-- > 0;) depth[id] = depth[parent[id]] + 1;
  std::vector<int> lengths(depth.begin(), depth.begin() + static_cast<std::ptrdiff_t>(n));
  if (*std::max_element(lengths.begin(), lengths.end()) > kMaxCodeLength) {
    throw std::length_error("Huffman code length exceeds the 5-bit table field");
  }
  return lengths;
}

std::size_t entropy_coded_bits(std::span<const std::int16_t> levels) {
  if (levels.empty()) return 0;
  std::map<std::int16_t, std::size_t> freq;
  for (auto s : levels) ++freq[s];
  std::vector<std::size_t> counts;
  counts.reserve(freq.size());
  for (const auto& kv : freq) counts.push_back(kv.second);
  const auto lengths = huffman_code_lengths(counts);
  std::size_t bits = kCountBits + freq.size() * (kSymbolBits + kLengthBits);
  for (std::size_t i = 0; i < counts.size(); ++i) bits += counts[i] * lengths[i];
  return bits;
}

Bitstream entropy_encode(std::span<const std::int16_t> levels) {
  if (levels.empty()) return {};
  const CodeBook book = build_codebook(levels);
  BitWriter w;
  w.put(static_cast<std::uint32_t>(book.symbols.size()), kCountBits);
  for (std::size_t i = 0; i < book.symbols.size(); ++i) {
    w.put(static_cast<std::uint16_t>(book.symbols[i]), kSymbolBits);
    w.put(static_cast<std::uint32_t>(book.lengths[i]), kLengthBits);
  }
  std::map<std::int16_t, CanonicalEntry> by_symbol;
  for (const auto& e : canonical_codes(book)) by_symbol.emplace(e.symbol, e);
  for (auto s : levels) {
    const auto& e = by_symbol.at(s);
    w.put(e.code, e.length);
  }
  return w.take();
}

std::vector<std::int16_t> entropy_decode(const Bitstream& bits, std::size_t count) {
  if (count == 0) return {};
  BitReader r(bits);
  CodeBook book;
  const std::size_t distinct = r.get(kCountBits);
  if (distinct == 0) throw std::runtime_error("empty code table");
  for (std::size_t i = 0; i < distinct; ++i) {
    book.symbols.push_back(static_cast<std::int16_t>(static_cast<std::uint16_t>(r.get(kSymbolBits))));
    book.lengths.push_back(static_cast<int>(r.get(kLengthBits)));
  }
  const auto entries = canonical_codes(book);
  // first_code[len] / first_index[len] for canonical decoding.
  std::vector<std::uint32_t> first_code(kMaxCodeLength + 2, 0);
  std::vector<std::size_t> first_index(kMaxCodeLength + 2, 0), per_len(kMaxCodeLength + 2, 0);
  for (std::size_t i = entries.size(); i-- > 0;) {
    const int len = entries[i].length;
    if (len < 1 || len > kMaxCodeLength) throw std::runtime_error("invalid code length in table");
    ++per_len[len];
    first_code[len] = entries[i].code;
    first_index[len] = i;
  }
  std::vector<std::int16_t> out;
  out.reserve(count);
  while (out.size() < count) {
    std::uint32_t code = 0;
    int len = 0;
    for (;;) {
      code = (code << 1) | r.bit();
      ++len;
      if (len > kMaxCodeLength) throw std::runtime_error("undecodable bitstream");
      if (per_len[len] > 0 && code >= first_code[len] && code - first_code[len] < per_len[len]) {
        out.push_back(entries[first_index[len] + (code - first_code[len])].symbol);
        break;
      }
    }
  }
  return out;
}

IntervalChoice select_interval(std::span<const double> e, double rate_bits, std::size_t dim) {
  if (!(rate_bits > 0.0)) throw std::invalid_argument("rate budget must be positive");
  double m = 0.0;
  for (double v : e) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite residual element");
    m = std::max(m, std::abs(v));
  }
  IntervalChoice choice;
  std::vector<std::int16_t> levels;
  if (m == 0.0) {
    levels.assign(e.size(), 0);
    choice.delta = 1.0;
    choice.measured_bits = entropy_coded_bits(levels);
    choice.budget_saturated = static_cast<double>(choice.measured_bits) > rate_bits * dim;
    return choice;
  }
  const double budget = rate_bits * static_cast<double>(dim);
  const CounterStream probe(kIntervalSearchSeed, 0, 0,
                            static_cast<std::uint32_t>(StreamTag::kIntervalSearch));
  std::vector<double> uniforms(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) uniforms[i] = probe.uniform(i);
  const auto uniform_at = [&](std::size_t i) { return uniforms[i]; };

  for (int j = kMaxGridExponent; j >= 0; --j) {
    // max |level| is 2^j on this grid.
    if (std::ldexp(1.0, j) > std::numeric_limits<std::int16_t>::max()) continue;
    const double delta = std::ldexp(m, -j);
    quantize_into(e, delta, uniform_at, levels);
    const std::size_t bits = entropy_coded_bits(levels);
    if (static_cast<double>(bits) <= budget || j == 0) {
      choice.delta = delta;
      choice.measured_bits = bits;
      choice.budget_saturated = static_cast<double>(bits) > budget;
      return choice;
    }
  }
  return choice;  // unreachable: j == 0 always returns
}

std::vector<double> SparseResidual::dense() const {
  std::vector<double> out(dim, 0.0);
  for (std::size_t i = 0; i < indices.size(); ++i) out[indices[i]] = values[i];
  return out;
}

SparseResidual top_l(std::span<const double> e, std::size_t budget) {
  if (budget == 0) throw std::invalid_argument("Top-L budget must be >= 1");
  SparseResidual out;
  out.dim = e.size();
  const std::size_t keep = std::min(budget, e.size());
  std::vector<std::size_t> idx(e.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double ma = std::abs(e[a]), mb = std::abs(e[b]);
                      return ma != mb ? ma > mb : a < b;
                    });
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  out.indices = idx;
  out.values.reserve(keep);
  for (auto i : idx) out.values.push_back(e[i]);
  return out;
}

}  // namespace gradcomp
