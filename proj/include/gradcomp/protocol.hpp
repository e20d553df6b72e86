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
#include <optional>
#include <span>
#include <vector>

#include "gradcomp/codec.hpp"
#include "gradcomp/predictor.hpp"
#include "gradcomp/trigger.hpp"
#include "gradcomp/workload.hpp"

namespace gradcomp {

// How the prediction ghat_k is formed from the memory.
enum class PredictorKind {
  kNone,          // ghat = 0
  kLeastSquares,  // ghat = G a*, a* sent as coefficients
  kPrevious,      // ghat = previous reconstruction, nothing sent
};

// What is done to a residual that passes the trigger.
enum class CompressorKind {
  kQuantized,  // stochastic fixed-interval quantizer + Huffman, R*d bit budget
  kTopL,       // L largest-magnitude entries, full precision
  kExact,      // uncompressed
};

enum class TriggerKind {
  kSchedule,  // ||e|| > c_k(t) ||g_k||
  kAlways,
  kLaq,
};

struct LaqParams {
  std::size_t history = 10;     // D
  double weight = 0.8;          // the model-update sum is scaled by weight / D
  std::size_t max_skip = 50;    // forced send after this many omissions in a row
  double noise_factor = 3.0;    // multiplies d * delta^2 / 4
};

/// Everything that fixes how one agent encodes and the server decodes.
/// Every method in the simulator is a point in this space; they all share
/// the same quantizer and entropy coder.
struct SchemeConfig {
  PredictorKind predictor = PredictorKind::kLeastSquares;
  std::size_t memory = 1;  // s, for kLeastSquares
  int coeff_bits = 32;
  CompressorKind compressor = CompressorKind::kQuantized;
  double rate_bits = 3.0;  // R
  int interval_bits = 32;
  std::size_t topl = 1;  // L
  TriggerKind trigger = TriggerKind::kSchedule;
  TriggerSchedule schedule;
  LaqParams laq;

  bool sends_coefficients() const { return predictor == PredictorKind::kLeastSquares; }
  std::size_t memory_capacity() const;
};

/// Bit widths used when the residual is not entropy coded.
inline constexpr int kExactValueBits = 64;
inline constexpr int kSparseValueBits = 32;
int sparse_index_bits(std::size_t dim);

/// Uplink message of one agent for one iteration.
struct ResidualPacket {
  std::size_t agent = 0;
  std::size_t t = 0;
  std::vector<double> coefficients;  // empty unless the scheme sends them
  // Quantized residual: interval and entropy-coded levels, both or neither.
  std::optional<double> interval;
  std::optional<Bitstream> payload;
  std::optional<SparseResidual> sparse;
  std::optional<std::vector<double>> exact;

  bool has_residual() const { return payload.has_value() || sparse || exact; }
  // Number of residual scalars carried.
  std::size_t residual_elements(std::size_t dim) const;
};

struct ModelState {
  std::vector<double> x;
  std::size_t t = 1;
};

struct EncodeContext {
  std::size_t t = 1;
  double gamma = 0.0;
  std::size_t agents = 1;
  // ||x(t+1-j) - x(t-j)||^2 for j = 1.., most recent first (LAQ only).
  std::span<const double> recent_update_sq_norms;
};

/// Deterministic half of an agent step: prediction, residual and trigger
/// decision. Randomness enters only in compression.
struct PreparedUpdate {
  std::size_t agent = 0;
  std::size_t t = 0;
  std::vector<double> gradient;
  std::vector<double> coefficients;  // as transmitted (rounded); empty if not sent
  std::vector<double> prediction;
  std::vector<double> residual;
  double grad_norm = 0.0;
  TriggerDecision decision;
  std::optional<IntervalChoice> interval;  // quantized compressor, transmit only
  std::size_t rank = 0;
  double condition = 0.0;
  // The rounded coefficients did not contract the residual and were zeroed.
  bool coefficient_fallback = false;
};

struct EncodeResult {
  ResidualPacket packet;
  std::vector<double> reconstruction;  // g~_k, exactly what the server will compute
};

/// Prediction from a memory: the single code path shared by agent and server.
std::vector<double> prediction_from_memory(const PredictorMemory& mem, const SchemeConfig& scheme,
                                           std::span<const double> coefficients);

class Agent {
 public:
  Agent(std::size_t id, Shard shard, SchemeConfig scheme, LossConfig loss, std::uint64_t seed);

  std::size_t id() const { return id_; }
  const SchemeConfig& scheme() const { return scheme_; }
  const PredictorMemory& memory() const { return memory_; }
  std::size_t skip_count() const { return skip_count_; }

  LossAndGradient evaluate(std::span<const double> x) const;

  PreparedUpdate prepare(std::span<const double> gradient, const EncodeContext& ctx) const;
  // Replicate 0 is the stream used for the real transmission.
  EncodeResult compress(const PreparedUpdate& prep, std::uint32_t replicate = 0) const;
  // Reconstruction only, without building the packet (Monte-Carlo probes).
  std::vector<double> sample_reconstruction(const PreparedUpdate& prep,
                                            std::uint32_t replicate) const;
  void commit(const PreparedUpdate& prep, const EncodeResult& result);

  // Gradient at x, then prepare, compress and commit.
  EncodeResult step(std::span<const double> x, const EncodeContext& ctx);
  EncodeResult step_with_gradient(std::span<const double> gradient, const EncodeContext& ctx);

 private:
  CounterStream stream(std::size_t t, std::uint32_t replicate) const;

  std::size_t id_;
  Shard shard_;
  SchemeConfig scheme_;
  LossConfig loss_;
  std::uint64_t seed_;
  PredictorMemory memory_;
  std::size_t skip_count_ = 0;
  bool ever_transmitted_ = false;
};

/// Parameter-server side: one memory mirror per agent.
class Server {
 public:
  Server(std::size_t agents, std::size_t dim, SchemeConfig scheme);

  std::vector<double> receive(const ResidualPacket& pkt);
  const PredictorMemory& mirror(std::size_t agent) const { return mirrors_.at(agent); }
  std::size_t agents() const { return mirrors_.size(); }

 private:
  std::size_t dim_;
  SchemeConfig scheme_;
  std::vector<PredictorMemory> mirrors_;
};

/// x - gamma * sum_k g~_k, summed in ascending agent order.
std::vector<double> global_update(std::span<const double> x,
                                  std::span<const std::vector<double>> reconstructions,
                                  double gamma);

struct LedgerEntry {
  std::size_t t = 0;
  std::size_t agent = 0;
  std::uint64_t coeff_bits = 0;
  std::uint64_t interval_bits = 0;
  std::uint64_t payload_bits = 0;
  std::uint64_t channel_uses = 0;
  bool residual_transmitted = false;

  std::uint64_t total_bits() const { return coeff_bits + interval_bits + payload_bits; }
};

/// Uplink accounting. The broadcast downlink is not counted.
class BitLedger {
 public:
  void record(const LedgerEntry& entry);

  const std::vector<LedgerEntry>& entries() const { return entries_; }
  std::uint64_t total_bits() const { return total_bits_; }
  std::uint64_t total_channel_uses() const { return total_channel_uses_; }
  std::uint64_t transmissions() const { return transmissions_; }

 private:
  std::vector<LedgerEntry> entries_;
  std::uint64_t total_bits_ = 0;
  std::uint64_t total_channel_uses_ = 0;
  std::uint64_t transmissions_ = 0;
};

/// Coefficients: coeff_bits each, every iteration. A quantized residual adds
/// its payload plus interval_bits; a sparse one kSparseValueBits plus an
/// index per entry; an exact one kExactValueBits per element. Channel uses
/// count one per transmitted scalar.
LedgerEntry account_bits(BitLedger& ledger, const ResidualPacket& pkt, const SchemeConfig& scheme,
                         std::size_t dim);

}  // namespace gradcomp
