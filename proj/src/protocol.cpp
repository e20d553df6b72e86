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

#include "gradcomp/protocol.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gradcomp/baselines.hpp"
#include "gradcomp/kernels.hpp"

namespace gradcomp {
namespace {

std::vector<double> add(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

double norm(std::span<const double> v) { return std::sqrt(kernels::sum_squares(v)); }

}  // namespace

std::size_t SchemeConfig::memory_capacity() const {
  switch (predictor) {
    case PredictorKind::kNone:
      return 0;
    case PredictorKind::kPrevious:
      return 1;
    case PredictorKind::kLeastSquares:
      return memory;
  }
  return 0;
}

int sparse_index_bits(std::size_t dim) {
  if (dim <= 1) return 0;
  return static_cast<int>(std::bit_width(dim - 1));
}

std::size_t ResidualPacket::residual_elements(std::size_t dim) const {
  if (payload) return dim;
  if (sparse) return sparse->indices.size();
  if (exact) return exact->size();
  return 0;
}

std::vector<double> prediction_from_memory(const PredictorMemory& mem, const SchemeConfig& scheme,
                                           std::span<const double> coefficients) {
  const std::size_t d = mem.dim();
  switch (scheme.predictor) {
    case PredictorKind::kNone:
      return std::vector<double>(d, 0.0);
    case PredictorKind::kPrevious:
      return mem.empty() ? std::vector<double>(d, 0.0) : mem.entry(0);
    case PredictorKind::kLeastSquares: {
      if (coefficients.size() != mem.capacity()) {
        throw std::invalid_argument("expected " + std::to_string(mem.capacity()) +
                                    " coefficients, got " + std::to_string(coefficients.size()));
      }
      if (mem.empty()) return std::vector<double>(d, 0.0);
      return predict(build_matrix(mem), coefficients);
    }
  }
  return std::vector<double>(d, 0.0);
}

// ---------------------------------------------------------------------------
// Agent

Agent::Agent(std::size_t id, Shard shard, SchemeConfig scheme, LossConfig loss,
             std::uint64_t seed)
    : id_(id),
      shard_(shard),
      scheme_(std::move(scheme)),
      loss_(loss),
      seed_(seed),
      memory_(scheme_.memory_capacity(), shard.dim) {
  if (scheme_.predictor == PredictorKind::kLeastSquares && scheme_.memory == 0) {
    throw std::invalid_argument("least-squares predictor needs memory >= 1");
  }
  if (scheme_.compressor == CompressorKind::kTopL && scheme_.topl == 0) {
    throw std::invalid_argument("top-L budget must be >= 1");
  }
  if (scheme_.compressor == CompressorKind::kQuantized && !(scheme_.rate_bits > 0.0)) {
    throw std::invalid_argument("rate budget must be positive");
  }
}

LossAndGradient Agent::evaluate(std::span<const double> x) const {
  return local_loss_and_gradient(x, shard_, loss_);
}

CounterStream Agent::stream(std::size_t t, std::uint32_t replicate) const {
  const std::uint32_t tag =
      replicate == 0 ? static_cast<std::uint32_t>(StreamTag::kQuantizer) : replicate_tag(replicate);
  return CounterStream(seed_, static_cast<std::uint32_t>(id_), static_cast<std::uint32_t>(t),
                       tag);
}

PreparedUpdate Agent::prepare(std::span<const double> gradient, const EncodeContext& ctx) const {
  const std::size_t d = memory_.dim();
  if (gradient.size() != d) {
    throw std::invalid_argument("gradient dimension does not match agent memory");
  }
  PreparedUpdate p;
  p.agent = id_;
  p.t = ctx.t;
  p.gradient.assign(gradient.begin(), gradient.end());
  p.grad_norm = norm(gradient);

  if (scheme_.predictor == PredictorKind::kLeastSquares) {
    std::vector<double> coeffs(scheme_.memory, 0.0);
    if (!memory_.empty()) {
      const LeastSquaresFit fit = fit_least_squares(gradient, build_matrix(memory_), scheme_.memory);
      p.rank = fit.rank;
      p.condition = fit.condition;
      for (std::size_t i = 0; i < coeffs.size(); ++i) {
        coeffs[i] = round_coefficient(fit.coefficients[i], scheme_.coeff_bits);
      }
    }
    p.prediction = prediction_from_memory(memory_, scheme_, coeffs);
    p.residual = residual(gradient, p.prediction);
    if (norm(p.residual) > p.grad_norm) {
      coeffs.assign(scheme_.memory, 0.0);
      p.prediction = prediction_from_memory(memory_, scheme_, coeffs);
      p.residual = residual(gradient, p.prediction);
      p.coefficient_fallback = true;
    }
    p.coefficients = std::move(coeffs);
  } else {
    p.prediction = prediction_from_memory(memory_, scheme_, {});
    p.residual = residual(gradient, p.prediction);
  }
  const double e_norm = norm(p.residual);

  const bool quantized = scheme_.compressor == CompressorKind::kQuantized;
  switch (scheme_.trigger) {
    case TriggerKind::kSchedule:
      p.decision = decide_norm(e_norm, threshold(id_, ctx.t, p.grad_norm, scheme_.schedule));
      break;
    case TriggerKind::kAlways:
      p.decision = TriggerDecision{true, 0.0, e_norm};
      break;
    case TriggerKind::kLaq: {
      double delta = 0.0;
      if (quantized) {
        p.interval = select_interval(p.residual, scheme_.rate_bits, d);
        delta = p.interval->delta;
      }
      const LaqCriterion crit =
          laq_criterion(e_norm * e_norm, ctx.recent_update_sq_norms, ctx.gamma, ctx.agents, d,
                        delta, scheme_.laq, skip_count_, ever_transmitted_);
      p.decision = TriggerDecision{crit.transmit, std::sqrt(crit.threshold_sq), e_norm};
      break;
    }
  }
  if (!p.decision.transmit) {
    p.interval.reset();
  } else if (quantized && !p.interval) {
    p.interval = select_interval(p.residual, scheme_.rate_bits, d);
  }
  return p;
}

EncodeResult Agent::compress(const PreparedUpdate& prep, std::uint32_t replicate) const {
  EncodeResult r;
  r.packet.agent = id_;
  r.packet.t = prep.t;
  r.packet.coefficients = prep.coefficients;
  if (!prep.decision.transmit) {
    r.reconstruction = prep.prediction;
    return r;
  }
  switch (scheme_.compressor) {
    case CompressorKind::kQuantized: {
      const QuantizedResidual q = quantize(prep.residual, prep.interval->delta,
                                           stream(prep.t, replicate));
      r.packet.interval = q.delta;
      r.packet.payload = entropy_encode(q.levels);
      r.reconstruction = add(prep.prediction, dequantize(q));
      break;
    }
    case CompressorKind::kTopL: {
      SparseResidual sp = top_l(prep.residual, scheme_.topl);
      r.reconstruction = add(prep.prediction, sp.dense());
      r.packet.sparse = std::move(sp);
      break;
    }
    case CompressorKind::kExact:
      r.reconstruction = add(prep.prediction, prep.residual);
      r.packet.exact = prep.residual;
      break;
  }
  return r;
}

std::vector<double> Agent::sample_reconstruction(const PreparedUpdate& prep,
                                                 std::uint32_t replicate) const {
  if (!prep.decision.transmit) return prep.prediction;
  switch (scheme_.compressor) {
    case CompressorKind::kQuantized:
      return add(prep.prediction,
                 dequantize(quantize(prep.residual, prep.interval->delta,
                                     stream(prep.t, replicate))));
    case CompressorKind::kTopL:
      return add(prep.prediction, top_l(prep.residual, scheme_.topl).dense());
    case CompressorKind::kExact:
      return add(prep.prediction, prep.residual);
  }
  return prep.prediction;
}

void Agent::commit(const PreparedUpdate& prep, const EncodeResult& result) {
  memory_.push(result.reconstruction);
  if (prep.decision.transmit) {
    skip_count_ = 0;
    ever_transmitted_ = true;
  } else {
    ++skip_count_;
  }
}

EncodeResult Agent::step_with_gradient(std::span<const double> gradient,
                                       const EncodeContext& ctx) {
  const PreparedUpdate prep = prepare(gradient, ctx);
  EncodeResult r = compress(prep);
  commit(prep, r);
  return r;
}

EncodeResult Agent::step(std::span<const double> x, const EncodeContext& ctx) {
  if (x.size() != memory_.dim()) {
    throw std::invalid_argument("model dimension does not match agent memory");
  }
  const LossAndGradient lg = evaluate(x);
  return step_with_gradient(lg.gradient, ctx);
}

// ---------------------------------------------------------------------------
// Server

Server::Server(std::size_t agents, std::size_t dim, SchemeConfig scheme)
    : dim_(dim), scheme_(std::move(scheme)) {
  if (agents == 0) throw std::invalid_argument("agent count must be >= 1");
  mirrors_.assign(agents, PredictorMemory(scheme_.memory_capacity(), dim));
}

std::vector<double> Server::receive(const ResidualPacket& pkt) {
  if (pkt.agent >= mirrors_.size()) {
    throw std::out_of_range("packet from unknown agent " + std::to_string(pkt.agent));
  }
  if (pkt.interval.has_value() != pkt.payload.has_value()) {
    throw std::invalid_argument("quantized residual and interval must travel together");
  }
  PredictorMemory& mirror = mirrors_[pkt.agent];
  std::vector<double> g = prediction_from_memory(mirror, scheme_, pkt.coefficients);
  if (pkt.payload) {
    QuantizedResidual q;
    q.delta = *pkt.interval;
    q.levels = entropy_decode(*pkt.payload, dim_);
    g = add(g, dequantize(q));
  } else if (pkt.sparse) {
    if (pkt.sparse->dim != dim_) throw std::invalid_argument("sparse residual dimension mismatch");
    g = add(g, pkt.sparse->dense());
  } else if (pkt.exact) {
    if (pkt.exact->size() != dim_) throw std::invalid_argument("residual dimension mismatch");
    g = add(g, *pkt.exact);
  }
  mirror.push(g);
  return g;
}

std::vector<double> global_update(std::span<const double> x,
                                  std::span<const std::vector<double>> reconstructions,
                                  double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("step size must be positive");
  if (reconstructions.empty()) throw std::invalid_argument("no agent reconstructions");
  std::vector<double> sum(x.size(), 0.0);
  for (std::size_t k = 0; k < reconstructions.size(); ++k) {
    if (reconstructions[k].size() != x.size()) {
      throw std::invalid_argument("reconstruction of agent " + std::to_string(k) +
                                  " is missing or has the wrong dimension");
    }
    for (std::size_t i = 0; i < x.size(); ++i) sum[i] += reconstructions[k][i];
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - gamma * sum[i];
  return out;
}

// ---------------------------------------------------------------------------
// Ledger

void BitLedger::record(const LedgerEntry& entry) {
  entries_.push_back(entry);
  total_bits_ += entry.total_bits();
  total_channel_uses_ += entry.channel_uses;
  if (entry.residual_transmitted) ++transmissions_;
}

LedgerEntry account_bits(BitLedger& ledger, const ResidualPacket& pkt, const SchemeConfig& scheme,
                         std::size_t dim) {
  LedgerEntry e;
  e.t = pkt.t;
  e.agent = pkt.agent;
  e.coeff_bits = pkt.coefficients.size() * static_cast<std::uint64_t>(scheme.coeff_bits);
  e.residual_transmitted = pkt.has_residual();
  if (pkt.payload) {
    e.interval_bits = static_cast<std::uint64_t>(scheme.interval_bits);
    e.payload_bits = pkt.payload->bit_count;
  } else if (pkt.sparse) {
    e.payload_bits = pkt.sparse->indices.size() *
                     static_cast<std::uint64_t>(kSparseValueBits + sparse_index_bits(dim));
  } else if (pkt.exact) {
    e.payload_bits = pkt.exact->size() * static_cast<std::uint64_t>(kExactValueBits);
  }
  e.channel_uses = pkt.coefficients.size() + pkt.residual_elements(dim);
  ledger.record(e);
  return e;
}

}  // namespace gradcomp
