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

#include "gradcomp/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gradcomp/kernels.hpp"
#include "gradcomp/random.hpp"

namespace gradcomp {
namespace {

constexpr double kSigmaSlack = 4.0;
constexpr double kRoundingSlack = 1e-12;

double norm(std::span<const double> v) { return std::sqrt(kernels::sum_squares(v)); }

// Welford accumulator.
struct RunningStats {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double std_error() const {
    return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
  }
};

}  // namespace

double measured_alpha(double e_norm, std::size_t dim, double delta) {
  if (e_norm == 0.0) return 1.0;
  const double e_sq = e_norm * e_norm;
  return (e_sq + static_cast<double>(dim) * delta * delta / 4.0) / e_sq;
}

double alpha_k(double e_norm, double g_norm, double alpha_measured) {
  if (!(g_norm > 0.0)) throw std::invalid_argument("gradient norm must be positive");
  if (e_norm > g_norm) {
    throw std::invalid_argument("residual norm exceeds gradient norm");
  }
  const double r = e_norm / g_norm;
  return 1.0 + (alpha_measured - 1.0) * r * r;
}

TheoryProbe make_probe(std::size_t t, std::span<const PreparedUpdate> preps,
                       const SchemeConfig& scheme, std::span<const double> global_grad,
                       std::span<const double> aggregate_reconstruction) {
  TheoryProbe p;
  p.t = t;
  const double g_norm = norm(global_grad);
  switch (scheme.trigger) {
    case TriggerKind::kSchedule: {
      std::vector<double> th;
      th.reserve(preps.size());
      for (const auto& u : preps) th.push_back(u.decision.threshold);
      const ThresholdRatio r = compute_b(th, g_norm);
      p.b_t = r.converged ? 0.0 : r.b;
      p.c_t = scheme.schedule.max_coefficient(t);
      break;
    }
    case TriggerKind::kAlways:
      p.b_t = 0.0;
      break;
    case TriggerKind::kLaq:
      p.b_t = std::numeric_limits<double>::quiet_NaN();
      break;
  }

  p.alpha_bar = 1.0;
  for (const auto& u : preps) {
    double a = 1.0;
    if (u.decision.transmit) {
      if (scheme.compressor == CompressorKind::kTopL) {
        a = std::numeric_limits<double>::quiet_NaN();
      } else if (scheme.compressor == CompressorKind::kQuantized && u.grad_norm > 0.0) {
        const double e = u.decision.residual_norm;
        const double d = static_cast<double>(u.gradient.size());
        const double delta = u.interval->delta;
        if (e <= u.grad_norm) {
          a = alpha_k(e, u.grad_norm, measured_alpha(e, u.gradient.size(), delta));
        } else if (e > 0.0) {
          a = 1.0 + d * delta * delta / (4.0 * u.grad_norm * u.grad_norm);
        }
      }
    }
    p.alpha_k.push_back(a);
    p.alpha_bar = std::isnan(a) || std::isnan(p.alpha_bar) ? std::numeric_limits<double>::quiet_NaN()
                                                           : std::max(p.alpha_bar, a);
  }

  p.inner_product = kernels::dot(global_grad, aggregate_reconstruction);
  double dsq = 0.0;
  for (std::size_t i = 0; i < global_grad.size(); ++i) {
    const double diff = global_grad[i] - aggregate_reconstruction[i];
    dsq += diff * diff;
  }
  p.delta_norm = std::sqrt(dsq);
  return p;
}

FirstMomentCheck check_first_moment_stats(double g_sq, double mean_inner, double std_error,
                                          double b) {
  FirstMomentCheck c;
  c.inner = mean_inner;
  c.std_error = std_error;
  c.lower = (1.0 - b) * g_sq;
  c.upper = (1.0 + b) * g_sq;
  if (!(b < 1.0)) {
    c.skipped = true;
    return c;
  }
  const double slack = kSigmaSlack * std_error + kRoundingSlack * g_sq;
  c.margin = std::min(mean_inner - (c.lower - slack), (c.upper + slack) - mean_inner);
  c.pass = c.margin >= 0.0;
  return c;
}

FirstMomentCheck check_first_moment(std::span<const double> g,
                                    std::span<const std::vector<double>> samples, double b) {
  if (samples.empty()) throw std::invalid_argument("at least one sample is required");
  RunningStats s;
  for (const auto& v : samples) {
    if (v.size() != g.size()) throw std::invalid_argument("sample dimension mismatch");
    s.add(kernels::dot(g, v));
  }
  return check_first_moment_stats(kernels::sum_squares(g), s.mean, s.std_error(), b);
}

DissimilarityFit fit_dissimilarity(std::span<const DissimilaritySample> history) {
  if (history.empty()) throw std::invalid_argument("dissimilarity fit needs at least one sample");
  DissimilarityFit f;
  f.B_sq = 1.0;
  for (const auto& h : history) f.G_sq = std::max(f.G_sq, h.mean_local_sq - h.global_sq);
  for (const auto& h : history) {
    while (f.G_sq + h.global_sq < h.mean_local_sq) {
      f.G_sq = std::nextafter(f.G_sq, std::numeric_limits<double>::infinity());
    }
  }

  bool feasible = true;
  double b_sq = 1.0;
  for (const auto& h : history) {
    if (h.global_sq > 0.0) {
      b_sq = std::max(b_sq, h.mean_local_sq / h.global_sq);
    } else if (h.mean_local_sq > 0.0) {
      feasible = false;
    }
  }
  if (feasible) {
    for (const auto& h : history) {
      while (b_sq * h.global_sq < h.mean_local_sq) {
        b_sq = std::nextafter(b_sq, std::numeric_limits<double>::infinity());
      }
    }
    f.B_sq_without_G = b_sq;
  }

  f.slack.reserve(history.size());
  for (const auto& h : history) f.slack.push_back(f.G_sq + f.B_sq * h.global_sq - h.mean_local_sq);
  return f;
}

VarianceCheck check_variance(const TheoryProbe& probe, const DissimilarityFit& fit,
                             std::size_t agents, double g_norm, double variance,
                             double std_error) {
  VarianceCheck c;
  c.variance = variance;
  c.std_error = std_error;
  if (!std::isfinite(probe.alpha_bar)) {
    c.skipped = true;
    return c;
  }
  const double P = std::max(probe.alpha_bar - 1.0, probe.c_t * probe.c_t);
  c.bound = static_cast<double>(agents) * P * (fit.G_sq + fit.B_sq * g_norm * g_norm);
  c.margin = c.bound + kSigmaSlack * std_error - variance;
  c.pass = c.margin >= 0.0;
  return c;
}

FrozenStateResult probe_frozen_state(std::span<const Agent> agents,
                                     std::span<const PreparedUpdate> preps,
                                     std::span<const double> global_grad, double b,
                                     const TheoryProbe& probe, const DissimilarityFit& fit,
                                     std::size_t samples) {
  if (agents.size() != preps.size()) throw std::invalid_argument("one update per agent required");
  if (samples == 0) throw std::invalid_argument("at least one sample is required");
  const std::size_t K = agents.size();
  const std::size_t d = global_grad.size();

  // Agents whose reconstruction does not depend on the quantizer draw
  // contribute a constant.
  std::vector<std::size_t> random_agents;
  std::vector<double> fixed(d, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const bool random = preps[k].decision.transmit &&
                        agents[k].scheme().compressor == CompressorKind::kQuantized;
    if (random) {
      random_agents.push_back(k);
    } else {
      const auto rec = agents[k].sample_reconstruction(preps[k], 1);
      for (std::size_t i = 0; i < d; ++i) fixed[i] += rec[i];
    }
  }
  const double fixed_inner = kernels::dot(global_grad, fixed);

  FrozenStateResult out;
  out.samples = samples;
  const std::size_t n = random_agents.empty() ? 1 : samples;

  // Pass 1: per-agent means and the inner-product statistics.
  std::vector<std::vector<double>> means(random_agents.size(), std::vector<double>(d, 0.0));
  RunningStats inner;
  for (std::size_t r = 1; r <= n; ++r) {
    double ip = fixed_inner;
    for (std::size_t j = 0; j < random_agents.size(); ++j) {
      const std::size_t k = random_agents[j];
      const auto rec = agents[k].sample_reconstruction(preps[k], static_cast<std::uint32_t>(r));
      ip += kernels::dot(global_grad, rec);
      for (std::size_t i = 0; i < d; ++i) means[j][i] += rec[i];
    }
    inner.add(ip);
  }
  for (auto& m : means) {
    for (double& v : m) v /= static_cast<double>(n);
  }

  // Pass 2: regenerate the same draws for the sum of per-agent variances.
  RunningStats var;
  if (!random_agents.empty() && n > 1) {
    const double scale = static_cast<double>(n) / static_cast<double>(n - 1);
    for (std::size_t r = 1; r <= n; ++r) {
      double w = 0.0;
      for (std::size_t j = 0; j < random_agents.size(); ++j) {
        const std::size_t k = random_agents[j];
        const auto rec = agents[k].sample_reconstruction(preps[k], static_cast<std::uint32_t>(r));
        for (std::size_t i = 0; i < d; ++i) {
          const double diff = rec[i] - means[j][i];
          w += diff * diff;
        }
      }
      var.add(w * scale);
    }
  }

  out.first_moment =
      check_first_moment_stats(kernels::sum_squares(global_grad), inner.mean, inner.std_error(), b);
  out.variance = check_variance(probe, fit, K, norm(global_grad), var.mean, var.std_error());
  return out;
}

double CertificateParams::P() const { return std::max(alpha_bar - 1.0, c * c); }

double max_certified_step(const CertificateParams& p) {
  if (!(p.b < 1.0) || !(p.L_hat > 0.0)) return 0.0;
  const double K = static_cast<double>(p.agents);
  return (1.0 - p.b) / (p.L_hat * (K * p.B_sq * p.P() + (1.0 + p.b) * (1.0 + p.b)));
}

CertificateCurve certificate_curve(const CertificateParams& p, double f1_gap, std::size_t T) {
  if (!(p.mu_hat > 0.0)) throw std::invalid_argument("strong convexity estimate must be positive");
  if (!(p.b < 1.0)) throw std::invalid_argument("threshold ratio must be below 1");
  const double contraction = p.mu_hat * p.gamma * (1.0 - p.b);
  if (contraction >= 1.0) throw std::invalid_argument("mu * gamma * (1 - b) must be below 1");
  CertificateCurve c;
  c.applicable = p.gamma > 0.0 && p.gamma <= max_certified_step(p);
  c.rate = 1.0 - contraction;
  c.floor = p.gamma * p.L_hat * static_cast<double>(p.agents) * p.G_sq * p.P() /
            (2.0 * p.mu_hat * (1.0 - p.b));
  c.bound.reserve(T);
  double factor = 1.0;
  for (std::size_t t = 1; t <= T; ++t) {
    c.bound.push_back(c.floor + factor * (f1_gap - c.floor));
    factor *= c.rate;
  }
  return c;
}

SmoothnessConvexity estimate_smoothness_convexity(std::span<const Shard> shards,
                                                  const LossConfig& cfg) {
  if (shards.empty()) throw std::invalid_argument("no shards");
  SmoothnessConvexity s;
  const std::size_t d = shards.front().dim;
  const double K = static_cast<double>(cfg.agents);
  std::vector<double> col(d, 0.0);
  for (const auto& sh : shards) {
    for (std::size_t i = 0; i < sh.size(); ++i) {
      const auto u = sh.features.subspan(i * d, d);
      double l1 = 0.0;
      for (double v : u) {
        l1 += std::abs(v);
        s.trace_bound += v * v;
      }
      for (std::size_t j = 0; j < d; ++j) col[j] += std::abs(u[j]) * l1;
    }
  }
  s.row_sum_bound = d == 0 ? 0.0 : *std::max_element(col.begin(), col.end());
  s.mu_hat = 2.0 * K * cfg.lambda;
  s.L_hat = s.mu_hat + std::min(s.trace_bound, s.row_sum_bound) / (4.0 * K);
  return s;
}

double sample_lipschitz_ratio(std::span<const Shard> shards, const LossConfig& cfg,
                              std::size_t pairs, double scale, std::uint64_t seed) {
  if (shards.empty()) throw std::invalid_argument("no shards");
  const std::size_t d = shards.front().dim;
  double worst = 0.0;
  std::vector<double> x(d), y(d);
  for (std::size_t p = 0; p < pairs; ++p) {
    const CounterStream rng(seed, 0, static_cast<std::uint32_t>(p),
                            static_cast<std::uint32_t>(StreamTag::kTest));
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = scale * rng.normal(i);
      y[i] = scale * rng.normal(d + i);
    }
    const auto gx = global_gradient(x, shards, cfg);
    const auto gy = global_gradient(y, shards, cfg);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      num += (gx[i] - gy[i]) * (gx[i] - gy[i]);
      den += (x[i] - y[i]) * (x[i] - y[i]);
    }
    if (den > 0.0) worst = std::max(worst, std::sqrt(num / den));
  }
  return worst;
}

}  // namespace gradcomp
