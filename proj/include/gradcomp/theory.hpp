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

#include "gradcomp/protocol.hpp"
#include "gradcomp/workload.hpp"

namespace gradcomp {

/// Second-moment factor of the quantizer for one residual:
/// (||e||^2 + d delta^2 / 4) / ||e||^2, or 1 for a zero residual.
double measured_alpha(double e_norm, std::size_t dim, double delta);

/// 1 + (alpha - 1) e^2 / g^2. Requires g_norm > 0 and e_norm <= g_norm.
double alpha_k(double e_norm, double g_norm, double alpha_measured);

struct TheoryProbe {
  std::size_t t = 0;
  double b_t = 0.0;
  std::vector<double> alpha_k;  // per agent; 1 when omitted, NaN for biased compressors
  double alpha_bar = 1.0;       // max of alpha_k
  double c_t = 0.0;             // max_k c_k(t)
  double inner_product = 0.0;   // <g, g~> of the transmitted reconstruction
  double delta_norm = 0.0;      // ||g - g~||
  std::optional<double> var_estimate;
};

/// Fills the deterministic fields of a probe from one iteration's updates.
TheoryProbe make_probe(std::size_t t, std::span<const PreparedUpdate> preps,
                       const SchemeConfig& scheme, std::span<const double> global_grad,
                       std::span<const double> aggregate_reconstruction);

struct FirstMomentCheck {
  bool skipped = false;  // b >= 1
  bool pass = false;
  double inner = 0.0;  // <g, mean g~>
  double std_error = 0.0;
  double lower = 0.0;  // (1 - b) ||g||^2
  double upper = 0.0;  // (1 + b) ||g||^2
  double margin = 0.0;  // distance to the nearer widened bound; negative on failure
};

/// Sample-based check of (1-b)||g||^2 <= <g, E g~> <= (1+b)||g||^2, widened
/// by 4 standard errors plus a relative rounding slack of 1e-12 ||g||^2.
FirstMomentCheck check_first_moment(std::span<const double> g,
                                    std::span<const std::vector<double>> samples, double b);
FirstMomentCheck check_first_moment_stats(double g_sq, double mean_inner, double std_error,
                                          double b);

struct DissimilaritySample {
  double mean_local_sq = 0.0;  // (1/K) sum_k ||g_k||^2
  double global_sq = 0.0;      // ||g||^2
};

struct DissimilarityFit {
  double G_sq = 0.0;
  double B_sq = 1.0;
  // Smallest B^2 >= 1 with G = 0, when every sample allows it.
  std::optional<double> B_sq_without_G;
  std::vector<double> slack;  // G_sq + B_sq * global_sq - mean_local_sq, per sample
};

DissimilarityFit fit_dissimilarity(std::span<const DissimilaritySample> history);

struct VarianceCheck {
  bool skipped = false;  // no finite alpha_bar
  bool pass = false;
  double variance = 0.0;
  double std_error = 0.0;
  double bound = 0.0;
  double margin = 0.0;
};

/// Var(g~) <= K P (G^2 + B^2 ||g||^2), P = max(alpha_bar - 1, c^2), with
/// 4 standard errors of slack.
VarianceCheck check_variance(const TheoryProbe& probe, const DissimilarityFit& fit,
                             std::size_t agents, double g_norm, double variance,
                             double std_error);

/// Monte-Carlo replay of one iteration with the quantizer redrawn and all
/// other state frozen.
struct FrozenStateResult {
  std::size_t samples = 0;
  FirstMomentCheck first_moment;
  VarianceCheck variance;
};

FrozenStateResult probe_frozen_state(std::span<const Agent> agents,
                                     std::span<const PreparedUpdate> preps,
                                     std::span<const double> global_grad, double b,
                                     const TheoryProbe& probe, const DissimilarityFit& fit,
                                     std::size_t samples);

struct CertificateParams {
  double L_hat = 0.0;
  double mu_hat = 0.0;
  double gamma = 0.0;
  double b = 0.0;
  double c = 0.0;
  double alpha_bar = 1.0;
  std::size_t agents = 1;
  double G_sq = 0.0;
  double B_sq = 1.0;

  double P() const;
};

/// Largest step size covered by the certificate:
/// (1 - b) / (L (K B^2 P + (1 + b)^2)).
double max_certified_step(const CertificateParams& p);

struct CertificateCurve {
  bool applicable = false;  // gamma within max_certified_step
  double floor = 0.0;
  double rate = 0.0;  // 1 - mu gamma (1 - b)
  std::vector<double> bound;  // bound[i] is the value at t = i + 1
};

/// bound(t) = floor + rate^(t-1) (f1_gap - floor),
/// floor = gamma L K G^2 P / (2 mu (1 - b)).
CertificateCurve certificate_curve(const CertificateParams& p, double f1_gap, std::size_t T);

struct SmoothnessConvexity {
  double L_hat = 0.0;
  double mu_hat = 0.0;
  double trace_bound = 0.0;    // sum of ||u||^2 over all samples
  double row_sum_bound = 0.0;  // max_j sum_i |u_ij| ||u_i||_1
};

/// mu_hat = 2 K lambda from the regularizers of the K local losses.
/// L_hat = mu_hat + min(trace, row-sum bound) / (4 K); both bounds dominate
/// the largest eigenvalue of U^T U.
SmoothnessConvexity estimate_smoothness_convexity(std::span<const Shard> shards,
                                                  const LossConfig& cfg);

/// Largest ||grad f(x) - grad f(y)|| / ||x - y|| over random pairs drawn
/// from N(0, scale^2 I).
double sample_lipschitz_ratio(std::span<const Shard> shards, const LossConfig& cfg,
                              std::size_t pairs, double scale, std::uint64_t seed);

}  // namespace gradcomp
