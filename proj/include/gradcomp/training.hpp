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
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gradcomp/baselines.hpp"
#include "gradcomp/protocol.hpp"
#include "gradcomp/theory.hpp"
#include "gradcomp/workload.hpp"

namespace gradcomp {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t t, double gap)
      : std::runtime_error(what), t_(t), gap_(gap) {}
  std::size_t t() const { return t_; }
  double gap() const { return gap_; }

 private:
  std::size_t t_;
  double gap_;
};

enum class ScheduleKind { kLinear, kConstant, kPerAgent };

/// One experiment. Text form: one `key = value` per line, `#` starts a comment.
struct RunConfig {
  std::string dataset;  // LIBSVM path, or synthetic:w8a / synthetic:<N>x<d>
  Method method = Method::kProposed;
  std::size_t K = 10;
  std::size_t s = 2;
  double gamma = 0.05;
  double lambda = 0.01;
  double R = 3.0;
  std::optional<int> coeff_bits;  // default: 16 when R <= 3, else 32
  std::size_t L = 1;
  ScheduleKind schedule = ScheduleKind::kLinear;
  double horizon = 1000.0;
  double c = 0.0;                 // constant schedule
  std::vector<double> c_agents;   // per-agent schedule
  std::size_t max_iters = 5000;
  double target_gap = 1e-5;       // non-finite disables the early stop
  std::uint64_t seed = 1;
  std::size_t probe_every = 0;    // 0 disables Monte-Carlo probes
  std::size_t probe_samples = 2000;
  std::optional<double> fstar;
  std::string fstar_path;  // file written by the fstar command, used when fstar is unset
  std::optional<std::size_t> dim;
  double laq_noise_factor = 3.0;
  std::filesystem::path base_dir;  // relative dataset paths resolve here

  int effective_coeff_bits() const;
};

RunConfig parse_run_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);
// Canonical text form; parse_run_config(format_run_config(c)) == c field-wise.
std::string format_run_config(const RunConfig& cfg);

SchemeConfig scheme_for(const RunConfig& cfg);

/// Resolves cfg.dataset: synthetic names are generated, relative paths are
/// looked up under $GRADCOMP_DATA_DIR when set, else under cfg.base_dir.
Dataset load_dataset(const RunConfig& cfg);
std::filesystem::path resolve_dataset_path(const RunConfig& cfg);

struct IterationRecord {
  std::size_t t = 0;
  double loss_gap = 0.0;  // f(x(t+1)) - f*, after this iteration's update
  std::uint64_t cumulative_bits = 0;
  std::uint64_t cumulative_channel_uses = 0;
  std::size_t transmissions = 0;
  double b_t = 0.0;
  double max_alpha_t = 1.0;
};

struct ProbeRecord {
  TheoryProbe probe;
  FrozenStateResult mc;
  double G_sq = 0.0;
  double B_sq = 1.0;
};

struct RunHistory {
  RunConfig config;
  double fstar = 0.0;
  double initial_gap = 0.0;  // f(x(1)) - f*
  std::vector<IterationRecord> iterations;
  std::vector<ProbeRecord> probes;
  BitLedger ledger;
  std::vector<DissimilaritySample> dissimilarity;
  std::vector<std::vector<double>> iterates;  // x(1), x(2), ... when recorded
  std::size_t sync_checks = 0;
  std::size_t sync_failures = 0;
  std::size_t max_skip_count = 0;
  std::size_t coefficient_fallbacks = 0;
  std::size_t saturated_intervals = 0;
  double max_b = 0.0;
  double max_c = 0.0;
  double max_alpha = 1.0;
  bool reached_target = false;

  std::size_t iterations_run() const { return iterations.size(); }
  double transmission_frequency_pct() const;
};

struct RunOptions {
  bool record_iterates = false;
  std::ostream* log = nullptr;
};

/// Runs from x(1) = 0 until the gap reaches the target or max_iters
/// iterations. Throws DivergenceError when the gap exceeds 1e6 times the
/// initial gap.
RunHistory run_training(const RunConfig& cfg, const Dataset& data, double fstar,
                        const RunOptions& opts = {});
// Loads the dataset; computes f* when the config does not give it.
RunHistory run_training(const RunConfig& cfg, const RunOptions& opts = {});

/// Certificate for a finished run from its measured constants: b, c and
/// alpha_bar are run maxima, G^2 the envelope fit with B^2 = 1.
struct RunCertificate {
  CertificateParams params;
  double max_step = 0.0;
  std::optional<CertificateCurve> curve;  // bound at t = 1 .. iterations + 1
  std::string reason;                     // why there is no curve
};

RunCertificate certify_run(const RunHistory& h, const SmoothnessConvexity& sc);

struct FstarResult {
  double fstar = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Exact gradient descent from 0 until ||grad f|| <= tol or the cap.
FstarResult reference_fstar(std::span<const Shard> shards, const LossConfig& loss, double gamma,
                            double tol = 1e-10, std::size_t cap = 1'000'000);

}  // namespace gradcomp
