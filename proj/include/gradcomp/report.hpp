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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gradcomp/theory.hpp"
#include "gradcomp/training.hpp"

namespace gradcomp {

// Doubles are written with 17 significant digits so files replay exactly.
std::string format_real(double v);

/// t,loss_gap,cumulative_bits,cumulative_channel_uses,transmissions_this_iter,b_t,max_alpha_t
void write_run_csv(const RunHistory& h, std::ostream& out);
std::vector<IterationRecord> read_run_csv(std::istream& in, const std::string& source);

/// One row per Monte-Carlo probe.
void write_probe_csv(const RunHistory& h, std::ostream& out);

struct SummaryRow {
  std::string config;
  std::string method;
  std::size_t s = 0;
  double R = 0.0;
  std::size_t L = 0;
  int coeff_bits = 0;
  bool sparse_mode = false;  // cost is reported in channel uses
  std::size_t iterations = 0;
  bool reached_target = false;
  std::uint64_t transmissions = 0;
  double frequency_pct = 0.0;
  std::uint64_t total_bits = 0;
  std::uint64_t channel_uses = 0;
  double final_gap = 0.0;
};

SummaryRow summarize(const RunHistory& h, const std::string& config_name);

void write_summary_csv(std::span<const SummaryRow> rows, std::ostream& out);
std::vector<SummaryRow> read_summary_csv(std::istream& in, const std::string& source);

/// Aligned text table: method, parameter, frequency, iterations, cost.
std::string format_summary_table(std::span<const SummaryRow> rows);

/// Whitespace-separated "cumulative_bits loss_gap" lines with a # header.
void write_plot_series(std::span<const IterationRecord> rows, std::ostream& out);

/// t,bound
void write_certificate_csv(const CertificateCurve& curve, std::ostream& out);

}  // namespace gradcomp
