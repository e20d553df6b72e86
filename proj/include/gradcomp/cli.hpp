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

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gradcomp::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;      // I/O failure, missing run, internal error
inline constexpr int kExitBadConfig = 2;  // invalid config or command line
inline constexpr int kExitDiverged = 3;

/// Writes <stem>.run.csv, <stem>.probe.csv, <stem>.summary.csv and, when the
/// run's measured constants admit one, <stem>.certificate.csv into out_dir.
int cmd_run(const std::filesystem::path& config, const std::filesystem::path& out_dir,
            bool verbose, std::ostream& out, std::ostream& err);

/// Reads <stem>.summary.csv for each config from results_dir and prints the
/// aligned table; also writes the rows to csv_out when given.
int cmd_table(const std::vector<std::filesystem::path>& configs,
              const std::filesystem::path& results_dir,
              const std::optional<std::filesystem::path>& csv_out, std::ostream& out,
              std::ostream& err);

/// Exact gradient descent to ||grad f|| <= 1e-10; writes f* (17 digits) to out_file.
int cmd_fstar(const std::filesystem::path& config, const std::filesystem::path& out_file,
              std::ostream& out, std::ostream& err);

/// One <stem>.dat per run CSV with "cumulative_bits loss_gap" columns.
int cmd_plotdata(const std::vector<std::filesystem::path>& runs,
                 const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);

/// Writes a synthetic dataset in LIBSVM format.
int cmd_synth(const std::string& name, const std::filesystem::path& out_file, std::ostream& out,
              std::ostream& err);

int main(int argc, char** argv);

}  // namespace gradcomp::cli
