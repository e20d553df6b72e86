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
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gradcomp {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Dense binary-classification data. Features are stored row-major.
struct Dataset {
  std::size_t dim = 0;
  std::vector<double> features;  // size() * dim
  std::vector<double> labels;    // each exactly -1 or +1

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features).subspan(i * dim, dim);
  }
};

/// One agent's contiguous slice of a Dataset. Non-owning.
struct Shard {
  std::size_t agent_id = 0;
  std::size_t dim = 0;
  std::span<const double> features;
  std::span<const double> labels;

  std::size_t size() const { return labels.size(); }
};

struct LossConfig {
  double lambda = 0.0;
  std::size_t agents = 1;
};

/// Reads LIBSVM sparse text ("label idx:val ..."; 1-based indices).
/// Labels in {-1,+1} are kept; the {0,1} convention maps 0 to -1.
/// dim is the largest index seen unless dim_override is given.
Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> dim_override = std::nullopt,
                     const std::string& source = "<stream>");
Dataset load_libsvm(const std::filesystem::path& path,
                    std::optional<std::size_t> dim_override = std::nullopt);

void write_libsvm(const Dataset& ds, const std::filesystem::path& path);

/// Splits the first K*floor(N/K) samples, in order, into K equal shards.
/// The trailing N mod K samples are dropped.
std::vector<Shard> partition_uniform(const Dataset& ds, std::size_t agents);

/// f_k(x) = (1/K) sum_i log(1 + exp(-y_i u_i^T x)) + lambda ||x||^2
double local_loss(std::span<const double> x, const Shard& shard, const LossConfig& cfg);
std::vector<double> local_gradient(std::span<const double> x, const Shard& shard,
                                   const LossConfig& cfg);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

// One pass over the shard for both quantities.
LossAndGradient local_loss_and_gradient(std::span<const double> x, const Shard& shard,
                                        const LossConfig& cfg);

/// f(x) = sum_k f_k(x), accumulated in ascending shard order.
double global_loss(std::span<const double> x, std::span<const Shard> shards,
                   const LossConfig& cfg);
std::vector<double> global_gradient(std::span<const double> x, std::span<const Shard> shards,
                                    const LossConfig& cfg);

}  // namespace gradcomp
