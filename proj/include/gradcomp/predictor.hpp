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
#include <deque>
#include <span>
#include <vector>

namespace gradcomp {

/// The s most recent reconstructed gradients, newest first.
///
/// Agents and the server each hold one per agent and push the same vectors in
/// the same order, so the two copies compare equal bit for bit.
class PredictorMemory {
 public:
  PredictorMemory(std::size_t capacity, std::size_t dim);

  // Inserts at the front; evicts the oldest entry when full. Capacity 0
  // memories ignore pushes.
  void push(std::span<const double> reconstruction);

  std::size_t capacity() const { return capacity_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  // entry(0) is the most recent.
  const std::vector<double>& entry(std::size_t i) const { return entries_.at(i); }

  friend bool operator==(const PredictorMemory&, const PredictorMemory&) = default;

 private:
  std::size_t capacity_;
  std::size_t dim_;
  std::deque<std::vector<double>> entries_;
};

/// Memory entries as the columns of a column-major dim x cols matrix.
class MemoryMatrix {
 public:
  MemoryMatrix(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> column(std::size_t j) const {
    return std::span<const double>(data_).subspan(j * rows_, rows_);
  }
  std::span<double> column(std::size_t j) {
    return std::span<double>(data_).subspan(j * rows_, rows_);
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

MemoryMatrix build_matrix(const PredictorMemory& mem);

/// Least-squares fit of g onto the columns of G.
struct LeastSquaresFit {
  std::vector<double> coefficients;  // zero-padded to the requested length
  std::size_t rank = 0;
  // |R_11| / |R_rr| of the pivoted QR factor; 1 for rank <= 1, 0 for rank 0.
  double condition = 0.0;
};

/// argmin_a ||g - G a||^2 via Householder QR with column pivoting.
///
/// Columns whose pivoted diagonal falls below max(rows, cols) * eps * (largest
/// column norm) are treated as dependent; the returned solution is then the
/// minimum-norm minimizer. padded_length must be >= G.cols().
LeastSquaresFit fit_least_squares(std::span<const double> g, const MemoryMatrix& G,
                                  std::size_t padded_length);

std::vector<double> ls_coefficients(std::span<const double> g, const MemoryMatrix& G,
                                    std::size_t padded_length);

/// sum_i a_i * column_i. Coefficients past G.cols() are the zero padding
/// of a partially filled memory and are skipped.
std::vector<double> predict(const MemoryMatrix& G, std::span<const double> a);

std::vector<double> residual(std::span<const double> g, std::span<const double> prediction);

/// <g, other> / ||other||^2, or 0 when other is the zero vector.
double ls_scale_external(std::span<const double> g, std::span<const double> other);

/// Value after a round trip through IEEE binary16 (bits = 16) or binary32
/// (bits = 32), round-to-nearest-even, saturating at the largest finite value.
double round_coefficient(double value, int bits);

}  // namespace gradcomp
