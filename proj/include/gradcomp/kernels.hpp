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
#include <span>
#include <string_view>

// Dense vector kernels used by every inner loop of the simulator.
//
// Each kernel has a scalar reference implementation and, on x86-64, an
// AVX2/FMA variant. The variant is chosen once at startup from the CPU
// feature flags; GRADCOMP_SIMD=scalar|avx2 forces a choice. Both variants are
// deterministic, but they sum in different orders, so results agree only up
// to rounding. Agent and server always run the same table, which is what
// keeps their memories bit-identical.

namespace gradcomp::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*sum_squares)(const double* a, std::size_t n);
  // For each row u_i of a row-major rows x dim block with label y_i:
  //   returns sum_i softplus(-y_i <u_i, x>)
  //   and, when grad_acc != nullptr, adds sum_i -y_i sigmoid(-y_i <u_i, x>) u_i.
  double (*logistic_loss_grad)(const double* features, const double* labels,
                               std::size_t rows, std::size_t dim,
                               const double* x, double* grad_acc);
};

const KernelTable& scalar_table();
bool isa_supported(Isa isa);
// Throws std::invalid_argument when the ISA is not available in this build
// or on this CPU.
const KernelTable& table_for(Isa isa);

// The process-wide table; selected lazily on first use.
const KernelTable& active();
void set_active(Isa isa);

// Numerically stable log(1 + exp(v)) and 1 / (1 + exp(-v)).
double softplus(double v);
double sigmoid(double v);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double sum_squares(std::span<const double> a) {
  return active().sum_squares(a.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace gradcomp::kernels

namespace gradcomp::kernels::detail {
// Registered by kernels_avx2.cpp when it is compiled in.
const KernelTable* avx2_table();
}  // namespace gradcomp::kernels::detail
