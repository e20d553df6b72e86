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

#include <algorithm>
#include <cmath>

#include "gradcomp/kernels.hpp"

namespace gradcomp::kernels {

double softplus(double v) {
  return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
}

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum_squares_scalar(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
  return acc;
}

double logistic_scalar(const double* features, const double* labels,
                       std::size_t rows, std::size_t dim, const double* x,
                       double* grad_acc) {
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* u = features + r * dim;
    const double y = labels[r];
    const double margin = -y * dot_scalar(u, x, dim);
    loss += softplus(margin);
    if (grad_acc != nullptr) {
      axpy_scalar(-y * sigmoid(margin), u, grad_acc, dim);
    }
  }
  return loss;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::kScalar, &dot_scalar, &axpy_scalar,
                                 &sum_squares_scalar, &logistic_scalar};
  return table;
}

}  // namespace gradcomp::kernels
