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

#include "gradcomp/predictor.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "gradcomp/kernels.hpp"

namespace gradcomp {

PredictorMemory::PredictorMemory(std::size_t capacity, std::size_t dim)
    : capacity_(capacity), dim_(dim) {}

void PredictorMemory::push(std::span<const double> reconstruction) {
  if (reconstruction.size() != dim_) {
    throw std::invalid_argument("memory entry has dimension " +
                                std::to_string(reconstruction.size()) + ", expected " +
                                std::to_string(dim_));
  }
  if (capacity_ == 0) return;
  if (entries_.size() == capacity_) entries_.pop_back();
  entries_.emplace_front(reconstruction.begin(), reconstruction.end());
}

MemoryMatrix::MemoryMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

MemoryMatrix build_matrix(const PredictorMemory& mem) {
  MemoryMatrix G(mem.dim(), mem.size());
  for (std::size_t j = 0; j < mem.size(); ++j) {
    const auto& e = mem.entry(j);
    if (e.size() != mem.dim()) throw std::invalid_argument("memory entries have mixed dimensions");
    std::copy(e.begin(), e.end(), G.column(j).begin());
  }
  return G;
}

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double norm_from(std::span<const double> col, std::size_t from) {
  double s = 0.0;
  for (std::size_t i = from; i < col.size(); ++i) s += col[i] * col[i];
  return std::sqrt(s);
}

// Solves the small dense system M y = rhs in place by Gaussian elimination
// with partial pivoting. M is n x n row-major.
std::vector<double> solve_dense(std::vector<double> M, std::vector<double> rhs, std::size_t n) {
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(M[r * n + c]) > std::abs(M[piv * n + c])) piv = r;
    }
    if (piv != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(M[c * n + j], M[piv * n + j]);
      std::swap(rhs[c], rhs[piv]);
    }
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = M[r * n + c] / M[c * n + c];
      for (std::size_t j = c; j < n; ++j) M[r * n + j] -= f * M[c * n + j];
      rhs[r] -= f * rhs[c];
    }
  }
  std::vector<double> y(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= M[i * n + j] * y[j];
    y[i] = s / M[i * n + i];
  }
  return y;
}

}  // namespace

LeastSquaresFit fit_least_squares(std::span<const double> g, const MemoryMatrix& G,
                                  std::size_t padded_length) {
  const std::size_t m = G.rows();
  const std::size_t n = G.cols();
  if (g.size() != m) {
    throw std::invalid_argument("gradient dimension " + std::to_string(g.size()) +
                                " does not match memory dimension " + std::to_string(m));
  }
  if (padded_length < n) throw std::invalid_argument("padded length shorter than column count");
  if (!all_finite(g)) throw std::invalid_argument("non-finite gradient entry");

  LeastSquaresFit fit;
  fit.coefficients.assign(padded_length, 0.0);
  if (n == 0) return fit;

  MemoryMatrix A = G;
  double max_norm = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (!all_finite(G.column(j))) throw std::invalid_argument("non-finite memory entry");
    max_norm = std::max(max_norm, norm_from(G.column(j), 0));
  }
  if (max_norm == 0.0) return fit;
  const double tol =
      static_cast<double>(std::max(m, n)) * std::numeric_limits<double>::epsilon() * max_norm;

  std::vector<double> b(g.begin(), g.end());
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> v(m);
  std::size_t rank = 0;

  for (std::size_t k = 0; k < std::min(m, n); ++k) {
    std::size_t p = k;
    double best = -1.0;
    for (std::size_t j = k; j < n; ++j) {
      const double nj = norm_from(A.column(j), k);
      if (nj > best) {
        best = nj;
        p = j;
      }
    }
    if (best <= tol) break;
    if (p != k) {
      std::swap_ranges(A.column(k).begin(), A.column(k).end(), A.column(p).begin());
      std::swap(perm[k], perm[p]);
    }

    // Householder reflector H = I - 2 v v^T / (v^T v) mapping A[k:, k] to alpha e_1.
    auto col = A.column(k);
    const double x0 = col[k];
    const double alpha = x0 > 0.0 ? -best : best;
    std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t i = k; i < m; ++i) v[i] = col[i];
    v[k] = x0 - alpha;
    double vnorm2 = 0.0;
    for (std::size_t i = k; i < m; ++i) vnorm2 += v[i] * v[i];
    if (vnorm2 > 0.0) {
      for (std::size_t j = k + 1; j < n; ++j) {
        auto cj = A.column(j);
        double s = 0.0;
        for (std::size_t i = k; i < m; ++i) s += v[i] * cj[i];
        s = 2.0 * s / vnorm2;
        for (std::size_t i = k; i < m; ++i) cj[i] -= s * v[i];
      }
      double s = 0.0;
      for (std::size_t i = k; i < m; ++i) s += v[i] * b[i];
      s = 2.0 * s / vnorm2;
      for (std::size_t i = k; i < m; ++i) b[i] -= s * v[i];
      col[k] = alpha;
    }
    for (std::size_t i = k + 1; i < m; ++i) col[i] = 0.0;
    rank = k + 1;
  }

  fit.rank = rank;
  if (rank == 0) return fit;
  auto R = [&](std::size_t i, std::size_t j) { return A.column(j)[i]; };

  // R11 z = (Q^T g)[0:r]
  std::vector<double> z(rank);
  for (std::size_t i = rank; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < rank; ++j) s -= R(i, j) * z[j];
    z[i] = s / R(i, i);
  }

  std::vector<double> a_perm(n, 0.0);
  std::copy(z.begin(), z.end(), a_perm.begin());
  if (rank < n) {
    // Null space of R = [R11 R12] is spanned by N = [-W; I], W = R11^{-1} R12.
    // Projecting the basic solution off that space gives the minimum norm.
    const std::size_t q = n - rank;
    std::vector<double> W(rank * q);  // row-major rank x q
    for (std::size_t c = 0; c < q; ++c) {
      for (std::size_t i = rank; i-- > 0;) {
        double s = R(i, rank + c);
        for (std::size_t j = i + 1; j < rank; ++j) s -= R(i, j) * W[j * q + c];
        W[i * q + c] = s / R(i, i);
      }
    }
    std::vector<double> M(q * q, 0.0), rhs(q, 0.0);
    for (std::size_t c1 = 0; c1 < q; ++c1) {
      for (std::size_t c2 = 0; c2 < q; ++c2) {
        double s = c1 == c2 ? 1.0 : 0.0;
        for (std::size_t i = 0; i < rank; ++i) s += W[i * q + c1] * W[i * q + c2];
        M[c1 * q + c2] = s;
      }
      for (std::size_t i = 0; i < rank; ++i) rhs[c1] -= W[i * q + c1] * z[i];
    }
    const auto y = solve_dense(std::move(M), std::move(rhs), q);
    for (std::size_t i = 0; i < rank; ++i) {
      double s = 0.0;
      for (std::size_t c = 0; c < q; ++c) s -= W[i * q + c] * y[c];
      a_perm[i] -= s;
    }
    for (std::size_t c = 0; c < q; ++c) a_perm[rank + c] = -y[c];
  }
  for (std::size_t j = 0; j < n; ++j) fit.coefficients[perm[j]] = a_perm[j];
  fit.condition = std::abs(R(0, 0)) / std::abs(R(rank - 1, rank - 1));
  return fit;
}

std::vector<double> ls_coefficients(std::span<const double> g, const MemoryMatrix& G,
                                    std::size_t padded_length) {
  return fit_least_squares(g, G, padded_length).coefficients;
}

std::vector<double> predict(const MemoryMatrix& G, std::span<const double> a) {
  if (a.size() < G.cols()) {
    throw std::invalid_argument("fewer coefficients than memory columns");
  }
  std::vector<double> out(G.rows(), 0.0);
  for (std::size_t j = 0; j < G.cols(); ++j) kernels::axpy(a[j], G.column(j), out);
  return out;
}

std::vector<double> residual(std::span<const double> g, std::span<const double> prediction) {
  if (g.size() != prediction.size()) throw std::invalid_argument("residual dimension mismatch");
  std::vector<double> e(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) e[i] = g[i] - prediction[i];
  return e;
}

double ls_scale_external(std::span<const double> g, std::span<const double> other) {
  if (g.size() != other.size()) throw std::invalid_argument("dimension mismatch");
  if (!all_finite(g) || !all_finite(other)) throw std::invalid_argument("non-finite input");
  const double denom = kernels::sum_squares(other);
  if (denom == 0.0) return 0.0;
  return kernels::dot(g, other) / denom;
}

double round_coefficient(double value, int bits) {
  if (!std::isfinite(value)) throw std::invalid_argument("non-finite coefficient");
  const double mag = std::abs(value);
  if (bits == 32) {
    if (mag > static_cast<double>(FLT_MAX)) return std::copysign(FLT_MAX, value);
    return static_cast<double>(static_cast<float>(value));
  }
  if (bits != 16) throw std::invalid_argument("coefficient precision must be 16 or 32 bits");
  constexpr double kHalfMax = 65504.0;
  if (mag == 0.0) return value;
  if (mag >= kHalfMax) return std::copysign(kHalfMax, value);
  int exp2 = 0;
  std::frexp(mag, &exp2);  // mag = f * 2^exp2, f in [0.5, 1)
  const int lead = std::max(exp2 - 1, -14);
  const double quantum = std::ldexp(1.0, lead - 10);
  const double rounded = std::nearbyint(mag / quantum) * quantum;
  return std::copysign(std::min(rounded, kHalfMax), value);
}

}  // namespace gradcomp
