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

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "gradcomp/kernels.hpp"

using namespace gradcomp;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

double naive_dot(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

}  // namespace

TEST_CASE("softplus and sigmoid are stable at extreme arguments") {
  CHECK(kernels::softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(kernels::softplus(800.0) == 800.0);
  CHECK(kernels::softplus(-800.0) >= 0.0);
  CHECK(kernels::softplus(-800.0) < 1e-300);
  CHECK(std::isfinite(kernels::softplus(1e308)));
  CHECK(kernels::sigmoid(0.0) == 0.5);
  CHECK(kernels::sigmoid(-800.0) == 0.0);
  CHECK(kernels::sigmoid(800.0) == 1.0);
  for (double v : {-30.0, -3.0, -0.1, 0.7, 12.0}) {
    CHECK(kernels::softplus(v) == doctest::Approx(std::log1p(std::exp(v))).epsilon(1e-14));
    CHECK(kernels::sigmoid(v) + kernels::sigmoid(-v) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("scalar kernels match long-double references") {
  std::mt19937_64 rng(7);
  const auto& t = kernels::scalar_table();
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u, 300u}) {
    auto a = random_vec(rng, n), b = random_vec(rng, n);
    CHECK(t.dot(a.data(), b.data(), n) == doctest::Approx(naive_dot(a, b)).epsilon(1e-13));
    CHECK(t.sum_squares(a.data(), n) == doctest::Approx(naive_dot(a, a)).epsilon(1e-13));
    auto y = b;
    t.axpy(-0.5, a.data(), y.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == b[i] + (-0.5) * a[i]);
  }
}

TEST_CASE("scalar and AVX2 kernels agree") {
  if (!kernels::isa_supported(kernels::Isa::kAvx2)) {
    MESSAGE("AVX2 not available; equivalence not exercised");
    CHECK_THROWS_AS(kernels::table_for(kernels::Isa::kAvx2), std::invalid_argument);
    return;
  }
  const auto& s = kernels::table_for(kernels::Isa::kScalar);
  const auto& v = kernels::table_for(kernels::Isa::kAvx2);
  CHECK(v.isa == kernels::Isa::kAvx2);
  std::mt19937_64 rng(11);
  for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 8u, 15u, 17u, 64u, 299u, 300u, 1001u}) {
    auto a = random_vec(rng, n), b = random_vec(rng, n);
    const double scale = std::sqrt(naive_dot(a, a) * naive_dot(b, b)) + 1e-300;
    CHECK(std::abs(s.dot(a.data(), b.data(), n) - v.dot(a.data(), b.data(), n)) <=
          1e-14 * scale * std::sqrt(double(n)));
    CHECK(v.sum_squares(a.data(), n) == doctest::Approx(s.sum_squares(a.data(), n)).epsilon(1e-14));
    auto ys = b, yv = b;
    s.axpy(1.25, a.data(), ys.data(), n);
    v.axpy(1.25, a.data(), yv.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(yv[i] == doctest::Approx(ys[i]).epsilon(1e-15));
  }
  for (std::size_t dim : {1u, 3u, 4u, 9u, 50u, 300u}) {
    const std::size_t rows = 37;
    auto feats = random_vec(rng, rows * dim, 0.3);
    std::vector<double> labels(rows);
    for (std::size_t i = 0; i < rows; ++i) labels[i] = (i % 3 == 0) ? 1.0 : -1.0;
    auto x = random_vec(rng, dim);
    std::vector<double> gs(dim, 0.5), gv(dim, 0.5);
    const double ls = s.logistic_loss_grad(feats.data(), labels.data(), rows, dim, x.data(), gs.data());
    const double lv = v.logistic_loss_grad(feats.data(), labels.data(), rows, dim, x.data(), gv.data());
    CHECK(lv == doctest::Approx(ls).epsilon(1e-13));
    for (std::size_t j = 0; j < dim; ++j) CHECK(gv[j] == doctest::Approx(gs[j]).epsilon(1e-12).scale(1.0));
    CHECK(v.logistic_loss_grad(feats.data(), labels.data(), rows, dim, x.data(), nullptr) ==
          doctest::Approx(ls).epsilon(1e-13));
  }
}

TEST_CASE("logistic kernel matches the per-row definition") {
  std::mt19937_64 rng(3);
  const std::size_t rows = 5, dim = 6;
  auto feats = random_vec(rng, rows * dim);
  std::vector<double> labels{1, -1, -1, 1, -1};
  auto x = random_vec(rng, dim);
  std::vector<double> g(dim, 0.0);
  const double loss =
      kernels::scalar_table().logistic_loss_grad(feats.data(), labels.data(), rows, dim, x.data(), g.data());
  double ref = 0.0;
  std::vector<double> gref(dim, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < dim; ++j) z += feats[i * dim + j] * x[j];
    ref += std::log1p(std::exp(-labels[i] * z));
    const double w = -labels[i] / (1.0 + std::exp(labels[i] * z));
    for (std::size_t j = 0; j < dim; ++j) gref[j] += w * feats[i * dim + j];
  }
  CHECK(loss == doctest::Approx(ref).epsilon(1e-13));
  for (std::size_t j = 0; j < dim; ++j) CHECK(g[j] == doctest::Approx(gref[j]).epsilon(1e-12));
}

TEST_CASE("active table can be switched") {
  const auto before = kernels::active().isa;
  kernels::set_active(kernels::Isa::kScalar);
  CHECK(kernels::active().isa == kernels::Isa::kScalar);
  if (kernels::isa_supported(before)) kernels::set_active(before);
  CHECK(kernels::isa_name(kernels::Isa::kAvx2) == "avx2");
}
