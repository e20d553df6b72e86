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

#include <stdexcept>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "gradcomp/synthetic.hpp"
#include "gradcomp/workload.hpp"

using namespace gradcomp;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

Dataset random_dataset(std::uint64_t seed, std::size_t n, std::size_t d, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, scale);
  Dataset ds;
  ds.dim = d;
  for (std::size_t i = 0; i < n * d; ++i) ds.features.push_back(nd(rng));
  for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(rng() % 2 ? 1.0 : -1.0);
  return ds;
}

std::vector<double> random_x(std::uint64_t seed, std::size_t d, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<double> x(d);
  for (auto& v : x) v = nd(rng);
  return x;
}

double oracle_loss(std::span<const double> x, const Shard& s, const LossConfig& cfg) {
  Big sum = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    Big z = 0;
    for (std::size_t j = 0; j < s.dim; ++j) z += Big(s.features[i * s.dim + j]) * Big(x[j]);
    sum += boost::multiprecision::log1p(boost::multiprecision::exp(-Big(s.labels[i]) * z));
  }
  Big reg = 0;
  for (double v : x) reg += Big(v) * Big(v);
  return static_cast<double>(sum / Big(cfg.agents) + Big(cfg.lambda) * reg);
}

}  // namespace

TEST_CASE("LIBSVM parsing") {
  SUBCASE("two-line file") {
    std::istringstream in("+1 1:1.0\n-1 2:0.5\n");
    const Dataset ds = parse_libsvm(in);
    CHECK(ds.dim == 2);
    CHECK(ds.features == std::vector<double>{1, 0, 0, 0.5});
    CHECK(ds.labels == std::vector<double>{1, -1});
  }
  SUBCASE("0/1 labels map to -1/+1 and blank lines are skipped") {
    std::istringstream in("1 3:2\n\n0 1:1\n");
    const Dataset ds = parse_libsvm(in);
    CHECK(ds.labels == std::vector<double>{1, -1});
    CHECK(ds.dim == 3);
  }
  SUBCASE("dimension override pads") {
    std::istringstream in("+1 1:1\n");
    CHECK(parse_libsvm(in, 5).dim == 5);
  }
  SUBCASE("errors") {
    auto fails = [](const std::string& text, std::size_t line) {
      std::istringstream in(text);
      try {
        parse_libsvm(in, std::nullopt, "t");
      } catch (const ParseError& e) {
        return e.line() == line;
      }
      return false;
    };
    CHECK(fails("", 0));
    CHECK(fails("+1 1:1\n2 1:1\n", 2));
    CHECK(fails("+1 1:1\nx 1:1\n", 2));
    CHECK(fails("+1 1:1\n+1 0:1\n", 2));
    CHECK(fails("+1 1:1 2\n", 1));
    CHECK(fails("+1 1:abc\n", 1));
    std::istringstream over("+1 4:1\n");
    CHECK_THROWS_AS(parse_libsvm(over, 3), ParseError);
  }
  SUBCASE("write then load round-trips") {
    const Dataset ds = random_dataset(5, 7, 4, 1.0);
    const auto path = std::filesystem::temp_directory_path() / "gradcomp_roundtrip.libsvm";
    write_libsvm(ds, path);
    const Dataset back = load_libsvm(path, ds.dim);
    CHECK(back.labels == ds.labels);
    CHECK(back.features == ds.features);
    std::filesystem::remove(path);
    CHECK_THROWS(load_libsvm(path));
  }
}

TEST_CASE("uniform partition") {
  const Dataset five = random_dataset(1, 5, 2, 1.0);
  const auto two = partition_uniform(five, 2);
  REQUIRE(two.size() == 2);
  CHECK(two[0].size() == 2);
  CHECK(two[1].size() == 2);
  CHECK(two[1].features.data() == five.features.data() + 4);
  CHECK(two[1].agent_id == 1);
  CHECK(partition_uniform(five, 1)[0].size() == 5);
  CHECK_THROWS_AS(partition_uniform(five, 6), std::invalid_argument);
  CHECK_THROWS_AS(partition_uniform(five, 0), std::invalid_argument);

  const Dataset w = make_synthetic(w8a_like_spec());
  CHECK(w.size() == 49749);
  CHECK(w.dim == 300);
  for (const auto& s : partition_uniform(w, 10)) CHECK(s.size() == 4974);
}

TEST_CASE("local loss examples") {
  Dataset ds;
  ds.dim = 3;
  ds.features = {1, 0, 0, 0, 2, 0, 0, 0, -1, 1, 1, 1};
  ds.labels = {1, -1, 1, -1};
  const auto shards = partition_uniform(ds, 2);
  const LossConfig cfg{0.3, 2};
  const std::vector<double> zero(3, 0.0);
  CHECK(local_loss(zero, shards[0], cfg) == doctest::Approx(2 * std::log(2.0) / 2));

  Dataset one;
  one.dim = 2;
  one.features = {1, 0};
  one.labels = {1};
  const auto s1 = partition_uniform(one, 1);
  const std::vector<double> e1{1, 0};
  CHECK(local_loss(e1, s1[0], LossConfig{0.0, 1}) == doctest::Approx(std::log1p(std::exp(-1.0))));

  // x = 0: gradient is -(1/(2K)) sum y u.
  const auto g0 = local_gradient(zero, shards[1], cfg);
  CHECK(g0[0] == doctest::Approx(0.25));
  CHECK(g0[1] == doctest::Approx(0.25));
  CHECK(g0[2] == doctest::Approx(0.5));

  Dataset blank;
  blank.dim = 2;
  blank.features = {0, 0, 0, 0};
  blank.labels = {1, -1};
  const auto sb = partition_uniform(blank, 1);
  const std::vector<double> x{0.7, -1.1};
  const auto gb = local_gradient(x, sb[0], LossConfig{0.2, 1});
  CHECK(gb[0] == doctest::Approx(2 * 0.2 * 0.7));
  CHECK(gb[1] == doctest::Approx(2 * 0.2 * -1.1));

  const std::vector<double> wrong(4, 0.0);
  CHECK_THROWS_AS(local_loss(wrong, shards[0], cfg), std::invalid_argument);
  CHECK_THROWS_AS(local_gradient(wrong, shards[0], cfg), std::invalid_argument);
}

TEST_CASE("extreme margins stay finite") {
  Dataset ds;
  ds.dim = 1;
  ds.features = {1, 1};
  ds.labels = {1, -1};
  const auto s = partition_uniform(ds, 1);
  const std::vector<double> big{1000.0};
  const double f = local_loss(big, s[0], LossConfig{0.0, 1});
  CHECK(f == doctest::Approx(1000.0));
  const auto g = local_gradient(big, s[0], LossConfig{0.0, 1});
  CHECK(g[0] == doctest::Approx(1.0));
}

TEST_CASE("loss matches a 50-digit summation oracle") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset ds = random_dataset(seed, 60, 8, 1.5);
    const auto shards = partition_uniform(ds, 3);
    const LossConfig cfg{0.01 * double(seed), 3};
    const auto x = random_x(seed + 100, 8, 1.0);
    for (const auto& s : shards) {
      const double ref = oracle_loss(x, s, cfg);
      CHECK(std::abs(local_loss(x, s, cfg) - ref) <= 1e-12 * std::abs(ref));
      CHECK(std::abs(local_loss_and_gradient(x, s, cfg).loss - ref) <= 1e-12 * std::abs(ref));
    }
  }
}

TEST_CASE("gradient matches central finite differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset ds = random_dataset(seed, 40, 6, 1.0);
    const auto shards = partition_uniform(ds, 2);
    const LossConfig cfg{0.05, 2};
    auto x = random_x(seed + 7, 6, 0.5);
    const auto g = local_gradient(x, shards[0], cfg);
    const auto fused = local_loss_and_gradient(x, shards[0], cfg);
    CHECK(fused.gradient == g);
    for (std::size_t j = 0; j < 6; ++j) {
      const double h = 1e-6, keep = x[j];
      x[j] = keep + h;
      const double fp = oracle_loss(x, shards[0], cfg);
      x[j] = keep - h;
      const double fm = oracle_loss(x, shards[0], cfg);
      x[j] = keep;
      const double fd = (fp - fm) / (2 * h);
      CHECK(std::abs(g[j] - fd) <= 1e-5 * std::max(std::abs(fd), 1e-3));
    }
  }
}

TEST_CASE("global objective is the sum of local losses") {
  const Dataset ds = random_dataset(3, 90, 5, 1.0);
  const auto shards = partition_uniform(ds, 3);
  const LossConfig cfg{0.02, 3};
  const auto x = random_x(4, 5, 1.0);
  // Full-data objective: sum over all samples of softplus, scaled by 1/K, plus K lambda ||x||^2.
  const auto whole = partition_uniform(ds, 1);
  const double data_only = oracle_loss(x, whole[0], LossConfig{0.0, 3});
  double xx = 0.0;
  for (double v : x) xx += v * v;
  const double ref = data_only + 3 * 0.02 * xx;
  CHECK(std::abs(global_loss(x, shards, cfg) - ref) <= 1e-12 * ref);
  const auto gg = global_gradient(x, shards, cfg);
  for (std::size_t j = 0; j < 5; ++j) {
    double sum = 0.0;
    for (const auto& s : shards) sum += local_gradient(x, s, cfg)[j];
    CHECK(gg[j] == doctest::Approx(sum).epsilon(1e-14));
  }
}

TEST_CASE("local loss is convex along random segments") {
  const Dataset ds = random_dataset(8, 50, 7, 1.0);
  const auto shards = partition_uniform(ds, 2);
  const LossConfig cfg{0.0, 2};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto a = random_x(seed, 7, 3.0), b = random_x(seed + 1000, 7, 3.0);
    std::vector<double> mid(7);
    for (std::size_t j = 0; j < 7; ++j) mid[j] = 0.5 * (a[j] + b[j]);
    CHECK(local_loss(mid, shards[1], cfg) <=
          0.5 * (local_loss(a, shards[1], cfg) + local_loss(b, shards[1], cfg)) + 1e-12);
  }
}

TEST_CASE("synthetic generator is deterministic and shaped like w8a") {
  SyntheticSpec spec;
  spec.samples = 3000;
  const Dataset a = make_synthetic(spec), b = make_synthetic(spec);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  std::size_t active = 0, pos = 0;
  for (double v : a.features) {
    if (v != 0.0) {
      CHECK(v == spec.feature_value);
      ++active;
    }
  }
  for (double y : a.labels) pos += y > 0;
  CHECK(double(active) / spec.samples == doctest::Approx(spec.mean_active).epsilon(0.1));
  CHECK(double(pos) / spec.samples == doctest::Approx(spec.positive_rate).epsilon(0.5));
  SyntheticSpec bad = spec;
  bad.feature_value = 0.0;
  CHECK_THROWS(make_synthetic(bad));
}
