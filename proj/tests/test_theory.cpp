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

#include <cmath>
#include <random>

#include "gradcomp/baselines.hpp"
#include "gradcomp/synthetic.hpp"
#include "gradcomp/theory.hpp"

using namespace gradcomp;

namespace {

Dataset small_set(std::size_t n = 400, std::size_t d = 16) {
  SyntheticSpec s;
  s.samples = n;
  s.dim = d;
  s.mean_active = 4;
  s.informative = 8;
  s.positive_rate = 0.3;
  return make_synthetic(s);
}

double sq(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

TEST_CASE("alpha terms") {
  CHECK(alpha_k(0.0, 2.0, 3.0) == 1.0);
  CHECK(alpha_k(2.0, 2.0, 3.0) == 3.0);
  CHECK(alpha_k(0.5, 1.0, 2.0) == 1.25);
  CHECK_THROWS_AS(alpha_k(1.1, 1.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(alpha_k(0.0, 0.0, 2.0), std::invalid_argument);
  CHECK(measured_alpha(0.0, 10, 0.5) == 1.0);
  CHECK(measured_alpha(1.0, 4, 0.5) == doctest::Approx(1.25));
}

TEST_CASE("first-moment check") {
  const std::vector<double> g{1.0, 2.0};
  SUBCASE("identity reconstruction with b = 0") {
    const std::vector<std::vector<double>> s{g};
    const auto c = check_first_moment(g, s, 0.0);
    CHECK(c.pass);
    CHECK(c.inner == 5.0);
    CHECK(c.lower == 5.0);
    CHECK(c.upper == 5.0);
  }
  SUBCASE("deterministic omission is an exact inequality") {
    const std::vector<std::vector<double>> s{{0.5, 1.0}};
    CHECK(check_first_moment(g, s, 0.5).pass);
    CHECK_FALSE(check_first_moment(g, s, 0.4).pass);
  }
  SUBCASE("b >= 1 skips") {
    const std::vector<std::vector<double>> s{{0.0, 0.0}};
    const auto c = check_first_moment(g, s, 1.0);
    CHECK(c.skipped);
  }
  SUBCASE("standard errors widen the interval") {
    CHECK(check_first_moment_stats(1.0, 1.3, 0.1, 0.0).pass);
    CHECK_FALSE(check_first_moment_stats(1.0, 1.5, 0.1, 0.0).pass);
  }
  CHECK_THROWS_AS(check_first_moment(g, std::vector<std::vector<double>>{}, 0.1),
                  std::invalid_argument);
}

TEST_CASE("dissimilarity fit") {
  SUBCASE("single agent") {
    const std::vector<DissimilaritySample> h{{4.0, 4.0}, {1.0, 1.0}};
    const auto f = fit_dissimilarity(h);
    CHECK(f.G_sq <= 1e-300);
    CHECK(f.B_sq == 1.0);
    for (double s : f.slack) CHECK(s >= 0.0);
  }
  SUBCASE("cancelling agents") {
    const std::vector<DissimilaritySample> h{{9.0, 0.0}};
    const auto f = fit_dissimilarity(h);
    CHECK(f.G_sq >= 9.0);
    CHECK_FALSE(f.B_sq_without_G);
  }
  SUBCASE("B without G") {
    const std::vector<DissimilaritySample> h{{6.0, 2.0}, {2.0, 1.0}};
    const auto f = fit_dissimilarity(h);
    REQUIRE(f.B_sq_without_G);
    CHECK(*f.B_sq_without_G >= 3.0);
    CHECK(*f.B_sq_without_G == doctest::Approx(3.0));
    CHECK(f.G_sq >= 4.0);
  }
  SUBCASE("random histories satisfy the envelope") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 10);
    std::vector<DissimilaritySample> h;
    for (int i = 0; i < 200; ++i) {
      const double gs = u(rng);
      h.push_back({gs + u(rng), gs});
    }
    const auto f = fit_dissimilarity(h);
    for (const auto& s : h) CHECK(s.mean_local_sq <= f.G_sq + f.B_sq * s.global_sq);
  }
  CHECK_THROWS_AS(fit_dissimilarity(std::vector<DissimilaritySample>{}), std::invalid_argument);
}

TEST_CASE("variance check") {
  TheoryProbe p;
  p.alpha_bar = 1.0;
  p.c_t = 0.0;
  DissimilarityFit f;
  f.G_sq = 2.0;
  auto c = check_variance(p, f, 3, 1.0, 0.0, 0.0);
  CHECK(c.pass);
  CHECK(c.bound == 0.0);
  p.c_t = 0.5;
  c = check_variance(p, f, 1, 1.0, 0.0, 0.0);
  CHECK(c.margin == doctest::Approx(0.25 * 3.0));
  p.alpha_bar = 2.0;
  CHECK_FALSE(check_variance(p, f, 1, 1.0, 10.0, 0.1).pass);
  p.alpha_bar = std::nan("");
  CHECK(check_variance(p, f, 1, 1.0, 10.0, 0.1).skipped);
}

TEST_CASE("certificate") {
  CertificateParams p;
  p.L_hat = 4.0;
  p.mu_hat = 0.5;
  p.gamma = 0.1;
  p.agents = 2;
  SUBCASE("noiseless corollary") {
    const auto c = certificate_curve(p, 10.0, 5);
    CHECK(c.floor == 0.0);
    CHECK(c.applicable);
    REQUIRE(c.bound.size() == 5);
    CHECK(c.bound[0] == 10.0);
    for (int t = 1; t < 5; ++t) CHECK(c.bound[t] == doctest::Approx(10.0 * std::pow(0.95, t)));
  }
  SUBCASE("step-size condition") {
    p.b = 0.2;
    p.c = 0.3;
    p.alpha_bar = 1.5;
    p.G_sq = 1.0;
    CHECK(p.P() == 0.5);
    const double gmax = max_certified_step(p);
    CHECK(gmax == doctest::Approx(0.8 / (4.0 * (2 * 0.5 + 1.44))));
    p.gamma = gmax * 1.01;
    CHECK_FALSE(certificate_curve(p, 1.0, 3).applicable);
    p.gamma = gmax;
    const auto c = certificate_curve(p, 1.0, 3);
    CHECK(c.applicable);
    CHECK(c.floor == doctest::Approx(gmax * 4.0 * 2 * 1.0 * 0.5 / (2 * 0.5 * 0.8)));
  }
  SUBCASE("errors") {
    p.b = 1.0;
    CHECK(max_certified_step(p) == 0.0);
    CHECK_THROWS_AS(certificate_curve(p, 1.0, 3), std::invalid_argument);
    p.b = 0.0;
    p.mu_hat = 0.0;
    CHECK_THROWS_AS(certificate_curve(p, 1.0, 3), std::invalid_argument);
    p.mu_hat = 20.0;
    CHECK_THROWS_AS(certificate_curve(p, 1.0, 3), std::invalid_argument);
  }
}

TEST_CASE("smoothness and convexity estimates") {
  SUBCASE("single unit sample") {
    Dataset ds;
    ds.dim = 3;
    ds.features = {0, 1, 0};
    ds.labels = {1};
    const auto shards = partition_uniform(ds, 1);
    const auto sc = estimate_smoothness_convexity(shards, LossConfig{0.0, 1});
    CHECK(sc.L_hat == doctest::Approx(0.25));
    CHECK(sc.mu_hat == 0.0);
  }
  SUBCASE("data-free quadratic") {
    Dataset ds;
    ds.dim = 2;
    ds.features.assign(8, 0.0);
    ds.labels = {1, -1, 1, -1};
    const auto shards = partition_uniform(ds, 2);
    const LossConfig cfg{0.3, 2};
    const auto sc = estimate_smoothness_convexity(shards, cfg);
    CHECK(sc.mu_hat == doctest::Approx(2 * 2 * 0.3));
    CHECK(sc.L_hat == sc.mu_hat);
    CHECK(sample_lipschitz_ratio(shards, cfg, 50, 1.0, 1) == doctest::Approx(sc.mu_hat));
  }
  SUBCASE("random-pair audit") {
    const Dataset ds = small_set(300, 12);
    const auto shards = partition_uniform(ds, 3);
    const LossConfig cfg{0.01, 3};
    const auto sc = estimate_smoothness_convexity(shards, cfg);
    CHECK(sc.L_hat <= sc.mu_hat + sc.trace_bound / 12 + 1e-12);
    CHECK(sample_lipschitz_ratio(shards, cfg, 300, 2.0, 4) <= sc.L_hat);
  }
}

TEST_CASE("probe and frozen-state Monte-Carlo") {
  const Dataset ds = small_set();
  const auto shards = partition_uniform(ds, 4);
  const LossConfig loss{0.01, 4};
  const auto scheme = proposed_scheme(2, 3.0, 32, TriggerSchedule::constant_value(0.05));
  std::vector<Agent> agents;
  for (std::size_t k = 0; k < 4; ++k) agents.emplace_back(k, shards[k], scheme, loss, 3);
  std::vector<double> x(ds.dim, 0.0);
  std::vector<DissimilaritySample> hist;
  for (std::size_t t = 1; t <= 12; ++t) {
    std::vector<PreparedUpdate> preps;
    std::vector<double> g(ds.dim, 0.0), agg(ds.dim, 0.0);
    double local = 0.0;
    for (auto& a : agents) {
      const auto gk = a.evaluate(x).gradient;
      preps.push_back(a.prepare(gk, EncodeContext{t, 0.5, 4, {}}));
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += gk[i];
      local += sq(gk) / 4;
    }
    hist.push_back({local, sq(g)});
    std::vector<EncodeResult> res;
    for (std::size_t k = 0; k < 4; ++k) {
      res.push_back(agents[k].compress(preps[k]));
      for (std::size_t i = 0; i < g.size(); ++i) agg[i] += res[k].reconstruction[i];
    }
    const auto probe = make_probe(t, preps, scheme, g, agg);
    CHECK(probe.alpha_k.size() == 4);
    CHECK(probe.c_t == 0.05);
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(probe.alpha_k[k] >= 1.0);
      if (preps[k].decision.transmit) {
        const double e = preps[k].decision.residual_norm;
        CHECK(probe.alpha_k[k] <= measured_alpha(e, ds.dim, preps[k].interval->delta) + 1e-12);
      } else {
        CHECK(probe.alpha_k[k] == 1.0);
      }
    }
    double b_ref = 0.0;
    for (const auto& p : preps) b_ref += 0.05 * p.grad_norm;
    CHECK(probe.b_t == doctest::Approx(b_ref / std::sqrt(sq(g))));

    const auto fit = fit_dissimilarity(hist);
    const auto mc = probe_frozen_state(agents, preps, g, probe.b_t, probe, fit, 400);
    CHECK(mc.samples == 400);
    if (!mc.first_moment.skipped) CHECK(mc.first_moment.pass);
    CHECK(mc.variance.pass);

    for (std::size_t k = 0; k < 4; ++k) agents[k].commit(preps[k], res[k]);
    std::vector<std::vector<double>> recon;
    for (auto& r : res) recon.push_back(r.reconstruction);
    x = global_update(x, recon, 0.5);
  }
}
