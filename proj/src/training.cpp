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

#include "gradcomp/training.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "gradcomp/kernels.hpp"
#include "gradcomp/synthetic.hpp"

namespace gradcomp {
namespace {

constexpr double kDivergenceFactor = 1e6;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class KeyParser {
 public:
  KeyParser(const std::string& source, std::size_t line, std::string_view key)
      : source_(source), line_(line), key_(key) {}

  [[noreturn]] void fail(std::string_view value, const char* expected) const {
    throw ConfigError(source_ + ":" + std::to_string(line_) + ": invalid value '" +
                      std::string(value) + "' for " + key_ + " (expected " + expected + ")");
  }

  double real(std::string_view v) const {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) fail(v, "a number");
    return out;
  }

  std::uint64_t unsigned_int(std::string_view v) const {
    int base = 10;
    if (v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) {
      v.remove_prefix(2);
      base = 16;
    }
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    const auto [p, ec] = std::from_chars(v.data(), end, out, base);
    if (v.empty() || ec != std::errc() || p != end) fail(v, "a non-negative integer");
    return out;
  }

  std::vector<double> list(std::string_view v) const {
    std::vector<double> out;
    while (!v.empty()) {
      const auto comma = v.find(',');
      out.push_back(real(trim(v.substr(0, comma))));
      if (comma == std::string_view::npos) break;
      v.remove_prefix(comma + 1);
    }
    if (out.empty()) fail(v, "a comma-separated list");
    return out;
  }

 private:
  const std::string& source_;
  std::size_t line_;
  std::string key_;
};

double read_fstar_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open f* file " + path.string());
  double v = 0.0;
  if (!(in >> v)) throw ConfigError("no value in f* file " + path.string());
  return v;
}

void validate(const RunConfig& c, const std::string& source) {
  auto bad = [&](const std::string& what) { throw ConfigError(source + ": " + what); };
  if (c.dataset.empty()) bad("missing required key 'dataset'");
  if (c.K < 1) bad("K must be >= 1");
  if (!(c.gamma > 0.0) || !std::isfinite(c.gamma)) bad("gamma must be > 0");
  if (!(c.lambda >= 0.0) || !std::isfinite(c.lambda)) bad("lambda must be >= 0");
  if (!(c.R > 0.0) || !std::isfinite(c.R)) bad("R must be > 0");
  if (c.coeff_bits && *c.coeff_bits != 16 && *c.coeff_bits != 32) bad("coeff_bits must be 16 or 32");
  if (c.L < 1) bad("L must be >= 1");
  if (!(c.horizon > 0.0)) bad("horizon must be > 0");
  if (!(c.c >= 0.0)) bad("c must be >= 0");
  for (double v : c.c_agents) {
    if (!(v >= 0.0)) bad("c_agents entries must be >= 0");
  }
  if (c.schedule == ScheduleKind::kPerAgent && c.c_agents.size() != c.K) {
    bad("per_agent schedule needs K entries in c_agents");
  }
  if (c.max_iters < 1) bad("max_iters must be >= 1");
  if (std::isnan(c.target_gap)) bad("target_gap must not be NaN");
  if (c.probe_samples < 1) bad("probe_samples must be >= 1");
  if (!(c.laq_noise_factor >= 0.0)) bad("laq_noise_factor must be >= 0");
  if (c.dim && *c.dim == 0) bad("dim must be >= 1");
}

std::optional<SyntheticSpec> synthetic_spec(std::string_view name) {
  constexpr std::string_view prefix = "synthetic:";
  if (name.substr(0, prefix.size()) != prefix) return std::nullopt;
  name.remove_prefix(prefix.size());
  if (name == "w8a") return w8a_like_spec();
  const auto x = name.find('x');
  if (x == std::string_view::npos) throw ConfigError("unknown synthetic dataset '" + std::string(name) + "'");
  std::size_t n = 0, d = 0;
  const auto a = name.substr(0, x);
  const auto b = name.substr(x + 1);
  if (std::from_chars(a.data(), a.data() + a.size(), n).ec != std::errc() ||
      std::from_chars(b.data(), b.data() + b.size(), d).ec != std::errc() || n == 0 || d == 0) {
    throw ConfigError("synthetic dataset must be synthetic:w8a or synthetic:<N>x<d>");
  }
  SyntheticSpec spec = w8a_like_spec();
  spec.samples = n;
  spec.dim = d;
  spec.informative = std::min<std::size_t>(spec.informative, d);
  spec.mean_active = std::min(spec.mean_active, 0.5 * static_cast<double>(d));
  return spec;
}

double norm(std::span<const double> v) { return std::sqrt(kernels::sum_squares(v)); }

}  // namespace

int RunConfig::effective_coeff_bits() const { return coeff_bits.value_or(R <= 3.0 ? 16 : 32); }

RunConfig parse_run_config(std::istream& in, const std::string& source) {
  RunConfig c;
  bool have_method = false;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view v = trim(line.substr(eq + 1));
    const KeyParser p(source, line_no, key);

    if (key == "dataset") {
      if (v.empty()) p.fail(v, "a path");
      c.dataset = std::string(v);
    } else if (key == "method") {
      try {
        c.method = parse_method(v);
      } catch (const std::invalid_argument&) {
        p.fail(v, "proposed, proposed_topl, grad_diff, laq, ef21 or gd");
      }
      have_method = true;
    } else if (key == "K") {
      c.K = p.unsigned_int(v);
    } else if (key == "s") {
      c.s = p.unsigned_int(v);
    } else if (key == "gamma") {
      c.gamma = p.real(v);
    } else if (key == "lambda") {
      c.lambda = p.real(v);
    } else if (key == "R") {
      c.R = p.real(v);
    } else if (key == "coeff_bits") {
      c.coeff_bits = static_cast<int>(p.unsigned_int(v));
    } else if (key == "L") {
      c.L = p.unsigned_int(v);
    } else if (key == "schedule") {
      if (v == "linear") {
        c.schedule = ScheduleKind::kLinear;
      } else if (v == "constant") {
        c.schedule = ScheduleKind::kConstant;
      } else if (v == "per_agent") {
        c.schedule = ScheduleKind::kPerAgent;
      } else {
        p.fail(v, "linear, constant or per_agent");
      }
    } else if (key == "horizon") {
      c.horizon = p.real(v);
    } else if (key == "c") {
      c.c = p.real(v);
    } else if (key == "c_agents") {
      c.c_agents = p.list(v);
    } else if (key == "max_iters") {
      c.max_iters = p.unsigned_int(v);
    } else if (key == "target_gap") {
      c.target_gap = p.real(v);
    } else if (key == "seed") {
      c.seed = p.unsigned_int(v);
    } else if (key == "probe_every") {
      c.probe_every = p.unsigned_int(v);
    } else if (key == "probe_samples") {
      c.probe_samples = p.unsigned_int(v);
    } else if (key == "fstar") {
      double value = 0.0;
      const auto* end = v.data() + v.size();
      const auto [ptr, ec] = std::from_chars(v.data(), end, value);
      if (ec == std::errc() && ptr == end) {
        c.fstar = value;
      } else {
        c.fstar_path = std::string(v);
      }
    } else if (key == "dim") {
      c.dim = p.unsigned_int(v);
    } else if (key == "laq_noise_factor") {
      c.laq_noise_factor = p.real(v);
    } else {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (!have_method) throw ConfigError(source + ": missing required key 'method'");
  validate(c, source);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  RunConfig c = parse_run_config(in, path.string());
  c.base_dir = path.parent_path();
  return c;
}

std::string format_run_config(const RunConfig& c) {
  std::ostringstream o;
  o << "dataset = " << c.dataset << "\n";
  o << "method = " << method_name(c.method) << "\n";
  o << "K = " << c.K << "\n";
  o << "s = " << c.s << "\n";
  o << "gamma = " << fmt_double(c.gamma) << "\n";
  o << "lambda = " << fmt_double(c.lambda) << "\n";
  o << "R = " << fmt_double(c.R) << "\n";
  if (c.coeff_bits) o << "coeff_bits = " << *c.coeff_bits << "\n";
  o << "L = " << c.L << "\n";
  o << "schedule = "
    << (c.schedule == ScheduleKind::kLinear     ? "linear"
        : c.schedule == ScheduleKind::kConstant ? "constant"
                                                : "per_agent")
    << "\n";
  o << "horizon = " << fmt_double(c.horizon) << "\n";
  o << "c = " << fmt_double(c.c) << "\n";
  if (!c.c_agents.empty()) {
    o << "c_agents = ";
    for (std::size_t i = 0; i < c.c_agents.size(); ++i) {
      o << (i ? "," : "") << fmt_double(c.c_agents[i]);
    }
    o << "\n";
  }
  o << "max_iters = " << c.max_iters << "\n";
  o << "target_gap = " << fmt_double(c.target_gap) << "\n";
  o << "seed = " << c.seed << "\n";
  o << "probe_every = " << c.probe_every << "\n";
  o << "probe_samples = " << c.probe_samples << "\n";
  if (c.fstar) {
    o << "fstar = " << fmt_double(*c.fstar) << "\n";
  } else if (!c.fstar_path.empty()) {
    o << "fstar = " << c.fstar_path << "\n";
  }
  if (c.dim) o << "dim = " << *c.dim << "\n";
  o << "laq_noise_factor = " << fmt_double(c.laq_noise_factor) << "\n";
  return o.str();
}

SchemeConfig scheme_for(const RunConfig& c) {
  TriggerSchedule sched;
  switch (c.schedule) {
    case ScheduleKind::kLinear:
      sched = TriggerSchedule::linear_decay(c.K, c.horizon);
      break;
    case ScheduleKind::kConstant:
      sched = TriggerSchedule::constant_value(c.c);
      break;
    case ScheduleKind::kPerAgent:
      sched = TriggerSchedule::per_agent_values(c.c_agents);
      break;
  }
  const int bits = c.effective_coeff_bits();
  switch (c.method) {
    case Method::kProposed:
      return proposed_scheme(c.s, c.R, bits, sched);
    case Method::kProposedTopL:
      return proposed_topl_scheme(c.s, c.L, bits, sched);
    case Method::kGradDiff:
      return grad_diff_scheme(c.R, bits);
    case Method::kLaq: {
      LaqParams lp;
      lp.noise_factor = c.laq_noise_factor;
      return laq_scheme(c.R, bits, lp);
    }
    case Method::kEf21:
      return ef21_scheme(c.L);
    case Method::kExactGd:
      return exact_gd_scheme();
  }
  throw ConfigError("unhandled method");
}

std::filesystem::path resolve_dataset_path(const RunConfig& cfg) {
  std::filesystem::path p = cfg.dataset;
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("GRADCOMP_DATA_DIR"); root && *root) {
    return std::filesystem::path(root) / p;
  }
  return cfg.base_dir.empty() ? p : cfg.base_dir / p;
}

Dataset load_dataset(const RunConfig& cfg) {
  if (auto spec = synthetic_spec(cfg.dataset)) {
    if (cfg.dim && *cfg.dim != spec->dim) throw ConfigError("dim does not match the synthetic set");
    return make_synthetic(*spec);
  }
  return load_libsvm(resolve_dataset_path(cfg), cfg.dim);
}

double RunHistory::transmission_frequency_pct() const {
  if (iterations.empty()) return 0.0;
  return 100.0 * static_cast<double>(ledger.transmissions()) /
         (static_cast<double>(config.K) * static_cast<double>(iterations.size()));
}

RunHistory run_training(const RunConfig& cfg, const Dataset& data, double fstar,
                        const RunOptions& opts) {
  RunHistory h;
  h.config = cfg;
  h.fstar = fstar;
  const std::vector<Shard> shards = partition_uniform(data, cfg.K);
  const LossConfig loss{cfg.lambda, cfg.K};
  const SchemeConfig scheme = scheme_for(cfg);
  const std::size_t d = data.dim;
  const std::size_t K = cfg.K;

  std::vector<Agent> agents;
  agents.reserve(K);
  for (std::size_t k = 0; k < K; ++k) agents.emplace_back(k, shards[k], scheme, loss, cfg.seed);
  Server server(K, d, scheme);

  std::vector<double> x(d, 0.0);
  std::vector<LossAndGradient> lg(K);
  auto evaluate_all = [&](std::span<const double> at) {
    double f = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      lg[k] = agents[k].evaluate(at);
      f += lg[k].loss;
    }
    return f;
  };
  h.initial_gap = evaluate_all(x) - fstar;
  const double divergence_limit =
      h.initial_gap > 0.0 ? kDivergenceFactor * h.initial_gap : std::numeric_limits<double>::infinity();
  if (opts.record_iterates) h.iterates.push_back(x);

  std::deque<double> recent_updates;
  std::vector<PreparedUpdate> preps(K);
  std::vector<std::vector<double>> recons(K);
  std::uint64_t bits = 0, uses = 0;

  for (std::size_t t = 1; t <= cfg.max_iters; ++t) {
    std::vector<double> g(d, 0.0);
    double local_sq = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < d; ++i) g[i] += lg[k].gradient[i];
      local_sq += kernels::sum_squares(lg[k].gradient);
    }
    h.dissimilarity.push_back({local_sq / static_cast<double>(K), kernels::sum_squares(g)});

    const std::vector<double> recent(recent_updates.begin(), recent_updates.end());
    EncodeContext ctx;
    ctx.t = t;
    ctx.gamma = cfg.gamma;
    ctx.agents = K;
    ctx.recent_update_sq_norms = recent;
    for (std::size_t k = 0; k < K; ++k) {
      preps[k] = agents[k].prepare(lg[k].gradient, ctx);
      if (preps[k].coefficient_fallback) ++h.coefficient_fallbacks;
      if (preps[k].interval && preps[k].interval->budget_saturated) ++h.saturated_intervals;
    }

    IterationRecord row;
    row.t = t;
    std::vector<double> aggregate(d, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      EncodeResult enc = agents[k].compress(preps[k]);
      agents[k].commit(preps[k], enc);
      recons[k] = server.receive(enc.packet);
      ++h.sync_checks;
      if (recons[k] != enc.reconstruction || !(server.mirror(k) == agents[k].memory())) {
        ++h.sync_failures;
      }
      const LedgerEntry e = account_bits(h.ledger, enc.packet, scheme, d);
      bits += e.total_bits();
      uses += e.channel_uses;
      if (e.residual_transmitted) ++row.transmissions;
      h.max_skip_count = std::max(h.max_skip_count, agents[k].skip_count());
      for (std::size_t i = 0; i < d; ++i) aggregate[i] += recons[k][i];
    }

    const TheoryProbe probe = make_probe(t, preps, scheme, g, aggregate);
    row.b_t = probe.b_t;
    row.max_alpha_t = probe.alpha_bar;
    if (!std::isnan(probe.b_t)) h.max_b = std::max(h.max_b, probe.b_t);
    h.max_c = std::max(h.max_c, probe.c_t);
    if (std::isnan(probe.alpha_bar) || std::isnan(h.max_alpha)) {
      h.max_alpha = std::numeric_limits<double>::quiet_NaN();
    } else {
      h.max_alpha = std::max(h.max_alpha, probe.alpha_bar);
    }

    if (cfg.probe_every > 0 && t % cfg.probe_every == 0) {
      ProbeRecord pr;
      pr.probe = probe;
      const DissimilarityFit fit = fit_dissimilarity(h.dissimilarity);
      pr.G_sq = fit.G_sq;
      pr.B_sq = fit.B_sq;
      const double b = std::isnan(probe.b_t) ? 1.0 : probe.b_t;
      pr.mc = probe_frozen_state(agents, preps, g, b, probe, fit, cfg.probe_samples);
      pr.probe.var_estimate = pr.mc.variance.variance;
      h.probes.push_back(std::move(pr));
    }

    std::vector<double> next = global_update(x, recons, cfg.gamma);
    double step_sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) step_sq += (next[i] - x[i]) * (next[i] - x[i]);
    recent_updates.push_front(step_sq);
    if (recent_updates.size() > scheme.laq.history) recent_updates.pop_back();
    x = std::move(next);
    if (opts.record_iterates) h.iterates.push_back(x);

    row.loss_gap = evaluate_all(x) - fstar;
    row.cumulative_bits = bits;
    row.cumulative_channel_uses = uses;
    h.iterations.push_back(row);

    if (opts.log && (t % 100 == 0 || t == 1)) {
      *opts.log << "t=" << t << " gap=" << fmt_double(row.loss_gap) << " bits=" << bits
                << " tx=" << row.transmissions << "\n";
    }
    if (!std::isfinite(row.loss_gap) || row.loss_gap > divergence_limit) {
      throw DivergenceError("loss gap " + fmt_double(row.loss_gap) + " at t=" + std::to_string(t) +
                                " exceeds 1e6 times the initial gap " + fmt_double(h.initial_gap),
                            t, row.loss_gap);
    }
    if (std::isfinite(cfg.target_gap) && row.loss_gap <= cfg.target_gap) {
      h.reached_target = true;
      break;
    }
  }
  return h;
}

RunHistory run_training(const RunConfig& cfg, const RunOptions& opts) {
  const Dataset data = load_dataset(cfg);
  double fstar = 0.0;
  if (cfg.fstar) {
    fstar = *cfg.fstar;
  } else if (!cfg.fstar_path.empty()) {
    std::filesystem::path f = cfg.fstar_path;
    if (f.is_relative() && !cfg.base_dir.empty()) f = cfg.base_dir / f;
    fstar = read_fstar_file(f);
  } else {
    const auto shards = partition_uniform(data, cfg.K);
    fstar = reference_fstar(shards, LossConfig{cfg.lambda, cfg.K}, 0.05).fstar;
  }
  return run_training(cfg, data, fstar, opts);
}

RunCertificate certify_run(const RunHistory& h, const SmoothnessConvexity& sc) {
  RunCertificate rc;
  CertificateParams& p = rc.params;
  p.L_hat = sc.L_hat;
  p.mu_hat = sc.mu_hat;
  p.gamma = h.config.gamma;
  p.b = h.max_b;
  p.c = h.max_c;
  p.alpha_bar = h.max_alpha;
  p.agents = h.config.K;
  if (!h.dissimilarity.empty()) {
    const DissimilarityFit fit = fit_dissimilarity(h.dissimilarity);
    p.G_sq = fit.G_sq;
    p.B_sq = fit.B_sq;
  }
  if (!std::isfinite(p.alpha_bar)) {
    rc.reason = "second-moment factor undefined for a biased compressor";
    return rc;
  }
  if (!(p.b < 1.0)) {
    rc.reason = "threshold ratio b = " + fmt_double(p.b) + " is not below 1";
    return rc;
  }
  if (!(p.mu_hat > 0.0)) {
    rc.reason = "no strong convexity (lambda = 0)";
    return rc;
  }
  rc.max_step = max_certified_step(p);
  if (p.mu_hat * p.gamma * (1.0 - p.b) >= 1.0) {
    rc.reason = "mu * gamma * (1 - b) >= 1";
    return rc;
  }
  rc.curve = certificate_curve(p, h.initial_gap, h.iterations.size() + 1);
  if (!rc.curve->applicable) {
    rc.reason = "gamma exceeds the certified step " + fmt_double(rc.max_step);
  }
  return rc;
}

FstarResult reference_fstar(std::span<const Shard> shards, const LossConfig& loss, double gamma,
                            double tol, std::size_t cap) {
  if (shards.empty()) throw std::invalid_argument("no shards");
  const std::size_t d = shards.front().dim;
  std::vector<double> x(d, 0.0), g(d);
  FstarResult r;
  for (std::size_t it = 0;; ++it) {
    double f = 0.0;
    std::fill(g.begin(), g.end(), 0.0);
    for (const auto& s : shards) {
      const LossAndGradient lg = local_loss_and_gradient(x, s, loss);
      f += lg.loss;
      for (std::size_t i = 0; i < d; ++i) g[i] += lg.gradient[i];
    }
    r.fstar = f;
    r.grad_norm = norm(g);
    r.iterations = it;
    if (r.grad_norm <= tol) {
      r.converged = true;
      return r;
    }
    if (it == cap) return r;
    kernels::axpy(-gamma, g, x);
  }
}

}  // namespace gradcomp
