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

#include "gradcomp/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string_view>

namespace gradcomp {
namespace {

constexpr std::string_view kRunHeader =
    "t,loss_gap,cumulative_bits,cumulative_channel_uses,transmissions_this_iter,b_t,max_alpha_t";
constexpr std::string_view kSummaryHeader =
    "config,method,s,R,L,coeff_bits,sparse_mode,iterations,reached_target,transmissions,"
    "frequency_pct,total_bits,channel_uses,final_gap";

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = line.find(',');
    out.push_back(line.substr(0, comma));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return out;
}

class FieldReader {
 public:
  FieldReader(const std::string& source, std::size_t line) : source_(source), line_(line) {}

  [[noreturn]] void fail(std::string_view field) const {
    throw std::runtime_error(source_ + ":" + std::to_string(line_) + ": bad field '" +
                             std::string(field) + "'");
  }
  double real(std::string_view f) const {
    if (f == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || p != f.data() + f.size()) fail(f);
    return v;
  }
  std::uint64_t count(std::string_view f) const {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || ec != std::errc() || p != f.data() + f.size()) fail(f);
    return v;
  }

 private:
  const std::string& source_;
  std::size_t line_;
};

bool sparse_method(Method m) { return m == Method::kEf21 || m == Method::kProposedTopL; }

}  // namespace

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_run_csv(const RunHistory& h, std::ostream& out) {
  out << kRunHeader << "\n";
  for (const auto& r : h.iterations) {
    out << r.t << ',' << format_real(r.loss_gap) << ',' << r.cumulative_bits << ','
        << r.cumulative_channel_uses << ',' << r.transmissions << ',' << format_real(r.b_t) << ','
        << format_real(r.max_alpha_t) << "\n";
  }
}

std::vector<IterationRecord> read_run_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || line != kRunHeader) {
    throw std::runtime_error(source + ": not a run CSV");
  }
  std::vector<IterationRecord> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = split(line);
    const FieldReader rd(source, n);
    if (f.size() != 7) rd.fail(line);
    IterationRecord r;
    r.t = rd.count(f[0]);
    r.loss_gap = rd.real(f[1]);
    r.cumulative_bits = rd.count(f[2]);
    r.cumulative_channel_uses = rd.count(f[3]);
    r.transmissions = rd.count(f[4]);
    r.b_t = rd.real(f[5]);
    r.max_alpha_t = rd.real(f[6]);
    rows.push_back(r);
  }
  return rows;
}

void write_probe_csv(const RunHistory& h, std::ostream& out) {
  out << "t,b_t,alpha_bar,c_t,inner_product,delta_norm,samples,mc_inner,mc_inner_se,inner_lower,"
         "inner_upper,first_moment_skipped,first_moment_pass,variance,variance_se,variance_bound,"
         "variance_skipped,variance_pass,G_sq,B_sq\n";
  for (const auto& p : h.probes) {
    const auto& fm = p.mc.first_moment;
    const auto& v = p.mc.variance;
    out << p.probe.t << ',' << format_real(p.probe.b_t) << ',' << format_real(p.probe.alpha_bar)
        << ',' << format_real(p.probe.c_t) << ',' << format_real(p.probe.inner_product) << ','
        << format_real(p.probe.delta_norm) << ',' << p.mc.samples << ',' << format_real(fm.inner)
        << ',' << format_real(fm.std_error) << ',' << format_real(fm.lower) << ','
        << format_real(fm.upper) << ',' << int(fm.skipped) << ',' << int(fm.pass) << ','
        << format_real(v.variance) << ',' << format_real(v.std_error) << ','
        << format_real(v.bound) << ',' << int(v.skipped) << ',' << int(v.pass) << ','
        << format_real(p.G_sq) << ',' << format_real(p.B_sq) << "\n";
  }
}

SummaryRow summarize(const RunHistory& h, const std::string& config_name) {
  SummaryRow r;
  r.config = config_name;
  r.method = std::string(method_name(h.config.method));
  r.s = h.config.s;
  r.R = h.config.R;
  r.L = h.config.L;
  r.coeff_bits = h.config.effective_coeff_bits();
  r.sparse_mode = sparse_method(h.config.method);
  r.iterations = h.iterations.size();
  r.reached_target = h.reached_target;
  r.transmissions = h.ledger.transmissions();
  r.frequency_pct = h.transmission_frequency_pct();
  r.total_bits = h.ledger.total_bits();
  r.channel_uses = h.ledger.total_channel_uses();
  r.final_gap = h.iterations.empty() ? h.initial_gap : h.iterations.back().loss_gap;
  return r;
}

void write_summary_csv(std::span<const SummaryRow> rows, std::ostream& out) {
  out << kSummaryHeader << "\n";
  for (const auto& r : rows) {
    out << r.config << ',' << r.method << ',' << r.s << ',' << format_real(r.R) << ',' << r.L << ','
        << r.coeff_bits << ',' << int(r.sparse_mode) << ',' << r.iterations << ','
        << int(r.reached_target) << ',' << r.transmissions << ',' << format_real(r.frequency_pct)
        << ',' << r.total_bits << ',' << r.channel_uses << ',' << format_real(r.final_gap) << "\n";
  }
}

std::vector<SummaryRow> read_summary_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || line != kSummaryHeader) {
    throw std::runtime_error(source + ": not a summary CSV");
  }
  std::vector<SummaryRow> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = split(line);
    const FieldReader rd(source, n);
    if (f.size() != 14) rd.fail(line);
    SummaryRow r;
    r.config = std::string(f[0]);
    r.method = std::string(f[1]);
    r.s = rd.count(f[2]);
    r.R = rd.real(f[3]);
    r.L = rd.count(f[4]);
    r.coeff_bits = static_cast<int>(rd.count(f[5]));
    r.sparse_mode = rd.count(f[6]) != 0;
    r.iterations = rd.count(f[7]);
    r.reached_target = rd.count(f[8]) != 0;
    r.transmissions = rd.count(f[9]);
    r.frequency_pct = rd.real(f[10]);
    r.total_bits = rd.count(f[11]);
    r.channel_uses = rd.count(f[12]);
    r.final_gap = rd.real(f[13]);
    rows.push_back(r);
  }
  return rows;
}

std::string format_summary_table(std::span<const SummaryRow> rows) {
  const std::vector<std::string> header = {"config",     "method",    "s",        "R / L",
                                           "freq. (%)",  "iterations", "bits (1e5)",
                                           "uses (1e3)"};
  std::vector<std::vector<std::string>> cells;
  char buf[64];
  for (const auto& r : rows) {
    std::vector<std::string> c;
    c.push_back(r.config);
    c.push_back(r.method);
    c.push_back(std::to_string(r.s));
    if (r.sparse_mode) {
      c.push_back("L=" + std::to_string(r.L));
    } else {
      std::snprintf(buf, sizeof buf, "R=%g", r.R);
      c.push_back(buf);
    }
    std::snprintf(buf, sizeof buf, "%.2f", r.frequency_pct);
    c.push_back(buf);
    c.push_back(std::to_string(r.iterations) + (r.reached_target ? "" : "*"));
    std::snprintf(buf, sizeof buf, "%.2f", static_cast<double>(r.total_bits) / 1e5);
    c.push_back(buf);
    std::snprintf(buf, sizeof buf, "%.1f", static_cast<double>(r.channel_uses) / 1e3);
    c.push_back(buf);
    cells.push_back(std::move(c));
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t j = 0; j < header.size(); ++j) {
    width[j] = header[j].size();
    for (const auto& c : cells) width[j] = std::max(width[j], c[j].size());
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& c) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (j) out << "  ";
      // Text columns left-aligned, numbers right-aligned.
      if (j < 2) {
        out << c[j] << std::string(width[j] - c[j].size(), ' ');
      } else {
        out << std::string(width[j] - c[j].size(), ' ') << c[j];
      }
    }
    out << "\n";
  };
  emit(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << "\n";
  for (const auto& c : cells) emit(c);
  if (std::any_of(rows.begin(), rows.end(), [](const SummaryRow& r) { return !r.reached_target; })) {
    out << "* target gap not reached; iterations run shown\n";
  }
  return out.str();
}

void write_plot_series(std::span<const IterationRecord> rows, std::ostream& out) {
  out << "# cumulative_bits loss_gap\n";
  for (const auto& r : rows) out << r.cumulative_bits << ' ' << format_real(r.loss_gap) << "\n";
}

void write_certificate_csv(const CertificateCurve& curve, std::ostream& out) {
  out << "t,bound\n";
  for (std::size_t i = 0; i < curve.bound.size(); ++i) {
    out << i + 1 << ',' << format_real(curve.bound[i]) << "\n";
  }
}

}  // namespace gradcomp
