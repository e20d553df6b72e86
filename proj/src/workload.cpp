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

#include "gradcomp/workload.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <string_view>
#include <utility>

#include "gradcomp/kernels.hpp"

namespace gradcomp {

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

struct SparseRow {
  double label;
  std::vector<std::pair<std::size_t, double>> entries;
};

void check_dim(std::span<const double> x, const Shard& shard) {
  if (x.size() != shard.dim) {
    throw std::invalid_argument("model dimension " + std::to_string(x.size()) +
                                " does not match shard dimension " + std::to_string(shard.dim));
  }
}

}  // namespace

Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> dim_override,
                     const std::string& source) {
  std::vector<SparseRow> rows;
  std::size_t max_index = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    SparseRow row;
    if (!parse_number(tokens[0], row.label)) {
      throw ParseError(source, lineno, "malformed label '" + std::string(tokens[0]) + "'");
    }
    if (row.label == 0.0) {
      row.label = -1.0;
    } else if (row.label != 1.0 && row.label != -1.0) {
      throw ParseError(source, lineno, "label must be -1, +1, 0 or 1");
    }
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto colon = tokens[t].find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(source, lineno, "expected idx:val, got '" + std::string(tokens[t]) + "'");
      }
      std::size_t idx = 0;
      double val = 0.0;
      if (!parse_number(tokens[t].substr(0, colon), idx) || idx == 0) {
        throw ParseError(source, lineno, "bad feature index in '" + std::string(tokens[t]) + "'");
      }
      if (!parse_number(tokens[t].substr(colon + 1), val) || !std::isfinite(val)) {
        throw ParseError(source, lineno, "bad feature value in '" + std::string(tokens[t]) + "'");
      }
      if (dim_override && idx > *dim_override) {
        throw ParseError(source, lineno, "feature index exceeds dimension override");
      }
      max_index = std::max(max_index, idx);
      row.entries.emplace_back(idx - 1, val);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(source, lineno, "no samples");

  Dataset ds;
  ds.dim = dim_override.value_or(max_index);
  if (ds.dim == 0) throw ParseError(source, lineno, "dimension is zero");
  ds.features.assign(rows.size() * ds.dim, 0.0);
  ds.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ds.labels.push_back(rows[i].label);
    for (const auto& [idx, val] : rows[i].entries) ds.features[i * ds.dim + idx] = val;
  }
  return ds;
}

Dataset load_libsvm(const std::filesystem::path& path, std::optional<std::size_t> dim_override) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path.string());
  return parse_libsvm(in, dim_override, path.string());
}

void write_libsvm(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset: " + path.string());
  out << std::setprecision(17);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << (ds.labels[i] > 0 ? "+1" : "-1");
    const auto r = ds.row(i);
    for (std::size_t j = 0; j < ds.dim; ++j) {
      if (r[j] != 0.0) out << ' ' << (j + 1) << ':' << r[j];
    }
    out << '\n';
  }
}

std::vector<Shard> partition_uniform(const Dataset& ds, std::size_t agents) {
  if (agents == 0) throw std::invalid_argument("agent count must be >= 1");
  if (ds.size() == 0) throw std::invalid_argument("dataset is empty");
  if (agents > ds.size()) throw std::invalid_argument("more agents than samples");
  const std::size_t per = ds.size() / agents;
  std::vector<Shard> shards;
  shards.reserve(agents);
  const std::span<const double> feats(ds.features);
  const std::span<const double> labels(ds.labels);
  for (std::size_t k = 0; k < agents; ++k) {
    shards.push_back(Shard{k, ds.dim, feats.subspan(k * per * ds.dim, per * ds.dim),
                           labels.subspan(k * per, per)});
  }
  return shards;
}

LossAndGradient local_loss_and_gradient(std::span<const double> x, const Shard& shard,
                                        const LossConfig& cfg) {
  check_dim(x, shard);
  const auto& kt = kernels::active();
  LossAndGradient out;
  out.gradient.assign(shard.dim, 0.0);
  const double data_loss = kt.logistic_loss_grad(shard.features.data(), shard.labels.data(),
                                                 shard.size(), shard.dim, x.data(),
                                                 out.gradient.data());
  const double inv_k = 1.0 / static_cast<double>(cfg.agents);
  for (std::size_t j = 0; j < shard.dim; ++j) {
    out.gradient[j] = out.gradient[j] * inv_k + 2.0 * cfg.lambda * x[j];
  }
  out.loss = data_loss * inv_k + cfg.lambda * kt.sum_squares(x.data(), x.size());
  return out;
}

double local_loss(std::span<const double> x, const Shard& shard, const LossConfig& cfg) {
  check_dim(x, shard);
  const auto& kt = kernels::active();
  const double data_loss = kt.logistic_loss_grad(shard.features.data(), shard.labels.data(),
                                                 shard.size(), shard.dim, x.data(), nullptr);
  return data_loss / static_cast<double>(cfg.agents) +
         cfg.lambda * kt.sum_squares(x.data(), x.size());
}

std::vector<double> local_gradient(std::span<const double> x, const Shard& shard,
                                   const LossConfig& cfg) {
  return local_loss_and_gradient(x, shard, cfg).gradient;
}

double global_loss(std::span<const double> x, std::span<const Shard> shards,
                   const LossConfig& cfg) {
  double total = 0.0;
  for (const auto& s : shards) total += local_loss(x, s, cfg);
  return total;
}

std::vector<double> global_gradient(std::span<const double> x, std::span<const Shard> shards,
                                    const LossConfig& cfg) {
  std::vector<double> g(x.size(), 0.0);
  for (const auto& s : shards) {
    const auto gk = local_gradient(x, s, cfg);
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += gk[j];
  }
  return g;
}

}  // namespace gradcomp
