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

#include "gradcomp/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "gradcomp/kernels.hpp"
#include "gradcomp/report.hpp"
#include "gradcomp/theory.hpp"
#include "gradcomp/training.hpp"

namespace gradcomp::cli {
namespace fs = std::filesystem;
namespace {

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

double resolve_fstar(const RunConfig& cfg, const Dataset& data, std::ostream& out) {
  if (cfg.fstar) return *cfg.fstar;
  if (!cfg.fstar_path.empty()) {
    fs::path f = cfg.fstar_path;
    if (f.is_relative() && !cfg.base_dir.empty()) f = cfg.base_dir / f;
    std::ifstream in(f);
    double v = 0.0;
    if (!in || !(in >> v)) throw ConfigError("cannot read f* from " + f.string());
    return v;
  }
  out << "no fstar in config; running the reference solver\n";
  const auto shards = partition_uniform(data, cfg.K);
  const FstarResult r = reference_fstar(shards, LossConfig{cfg.lambda, cfg.K}, 0.05);
  if (!r.converged) out << "warning: reference solver hit its iteration cap\n";
  return r.fstar;
}

// Maps library exceptions to exit codes.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const DivergenceError& e) {
    err << "diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const ParseError& e) {
    err << "dataset error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace

int cmd_run(const fs::path& config, const fs::path& out_dir, bool verbose, std::ostream& out,
            std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_run_config(config);
    const Dataset data = load_dataset(cfg);
    const double fstar = resolve_fstar(cfg, data, out);
    RunOptions opts;
    if (verbose) opts.log = &out;
    const RunHistory h = run_training(cfg, data, fstar, opts);

    const std::string stem = config.stem().string();
    {
      auto f = open_out(out_dir / (stem + ".run.csv"));
      write_run_csv(h, f);
    }
    {
      auto f = open_out(out_dir / (stem + ".probe.csv"));
      write_probe_csv(h, f);
    }
    const SummaryRow row = summarize(h, stem);
    {
      auto f = open_out(out_dir / (stem + ".summary.csv"));
      write_summary_csv(std::span(&row, 1), f);
    }
    const auto shards = partition_uniform(data, cfg.K);
    const RunCertificate cert =
        certify_run(h, estimate_smoothness_convexity(shards, LossConfig{cfg.lambda, cfg.K}));
    if (cert.curve) {
      auto f = open_out(out_dir / (stem + ".certificate.csv"));
      write_certificate_csv(*cert.curve, f);
    }
    if (!cert.reason.empty()) out << "certificate: " << cert.reason << "\n";
    if (h.sync_failures > 0) {
      err << "memory mirrors diverged in " << h.sync_failures << " agent steps\n";
      return kExitError;
    }
    out << format_summary_table(std::span(&row, 1));
    return kExitOk;
  });
}

int cmd_table(const std::vector<fs::path>& configs, const fs::path& results_dir,
              const std::optional<fs::path>& csv_out, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::vector<SummaryRow> rows;
    for (const auto& c : configs) {
      const fs::path p = results_dir / (c.stem().string() + ".summary.csv");
      std::ifstream in(p);
      if (!in) {
        err << "missing run for config " << c.string() << " (expected " << p.string() << ")\n";
        return kExitError;
      }
      for (auto& r : read_summary_csv(in, p.string())) rows.push_back(std::move(r));
    }
    out << format_summary_table(rows);
    if (csv_out) {
      auto f = open_out(*csv_out);
      write_summary_csv(rows, f);
    }
    return kExitOk;
  });
}

int cmd_fstar(const fs::path& config, const fs::path& out_file, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_run_config(config);
    const Dataset data = load_dataset(cfg);
    const auto shards = partition_uniform(data, cfg.K);
    const FstarResult r = reference_fstar(shards, LossConfig{cfg.lambda, cfg.K}, 0.05);
    auto f = open_out(out_file);
    f << format_real(r.fstar) << "\n";
    f << "# iterations " << r.iterations << " grad_norm " << format_real(r.grad_norm)
      << (r.converged ? "" : " cap_reached") << "\n";
    out << "f* = " << format_real(r.fstar) << " after " << r.iterations << " iterations\n";
    if (!r.converged) {
      err << "warning: iteration cap reached with ||grad f|| = " << format_real(r.grad_norm)
          << "\n";
    }
    return kExitOk;
  });
}

int cmd_plotdata(const std::vector<fs::path>& runs, const fs::path& out_dir, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, [&] {
    for (const auto& p : runs) {
      std::ifstream in(p);
      if (!in) throw std::runtime_error("cannot open " + p.string());
      const auto rows = read_run_csv(in, p.string());
      std::string stem = p.stem().string();
      if (stem.size() > 4 && stem.ends_with(".run")) stem.resize(stem.size() - 4);
      const fs::path target = out_dir / (stem + ".dat");
      auto f = open_out(target);
      write_plot_series(rows, f);
      out << target.string() << "\n";
    }
    return kExitOk;
  });
}

int cmd_synth(const std::string& name, const fs::path& out_file, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    RunConfig cfg;
    cfg.dataset = name;
    if (name.rfind("synthetic:", 0) != 0) cfg.dataset = "synthetic:" + name;
    const Dataset ds = load_dataset(cfg);
    if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
    write_libsvm(ds, out_file);
    out << "wrote " << ds.size() << " samples, d=" << ds.dim << " to " << out_file.string()
        << "\n";
    return kExitOk;
  });
}

int main(int argc, char** argv) {
  CLI::App app{"Simulator for predictive gradient compression with event-triggered residuals"};
  app.require_subcommand(1);

  fs::path run_config, out_dir = ".";
  bool verbose = false;
  auto* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("config", run_config, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out-dir", out_dir, "Directory for result files");
  run->add_flag("-v,--verbose", verbose, "Log progress every 100 iterations");

  std::vector<fs::path> table_configs;
  fs::path results_dir = ".";
  std::optional<fs::path> csv_out;
  auto* table = app.add_subcommand("table", "Summarize finished runs");
  table->add_option("configs", table_configs, "Config files of the runs")->required();
  table->add_option("-r,--results", results_dir, "Directory holding the summary files");
  table->add_option("--csv", csv_out, "Also write the table as CSV");

  fs::path fstar_config, fstar_out;
  auto* fstar = app.add_subcommand("fstar", "Compute the reference optimum f*");
  fstar->add_option("config", fstar_config, "Config file")->required()->check(CLI::ExistingFile);
  fstar->add_option("-o,--out", fstar_out, "Output file (default <stem>.fstar)");

  std::vector<fs::path> plot_runs;
  fs::path plot_dir = ".";
  auto* plot = app.add_subcommand("plotdata", "Loss gap versus cumulative bits series");
  plot->add_option("runs", plot_runs, "Run CSV files");
  plot->add_option("-o,--out-dir", plot_dir, "Directory for .dat files");

  std::string synth_name = "w8a";
  fs::path synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset as LIBSVM text");
  synth->add_option("-o,--out", synth_out, "Output file")->required();
  synth->add_option("--name", synth_name, "w8a or <N>x<d>");

  std::string simd;
  app.add_option("--simd", simd, "Kernel set: scalar or avx2 (default: best available)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadConfig;
  }

  if (!simd.empty()) {
    try {
      kernels::set_active(simd == "scalar" ? kernels::Isa::kScalar
                          : simd == "avx2"  ? kernels::Isa::kAvx2
                                            : throw std::invalid_argument("unknown kernel set '" +
                                                                          simd + "'"));
    } catch (const std::exception& e) {
      std::cerr << e.what() << "\n";
      return kExitBadConfig;
    }
  }

  if (*run) return cmd_run(run_config, out_dir, verbose, std::cout, std::cerr);
  if (*table) return cmd_table(table_configs, results_dir, csv_out, std::cout, std::cerr);
  if (*fstar) {
    if (fstar_out.empty()) fstar_out = fstar_config.parent_path() / (fstar_config.stem().string() + ".fstar");
    return cmd_fstar(fstar_config, fstar_out, std::cout, std::cerr);
  }
  if (*plot) return cmd_plotdata(plot_runs, plot_dir, std::cout, std::cerr);
  if (*synth) return cmd_synth(synth_name, synth_out, std::cout, std::cerr);
  return kExitBadConfig;
}

}  // namespace gradcomp::cli
