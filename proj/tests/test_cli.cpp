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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "gradcomp/cli.hpp"
#include "gradcomp/report.hpp"

namespace fs = std::filesystem;
using namespace gradcomp;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("gradcomp_cli_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(GRADCOMP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kBase =
    "dataset = synthetic:2000x50\nK = 4\ngamma = 0.05\nhorizon = 50\nfstar = 0\n"
    "target_gap = -inf\n";

}  // namespace

TEST_CASE("run writes deterministic result files") {
  TempDir tmp;
  write(tmp.path / "p.cfg", std::string(kBase) + "method = proposed\nmax_iters = 30\nprobe_every = 10\nprobe_samples = 20\n");
  std::ostringstream out, err;
  REQUIRE(cli::cmd_run(tmp.path / "p.cfg", tmp.path / "a", false, out, err) == cli::kExitOk);
  REQUIRE(cli::cmd_run(tmp.path / "p.cfg", tmp.path / "b", false, out, err) == cli::kExitOk);
  for (const char* f : {"p.run.csv", "p.probe.csv", "p.summary.csv"}) {
    CHECK(fs::exists(tmp.path / "a" / f));
    CHECK(slurp(tmp.path / "a" / f) == slurp(tmp.path / "b" / f));
  }
  std::ifstream run(tmp.path / "a" / "p.run.csv");
  CHECK(read_run_csv(run, "p").size() == 30);
  std::ifstream probe(tmp.path / "a" / "p.probe.csv");
  std::string line;
  int lines = 0;
  while (std::getline(probe, line)) ++lines;
  CHECK(lines == 1 + 3);
}

TEST_CASE("max_iters = 1 gives a one-row CSV") {
  TempDir tmp;
  write(tmp.path / "one.cfg", std::string(kBase) + "method = grad_diff\nmax_iters = 1\n");
  std::ostringstream out, err;
  REQUIRE(cli::cmd_run(tmp.path / "one.cfg", tmp.path, false, out, err) == cli::kExitOk);
  std::ifstream run(tmp.path / "one.run.csv");
  CHECK(read_run_csv(run, "one").size() == 1);
}

TEST_CASE("table collects summaries and names missing runs") {
  TempDir tmp;
  write(tmp.path / "a.cfg", std::string(kBase) + "method = grad_diff\nmax_iters = 5\n");
  write(tmp.path / "b.cfg", std::string(kBase) + "method = ef21\nL = 2\nmax_iters = 5\n");
  std::ostringstream out, err;
  REQUIRE(cli::cmd_run(tmp.path / "a.cfg", tmp.path, false, out, err) == 0);
  REQUIRE(cli::cmd_run(tmp.path / "b.cfg", tmp.path, false, out, err) == 0);
  std::ostringstream table;
  CHECK(cli::cmd_table({tmp.path / "a.cfg", tmp.path / "b.cfg"}, tmp.path, tmp.path / "t.csv",
                       table, err) == 0);
  CHECK(table.str().find("grad_diff") != std::string::npos);
  CHECK(table.str().find("L=2") != std::string::npos);
  std::ifstream csv(tmp.path / "t.csv");
  CHECK(read_summary_csv(csv, "t").size() == 2);

  std::ostringstream err2;
  CHECK(cli::cmd_table({tmp.path / "missing.cfg"}, tmp.path, std::nullopt, table, err2) ==
        cli::kExitError);
  CHECK(err2.str().find("missing.cfg") != std::string::npos);
}

TEST_CASE("plotdata writes monotone series") {
  TempDir tmp;
  write(tmp.path / "g.cfg", std::string(kBase) + "method = laq\nmax_iters = 20\n");
  std::ostringstream out, err;
  REQUIRE(cli::cmd_run(tmp.path / "g.cfg", tmp.path, false, out, err) == 0);
  CHECK(cli::cmd_plotdata({tmp.path / "g.run.csv"}, tmp.path / "plot", out, err) == 0);
  std::ifstream dat(tmp.path / "plot" / "g.dat");
  std::string header;
  std::getline(dat, header);
  CHECK(header == "# cumulative_bits loss_gap");
  double bits = 0, gap = 0, prev = -1;
  int rows = 0;
  while (dat >> bits >> gap) {
    CHECK(bits >= prev);
    prev = bits;
    ++rows;
  }
  CHECK(rows == 20);
  CHECK(cli::cmd_plotdata({}, tmp.path / "none", out, err) == 0);
  CHECK_FALSE(fs::exists(tmp.path / "none"));
}

TEST_CASE("fstar is deterministic") {
  TempDir tmp;
  write(tmp.path / "f.cfg", "dataset = synthetic:1000x20\nmethod = gd\nK = 4\n");
  std::ostringstream out, err;
  REQUIRE(cli::cmd_fstar(tmp.path / "f.cfg", tmp.path / "1.fstar", out, err) == 0);
  REQUIRE(cli::cmd_fstar(tmp.path / "f.cfg", tmp.path / "2.fstar", out, err) == 0);
  CHECK(slurp(tmp.path / "1.fstar") == slurp(tmp.path / "2.fstar"));
  write(tmp.path / "r.cfg", "dataset = synthetic:1000x20\nmethod = gd\nK = 4\nfstar = 1.fstar\nmax_iters = 3000\n");
  REQUIRE(cli::cmd_run(tmp.path / "r.cfg", tmp.path, false, out, err) == 0);
  std::ifstream run(tmp.path / "r.run.csv");
  const auto rows = read_run_csv(run, "r");
  CHECK(rows.back().loss_gap <= 1e-5);
}

TEST_CASE("exit codes of the binary") {
  TempDir tmp;
  const std::string dir = tmp.path.string();
  write(tmp.path / "ok.cfg", std::string(kBase) + "method = gd\nmax_iters = 3\n");
  write(tmp.path / "bad.cfg", "dataset = x\nmethod = nope\n");
  write(tmp.path / "div.cfg",
        "dataset = synthetic:2000x50\nK = 4\nmethod = gd\ngamma = 500\nmax_iters = 200\nfstar = 30\n");
  write(tmp.path / "nodata.cfg", "dataset = no_such_file.libsvm\nmethod = gd\nfstar = 0\n");
  CHECK(run_binary("run " + dir + "/ok.cfg -o " + dir) == 0);
  CHECK(run_binary("--simd scalar run " + dir + "/ok.cfg -o " + dir + "/s") == 0);
  CHECK(run_binary("run " + dir + "/bad.cfg") == 2);
  CHECK(run_binary("run " + dir + "/div.cfg -o " + dir) == 3);
  CHECK(run_binary("run " + dir + "/nodata.cfg -o " + dir) == 1);
  CHECK(run_binary("table " + dir + "/absent.cfg -r " + dir) == 1);
  CHECK(run_binary("frobnicate") == 2);
  CHECK(run_binary("--simd sse run " + dir + "/ok.cfg") == 2);
  CHECK(run_binary("synth --name 50x5 -o " + dir + "/d.libsvm") == 0);
  CHECK(fs::exists(tmp.path / "d.libsvm"));
}
