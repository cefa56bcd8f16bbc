/* Copyright 2026 The mpssim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end: run scenarios, sweep suites, audit reachability,
// and re-render stored traces.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mpssim/faults/audit.hpp"
#include "mpssim/harness/runner.hpp"

namespace {

namespace fs = std::filesystem;
using namespace mpssim;

constexpr int kExitPass = 0;
constexpr int kExitExpectation = 1;
constexpr int kExitConfig = 2;

std::pair<std::string, std::string> split_kv(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) fail(ErrorCode::parse_error, "expected key=value, got '" + s + "'");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  if (!f) fail(ErrorCode::invalid_argument, "cannot write " + p.string());
  f << text;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::parse_error, path + ": cannot open");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void emit(const harness::Report& rep, const sim::Trace* trace, const std::string& out, bool json) {
  if (!out.empty()) {
    fs::create_directories(out);
    if (trace != nullptr) write_file(fs::path(out) / "trace.log", trace->serialize());
    write_file(fs::path(out) / "report.json", rep.to_json().dump(2) + "\n");
    write_file(fs::path(out) / "report.jsonl", rep.to_json_lines());
    write_file(fs::path(out) / "report.txt", rep.to_text());
  }
  std::cout << (json ? rep.to_json().dump(2) + "\n" : rep.to_text());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic simulator of MPS fault isolation and standby recovery"};
  app.require_subcommand(1);

  harness::RunFlags flags;
  std::vector<std::string> param_args;
  std::uint64_t seed = 0;
  std::string out;
  bool json = false;
  bool serial = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "override the scenario seed");
    sub->add_option("--param", param_args, "override a parameter (key=value, repeatable)");
    sub->add_flag("--no-isolation", flags.no_isolation, "disable fault isolation");
    sub->add_flag("--serial", serial, "run cells one at a time");
    sub->add_flag("--json", json, "print JSON instead of a table");
  };

  std::string scenario_file;
  auto* run = app.add_subcommand("run", "run one scenario file");
  run->add_option("scenario", scenario_file, "scenario file")->required();
  run->add_option("--out", out, "directory for trace.log and report files");
  common(run);

  std::string suite;
  std::vector<std::string> sweeps;
  auto* matrix = app.add_subcommand("matrix", "run a directory of scenarios over a parameter sweep");
  matrix->add_option("suite", suite, "scenario directory or file")->required();
  matrix->add_option("--sweep", sweeps, "sweep axis key=v1,v2,... (repeatable)");
  common(matrix);

  int depth = 3;
  bool broken = false;
  auto* audit = app.add_subcommand("audit", "enumerate trigger compositions and check reachability labels");
  audit->add_option("--depth", depth, "maximum preparatory operations per sequence")->check(CLI::Range(0, 3));
  audit->add_flag("--broken-gates", broken, "disable the copy-engine and PBDMA API checks");
  audit->add_option("--out", out, "directory for report files");
  common(audit);

  std::string trace_file;
  auto* render = app.add_subcommand("render", "rebuild the report of a stored trace");
  render->add_option("trace", trace_file, "trace.log written by run --out")->required();
  render->add_flag("--json", json, "print JSON instead of a table");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!param_args.empty()) {
      for (const auto& p : param_args) flags.params.push_back(split_kv(p));
    }
    if (seed != 0) flags.seed = seed;
    flags.parallel = !serial;

    if (*run) {
      const harness::Scenario sc = harness::load_scenario(scenario_file);
      const harness::RunResult r = harness::run_scenario(sc, flags);
      emit(r.report, &r.trace, out, json);
      return r.report.pass() ? kExitPass : kExitExpectation;
    }
    if (*matrix) {
      std::vector<std::pair<std::string, std::vector<std::string>>> axes;
      for (const auto& s : sweeps) {
        auto [k, v] = split_kv(s);
        axes.emplace_back(k, split_list(v));
      }
      const harness::MatrixReport m = harness::run_matrix(suite, axes, flags);
      std::cout << (json ? m.to_json().dump(2) + "\n" : m.to_text());
      return m.pass() ? kExitPass : kExitExpectation;
    }
    if (*audit) {
      harness::Scenario sc;
      sc.name = "audit";
      sc.kind = harness::Kind::audit;
      sc.depth = depth;
      sc.broken_gates = broken;
      sc.expect["violations"] = "0";
      sc.expect["label_mismatches"] = "0";
      const harness::RunResult r = harness::run_scenario(sc, flags);
      emit(r.report, &r.trace, out, json);
      return r.report.pass() ? kExitPass : kExitExpectation;
    }
    if (*render) {
      const sim::Trace trace = sim::Trace::parse(read_file(trace_file));
      const harness::Report rep = harness::render(trace);
      emit(rep, nullptr, "", json);
      return rep.pass() ? kExitPass : kExitExpectation;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
