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

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mpssim/harness/scenario.hpp"
#include "mpssim/sim/params.hpp"
#include "mpssim/sim/trace.hpp"

namespace mpssim::harness {

/// Command-line overrides applied on top of a scenario file.
struct RunFlags {
  std::optional<std::uint64_t> seed;
  std::vector<std::pair<std::string, std::string>> params;
  bool no_isolation = false;
  bool parallel = true;  // run independent cells concurrently
};

struct Check {
  std::string key;
  std::string expected;
  std::string actual;  // "<missing>" when the report has no such key
  bool pass = false;
};

/// Everything a run reports. Built only from a trace, so rendering a stored
/// trace reproduces it exactly.
struct Report {
  std::string scenario;
  Kind kind = Kind::run;
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  std::map<std::string, std::string> actual;
  std::vector<Check> checks;
  std::string table;  // human-readable summary

  bool pass() const;
  nlohmann::ordered_json to_json() const;
  /// One JSON object per line: every cell, then the summary.
  std::string to_json_lines() const;
  std::string to_text() const;
};

struct RunResult {
  sim::Trace trace;
  Report report;
};

sim::SimParams effective_params(const Scenario& sc, const RunFlags& flags);

/// Executes every cell of the scenario and returns the combined trace.
sim::Trace execute(const Scenario& sc, const RunFlags& flags = {});
Report render(const sim::Trace& trace);
RunResult run_scenario(const Scenario& sc, const RunFlags& flags = {});

/// One scenario of a matrix run.
struct MatrixRow {
  std::string scenario;
  std::string sweep;  // "k=v,..." for the sweep point, empty without a sweep
  bool pass = false;
  std::size_t checks = 0;
  std::size_t failed = 0;
};

struct MatrixReport {
  std::vector<MatrixRow> rows;
  bool pass() const;
  nlohmann::ordered_json to_json() const;
  std::string to_text() const;
};

/// Runs every scenario file under `suite` (a directory or a single file) at
/// every point of the cross product of `sweep` parameter values.
MatrixReport run_matrix(const std::string& suite,
                        const std::vector<std::pair<std::string, std::vector<std::string>>>& sweep,
                        const RunFlags& flags = {});

}  // namespace mpssim::harness
