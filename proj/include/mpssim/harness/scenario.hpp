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

#include "mpssim/common.hpp"
#include "mpssim/exec/gpu_exec.hpp"
#include "mpssim/workload/serve.hpp"

namespace mpssim::harness {

inline constexpr int kSchemaVersion = 1;

enum class Kind : std::uint8_t {
  run,                   // free-form clients and injections
  containment,           // victim verdict per fault, with and without isolation
  recovery,              // active/standby takeover per fault
  isolation_throughput,  // serving trace: baseline vs isolation on vs off
  recovery_sweep,        // crash point x sync interval
  sync_overhead,         // fault-free serving cost per sync interval
  audit,                 // trigger-composition reachability audit
};

std::string_view to_string(Kind k);
std::optional<Kind> kind_by_name(std::string_view name);

enum class WorkloadKind : std::uint8_t { none, victim, serve, pair };

struct ClientDecl {
  std::string name;
  exec::ClientMode mode = exec::ClientMode::mps;
  WorkloadKind workload = WorkloadKind::none;
  int iterations = 20;
  Duration kernel_us = 1000;
  bool kv_sharing = true;
  int line = 0;
};

struct InjectionDecl {
  std::string client;
  std::string trigger;
  std::optional<Time> time;
  std::optional<std::uint64_t> at_tokens;  // fires when `service` has streamed this many tokens
  std::string service;
  bool privileged = false;
  int line = 0;
};

/// A parsed scenario file.
struct Scenario {
  std::string name;
  Kind kind = Kind::run;
  std::optional<std::uint64_t> seed;
  std::vector<std::pair<std::string, std::string>> params;
  bool isolation = true;

  // Serving workload shared by every kind that serves.
  workload::ServeSpec serve;
  std::uint32_t tail_tokens = 32;  // recovery_sweep: tokens generated past the crash point

  // kind: run
  std::vector<ClientDecl> clients;
  std::vector<InjectionDecl> injections;

  // experiment knobs
  std::vector<std::string> faults;
  int iterations = 20;
  Duration kernel_us = 1000;
  Time inject_at = 5000;
  std::uint64_t crash_at_tokens = 20;
  std::vector<std::uint64_t> ks;
  std::vector<std::int64_t> ns;
  bool kv_sharing = true;
  int depth = 3;
  bool broken_gates = false;

  /// Expected report values, keyed by dotted path.
  std::map<std::string, std::string> expect;
};

/// Parses scenario text. Throws Error(parse_error) naming `origin` and the
/// offending line for malformed input, unknown keys, and dangling references.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<scenario>");
Scenario load_scenario(const std::string& path);

/// Prompt tokens of a request trace entry, derived from its id.
std::vector<workload::Token> synth_prompt(workload::RequestId id, std::uint32_t length);

}  // namespace mpssim::harness
