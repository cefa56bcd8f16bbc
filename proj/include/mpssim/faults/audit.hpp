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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpssim/faults/inject.hpp"
#include "mpssim/faults/taxonomy.hpp"
#include "mpssim/sim/params.hpp"

namespace mpssim::faults {

struct AuditConfig {
  int depth = 3;  // preparation steps before the terminal access
  sim::SimParams params;
};

/// Per-scenario tally over every composed sequence.
struct AuditCell {
  std::uint64_t hits = 0;
  std::uint64_t user_hits = 0;  // from sequences without debug ioctls
  std::optional<std::string> witness;  // first sequence that raised it
};

struct AuditReport {
  std::uint64_t sequences = 0;
  std::array<AuditCell, kScenarioCount> cells{};
  /// Gray rows that some sequence raised.
  std::vector<ScenarioId> violations;
  /// Reachable rows whose derived label disagrees with the table.
  std::vector<ScenarioId> label_mismatches;

  const AuditCell& cell(ScenarioId s) const { return cells[static_cast<std::size_t>(s)]; }
  /// Label implied by the observations alone.
  Reachability derived(ScenarioId s) const;
  bool ok() const { return violations.empty() && label_mismatches.empty(); }
};

/// Preparation alphabet the audit composes.
const std::vector<Op>& audit_prep_ops();
/// Every preparation prefix of length 0..depth, each followed by every
/// terminal access, plus the SM exception commands.
std::vector<std::vector<Step>> audit_sequences(int depth);

/// Scenarios raised by running one sequence in a fresh single-client world.
std::vector<ScenarioId> run_sequence(const sim::SimParams& params, const std::vector<Step>& seq);

/// Parallel audit. Results are reduced in sequence order, so the report is
/// identical to audit_serial's for any thread count.
AuditReport audit(const AuditConfig& cfg);
AuditReport audit_serial(const AuditConfig& cfg);

std::string describe(const std::vector<Step>& seq);

}  // namespace mpssim::faults
