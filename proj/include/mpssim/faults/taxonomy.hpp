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
#include <optional>
#include <string_view>
#include <vector>

#include "mpssim/common.hpp"
#include "mpssim/fault_seed.hpp"

namespace mpssim::mem {
class GpuMemory;
}

namespace mpssim::faults {

enum class ScenarioId : std::uint8_t {
  mmu1_oob_sm,
  mmu2_am_cpu_sm,
  mmu3_am_gpu_sm,
  mmu4_am_vmm_sm,
  mmu5_zombie_sm,
  mmu6_nonmigratable_sm,
  mmu7_oob_ce,
  mmu8_am_ce,
  mmu9_zombie_ce,
  mmu10_nonmigratable_ce,
  mmu11_oob_pbdma,
  mmu12_am_pbdma,
  mmu13_zombie_pbdma,
  mmu14_nonmigratable_pbdma,
  benign_demand_paging_sm,
  benign_invalid_prefetch_sm,
  benign_page_fault_ce,
  benign_page_fault_pbdma,
  sm_exc2,
  sm_exc4,
  sm_exc5,
  sm_exc6,
  sm_exc7,
  parse_mmu_structure,
  parse_context_state,
  parse_privilege,
  parse_memory_attribute,
  parse_data_corruption,
};

inline constexpr std::size_t kScenarioCount = 28;

enum class Reachability : std::uint8_t { user, ioctl, unreachable, privileged };
enum class Replayability : std::uint8_t { replayable, non_replayable, na };
enum class FatalityStage : std::uint8_t { parse_time, deferred, na };
enum class Serviceability : std::uint8_t { serviceable, non_serviceable, na };
enum class Propagation : std::uint8_t { yes, contained, no, na };
enum class Mechanism : std::uint8_t { none, m1, m2, m3 };

std::string_view to_string(Reachability r);
std::string_view to_string(Replayability r);
std::string_view to_string(FatalityStage s);
std::string_view to_string(Serviceability s);
std::string_view to_string(Propagation p);
std::string_view to_string(Mechanism m);

struct Verdicts {
  Replayability replayable = Replayability::na;
  FatalityStage stage = FatalityStage::na;
  Serviceability serviceable = Serviceability::na;
  Propagation propagates = Propagation::na;
  bool operator==(const Verdicts&) const = default;
};

struct ScenarioInfo {
  ScenarioId id;
  std::string_view name;  // stable, used in scenario files and reports
  int number;             // numbered row for MMU faults, 0 otherwise
  EngineClass engine;
  Reachability reach;
  Verdicts verdicts;
  Mechanism mechanism;  // isolation mechanism for handled rows
  std::string_view title;
};

const std::vector<ScenarioInfo>& scenario_table();
const ScenarioInfo& info(ScenarioId id);
std::optional<ScenarioId> scenario_by_name(std::string_view name);
std::optional<ScenarioId> scenario_by_number(int number);

bool is_mmu(ScenarioId id);
bool is_benign(ScenarioId id);
bool is_sm_exception(ScenarioId id);
bool is_parse_time(ScenarioId id);

/// Exception code (2, 4, 5, 6, 7) of an SM exception scenario.
int exception_code(ScenarioId id);
/// Throws InvalidArgument for codes outside the five SM exceptions.
ScenarioId sm_exception_scenario(int code);
ScenarioId parse_time_scenario(ParseTimeCategory c);

/// One detected fault event.
struct FaultRecord {
  FaultId id;
  FaultSeed seed;
  std::optional<ChannelId> channel;  // MMU path only
  std::optional<Pid> pid;            // resolved owner, MMU path only
  ScenarioId scenario = ScenarioId::mmu1_oob_sm;
  Verdicts verdicts;
  Time detected_at = 0;
  std::optional<int> exception_code;
  std::optional<std::uint32_t> sm_id;
};

/// Pure classification of an MMU seed against the current memory view.
ScenarioId classify_mmu(const FaultSeed& seed, const mem::GpuMemory& view);
/// Verdicts of a scenario as raised by `engine`. Parse-time rows take their
/// replayability from the raising engine; every other row is fixed.
Verdicts verdicts_for(ScenarioId id, EngineClass engine);

}  // namespace mpssim::faults
