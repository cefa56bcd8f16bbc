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

#include "mpssim/faults/taxonomy.hpp"

#include "mpssim/mem/gpu_mem.hpp"

namespace mpssim::faults {
namespace {

using E = EngineClass;
using R = Reachability;
using M = Mechanism;

constexpr Verdicts kReplayableFatal{Replayability::replayable, FatalityStage::deferred,
                                    Serviceability::non_serviceable, Propagation::yes};
constexpr Verdicts kCeFatal{Replayability::non_replayable, FatalityStage::deferred, Serviceability::non_serviceable,
                            Propagation::contained};
constexpr Verdicts kPbdmaFatal{Replayability::non_replayable, FatalityStage::deferred,
                               Serviceability::non_serviceable, Propagation::yes};
constexpr Verdicts kGray{Replayability::non_replayable, FatalityStage::deferred, Serviceability::non_serviceable,
                         Propagation::na};
constexpr Verdicts kBenignReplayable{Replayability::replayable, FatalityStage::deferred, Serviceability::serviceable,
                                     Propagation::no};
constexpr Verdicts kBenignNonReplayable{Replayability::non_replayable, FatalityStage::deferred,
                                        Serviceability::serviceable, Propagation::no};
constexpr Verdicts kSmException{Replayability::na, FatalityStage::na, Serviceability::na, Propagation::yes};
constexpr Verdicts kParseTime{Replayability::replayable, FatalityStage::parse_time, Serviceability::non_serviceable,
                              Propagation::na};

const std::vector<ScenarioInfo> kTable = {
    {ScenarioId::mmu1_oob_sm, "mmu.oob.sm", 1, E::sm, R::user, kReplayableFatal, M::m1, "Out-of-bounds access"},
    {ScenarioId::mmu2_am_cpu_sm, "mmu.am_cpu.sm", 2, E::sm, R::user, kReplayableFatal, M::m2,
     "Access mismatch (CPU-resident)"},
    {ScenarioId::mmu3_am_gpu_sm, "mmu.am_gpu.sm", 3, E::sm, R::user, kReplayableFatal, M::m2,
     "Access mismatch (GPU-resident)"},
    {ScenarioId::mmu4_am_vmm_sm, "mmu.am_vmm.sm", 4, E::sm, R::user, kReplayableFatal, M::m3,
     "Access mismatch (VMM memory)"},
    {ScenarioId::mmu5_zombie_sm, "mmu.zombie.sm", 5, E::sm, R::ioctl, kReplayableFatal, M::m2,
     "Zombie range access"},
    {ScenarioId::mmu6_nonmigratable_sm, "mmu.nonmigratable.sm", 6, E::sm, R::ioctl, kReplayableFatal, M::m2,
     "Non-migratable range access"},
    {ScenarioId::mmu7_oob_ce, "mmu.oob.ce", 7, E::ce, R::user, kCeFatal, M::m1, "Out-of-bounds access"},
    {ScenarioId::mmu8_am_ce, "mmu.am.ce", 8, E::ce, R::user, kCeFatal, M::m2, "Access mismatch"},
    {ScenarioId::mmu9_zombie_ce, "mmu.zombie.ce", 9, E::ce, R::unreachable, kGray, M::m2, "Zombie range"},
    {ScenarioId::mmu10_nonmigratable_ce, "mmu.nonmigratable.ce", 10, E::ce, R::unreachable, kGray, M::m2,
     "Non-migratable"},
    {ScenarioId::mmu11_oob_pbdma, "mmu.oob.pbdma", 11, E::pbdma, R::user, kPbdmaFatal, M::m1,
     "Out-of-bounds access"},
    {ScenarioId::mmu12_am_pbdma, "mmu.am.pbdma", 12, E::pbdma, R::unreachable, kGray, M::m2, "Access mismatch"},
    {ScenarioId::mmu13_zombie_pbdma, "mmu.zombie.pbdma", 13, E::pbdma, R::unreachable, kGray, M::m2,
     "Zombie range"},
    {ScenarioId::mmu14_nonmigratable_pbdma, "mmu.nonmigratable.pbdma", 14, E::pbdma, R::unreachable, kGray, M::m2,
     "Non-migratable"},
    {ScenarioId::benign_demand_paging_sm, "benign.demand_paging.sm", 0, E::sm, R::user, kBenignReplayable, M::none,
     "Page fault (demand paging)"},
    {ScenarioId::benign_invalid_prefetch_sm, "benign.invalid_prefetch.sm", 0, E::sm, R::user, kBenignReplayable,
     M::none, "Invalid prefetch"},
    {ScenarioId::benign_page_fault_ce, "benign.page_fault.ce", 0, E::ce, R::user, kBenignNonReplayable, M::none,
     "Page fault"},
    {ScenarioId::benign_page_fault_pbdma, "benign.page_fault.pbdma", 0, E::pbdma, R::user, kBenignNonReplayable,
     M::none, "Page fault"},
    {ScenarioId::sm_exc2, "sm.exc2.lane_user_stack_overflow", 0, E::sm, R::user, kSmException, M::none,
     "Lane user stack overflow"},
    {ScenarioId::sm_exc4, "sm.exc4.illegal_instruction", 0, E::sm, R::user, kSmException, M::none,
     "Illegal instruction"},
    {ScenarioId::sm_exc5, "sm.exc5.shared_local_oob", 0, E::sm, R::user, kSmException, M::none,
     "Shared/local out-of-bounds"},
    {ScenarioId::sm_exc6, "sm.exc6.misaligned_address", 0, E::sm, R::user, kSmException, M::none,
     "Misaligned address"},
    {ScenarioId::sm_exc7, "sm.exc7.invalid_address_space", 0, E::sm, R::user, kSmException, M::none,
     "Invalid address space"},
    {ScenarioId::parse_mmu_structure, "parse.mmu_structure", 0, E::sm, R::privileged, kParseTime, M::none,
     "MMU structure error"},
    {ScenarioId::parse_context_state, "parse.context_state", 0, E::sm, R::privileged, kParseTime, M::none,
     "Context state error"},
    {ScenarioId::parse_privilege, "parse.privilege", 0, E::sm, R::privileged, kParseTime, M::none,
     "Privilege violation"},
    {ScenarioId::parse_memory_attribute, "parse.memory_attribute", 0, E::sm, R::privileged, kParseTime, M::none,
     "Memory attribute error"},
    {ScenarioId::parse_data_corruption, "parse.data_corruption", 0, E::sm, R::privileged, kParseTime, M::none,
     "Data corruption"},
};

// Row index by engine for the four deferred base conditions.
ScenarioId by_engine(EngineClass e, ScenarioId sm, ScenarioId ce, ScenarioId pbdma) {
  switch (e) {
    case E::sm: return sm;
    case E::ce: return ce;
    case E::pbdma: return pbdma;
  }
  return sm;
}

}  // namespace

std::string_view to_string(Reachability r) {
  switch (r) {
    case R::user: return "user";
    case R::ioctl: return "ioctl";
    case R::unreachable: return "unreachable";
    case R::privileged: return "privileged";
  }
  return "?";
}

std::string_view to_string(Replayability r) {
  switch (r) {
    case Replayability::replayable: return "replayable";
    case Replayability::non_replayable: return "non-replayable";
    case Replayability::na: return "n/a";
  }
  return "?";
}

std::string_view to_string(FatalityStage s) {
  switch (s) {
    case FatalityStage::parse_time: return "parse-time";
    case FatalityStage::deferred: return "deferred";
    case FatalityStage::na: return "n/a";
  }
  return "?";
}

std::string_view to_string(Serviceability s) {
  switch (s) {
    case Serviceability::serviceable: return "serviceable";
    case Serviceability::non_serviceable: return "non-serviceable";
    case Serviceability::na: return "n/a";
  }
  return "?";
}

std::string_view to_string(Propagation p) {
  switch (p) {
    case Propagation::yes: return "yes";
    case Propagation::contained: return "contained";
    case Propagation::no: return "no";
    case Propagation::na: return "n/a";
  }
  return "?";
}

std::string_view to_string(Mechanism m) {
  switch (m) {
    case M::none: return "none";
    case M::m1: return "M1";
    case M::m2: return "M2";
    case M::m3: return "M3";
  }
  return "?";
}

const std::vector<ScenarioInfo>& scenario_table() { return kTable; }

const ScenarioInfo& info(ScenarioId id) { return kTable[static_cast<std::size_t>(id)]; }

std::optional<ScenarioId> scenario_by_name(std::string_view name) {
  for (const auto& s : kTable) {
    if (s.name == name) return s.id;
  }
  return std::nullopt;
}

std::optional<ScenarioId> scenario_by_number(int number) {
  if (number < 1 || number > 14) return std::nullopt;
  return static_cast<ScenarioId>(number - 1);
}

bool is_mmu(ScenarioId id) { return id <= ScenarioId::benign_page_fault_pbdma || is_parse_time(id); }
bool is_benign(ScenarioId id) {
  return id >= ScenarioId::benign_demand_paging_sm && id <= ScenarioId::benign_page_fault_pbdma;
}
bool is_sm_exception(ScenarioId id) { return id >= ScenarioId::sm_exc2 && id <= ScenarioId::sm_exc7; }
bool is_parse_time(ScenarioId id) { return id >= ScenarioId::parse_mmu_structure; }

int exception_code(ScenarioId id) {
  switch (id) {
    case ScenarioId::sm_exc2: return 2;
    case ScenarioId::sm_exc4: return 4;
    case ScenarioId::sm_exc5: return 5;
    case ScenarioId::sm_exc6: return 6;
    case ScenarioId::sm_exc7: return 7;
    default: fail(ErrorCode::invalid_argument, "not an SM exception: " + std::string(info(id).name));
  }
}

ScenarioId sm_exception_scenario(int code) {
  switch (code) {
    case 2: return ScenarioId::sm_exc2;
    case 4: return ScenarioId::sm_exc4;
    case 5: return ScenarioId::sm_exc5;
    case 6: return ScenarioId::sm_exc6;
    case 7: return ScenarioId::sm_exc7;
    default: fail(ErrorCode::invalid_argument, "unknown SM exception code " + std::to_string(code));
  }
}

ScenarioId parse_time_scenario(ParseTimeCategory c) {
  return static_cast<ScenarioId>(static_cast<int>(ScenarioId::parse_mmu_structure) + static_cast<int>(c) - 1);
}

Verdicts verdicts_for(ScenarioId id, EngineClass engine) {
  Verdicts v = info(id).verdicts;
  if (is_parse_time(id)) {
    v.replayable = engine == E::sm ? Replayability::replayable : Replayability::non_replayable;
  }
  return v;
}

ScenarioId classify_mmu(const FaultSeed& seed, const mem::GpuMemory& view) {
  const EngineClass e = seed.engine;
  if (seed.hw_fault) return parse_time_scenario(*seed.hw_fault);
  if (seed.access == AccessType::prefetch) return ScenarioId::benign_invalid_prefetch_sm;

  const mem::VaRange* r = view.find_range(seed.space, seed.va);
  if (r == nullptr) {
    return by_engine(e, ScenarioId::mmu1_oob_sm, ScenarioId::mmu7_oob_ce, ScenarioId::mmu11_oob_pbdma);
  }
  const bool write = seed.access == AccessType::write;
  if (r->kind == mem::RangeKind::external) {
    // Reads of an external range always translate; only protection can fail.
    return by_engine(e, ScenarioId::mmu4_am_vmm_sm, ScenarioId::mmu8_am_ce, ScenarioId::mmu12_am_pbdma);
  }
  if (r->lifecycle == mem::Lifecycle::zombie) {
    return by_engine(e, ScenarioId::mmu5_zombie_sm, ScenarioId::mmu9_zombie_ce, ScenarioId::mmu13_zombie_pbdma);
  }
  if (!r->migratable) {
    return by_engine(e, ScenarioId::mmu6_nonmigratable_sm, ScenarioId::mmu10_nonmigratable_ce,
                     ScenarioId::mmu14_nonmigratable_pbdma);
  }
  const mem::ManagedPage& pg = r->pages[r->page_index(seed.va)];
  if (write && pg.protection == mem::Protection::read_only) {
    if (e == E::sm) {
      return pg.residency == mem::Residency::gpu ? ScenarioId::mmu3_am_gpu_sm : ScenarioId::mmu2_am_cpu_sm;
    }
    return by_engine(e, ScenarioId::mmu2_am_cpu_sm, ScenarioId::mmu8_am_ce, ScenarioId::mmu12_am_pbdma);
  }
  return by_engine(e, ScenarioId::benign_demand_paging_sm, ScenarioId::benign_page_fault_ce,
                   ScenarioId::benign_page_fault_pbdma);
}

}  // namespace mpssim::faults
