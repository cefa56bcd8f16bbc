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

#include "mpssim/faults/inject.hpp"

namespace mpssim::faults {

std::string_view to_string(Op op) {
  switch (op) {
    case Op::alloc_device: return "alloc_device";
    case Op::alloc_managed: return "alloc_managed";
    case Op::vmm_create_map: return "vmm_create_map";
    case Op::host_write: return "host_write";
    case Op::advise_ro: return "advise_ro";
    case Op::set_access_ro: return "set_access_ro";
    case Op::make_zombie: return "make_zombie";
    case Op::pin: return "pin";
    case Op::kernel_read: return "kernel_read";
    case Op::kernel_write: return "kernel_write";
    case Op::kernel_prefetch: return "kernel_prefetch";
    case Op::memcpy_read: return "memcpy_read";
    case Op::memcpy_write: return "memcpy_write";
    case Op::stream_wait: return "stream_wait";
    case Op::raise_exception: return "raise_exception";
    case Op::hw_fault: return "hw_fault";
  }
  return "?";
}

std::string_view to_string(Target t) {
  switch (t) {
    case Target::inside: return "inside";
    case Target::past_end: return "past_end";
    case Target::unmapped: return "unmapped";
    case Target::semaphore: return "semaphore";
  }
  return "?";
}

std::string Step::describe() const {
  std::string out(to_string(op));
  if (op == Op::raise_exception) return out + "(" + std::to_string(code) + ")";
  if (op == Op::hw_fault) return out + "(" + std::string(to_string(category)) + ")";
  if (!is_alloc(op) && !is_host(op)) out += "@" + std::string(to_string(target));
  return out;
}

bool is_alloc(Op op) { return op == Op::alloc_device || op == Op::alloc_managed || op == Op::vmm_create_map; }

bool is_host(Op op) {
  return op == Op::host_write || op == Op::advise_ro || op == Op::set_access_ro || op == Op::make_zombie ||
         op == Op::pin;
}

bool is_ioctl(Op op) { return op == Op::make_zombie || op == Op::pin; }

EngineClass engine_of(Op op) {
  switch (op) {
    case Op::memcpy_read:
    case Op::memcpy_write: return EngineClass::ce;
    case Op::stream_wait: return EngineClass::pbdma;
    default: return EngineClass::sm;
  }
}

std::vector<Step> trigger_script(ScenarioId scenario, bool privileged) {
  const ScenarioInfo& s = info(scenario);
  if (s.reach == Reachability::unreachable) {
    fail(ErrorCode::unreachable_trigger, std::string(s.name) + " cannot be raised from user space");
  }
  if (s.reach == Reachability::privileged && !privileged) {
    fail(ErrorCode::unreachable_trigger, std::string(s.name) + " needs privileged injection");
  }
  auto step = [](Op op, Target t = Target::inside) { return Step{op, t}; };
  switch (scenario) {
    case ScenarioId::mmu1_oob_sm: return {step(Op::alloc_device), step(Op::kernel_write, Target::past_end)};
    case ScenarioId::mmu2_am_cpu_sm:
      return {step(Op::alloc_managed), step(Op::host_write), step(Op::advise_ro), step(Op::kernel_write)};
    case ScenarioId::mmu3_am_gpu_sm:
      return {step(Op::alloc_managed), step(Op::kernel_read), step(Op::advise_ro), step(Op::kernel_write)};
    case ScenarioId::mmu4_am_vmm_sm:
      return {step(Op::vmm_create_map), step(Op::set_access_ro), step(Op::kernel_write)};
    case ScenarioId::mmu5_zombie_sm:
      return {step(Op::alloc_managed), step(Op::kernel_write), step(Op::make_zombie), step(Op::kernel_read)};
    case ScenarioId::mmu6_nonmigratable_sm:
      return {step(Op::alloc_managed), step(Op::host_write), step(Op::pin), step(Op::kernel_read)};
    case ScenarioId::mmu7_oob_ce: return {step(Op::alloc_device), step(Op::memcpy_write, Target::past_end)};
    case ScenarioId::mmu8_am_ce: return {step(Op::alloc_managed), step(Op::advise_ro), step(Op::memcpy_write)};
    case ScenarioId::mmu11_oob_pbdma: return {step(Op::stream_wait, Target::unmapped)};
    case ScenarioId::benign_demand_paging_sm: return {step(Op::alloc_managed), step(Op::kernel_read)};
    case ScenarioId::benign_invalid_prefetch_sm: return {step(Op::kernel_prefetch, Target::unmapped)};
    case ScenarioId::benign_page_fault_ce: return {step(Op::alloc_managed), step(Op::memcpy_read)};
    case ScenarioId::benign_page_fault_pbdma: return {step(Op::stream_wait, Target::semaphore)};
    default: break;
  }
  if (is_sm_exception(scenario)) {
    Step st{Op::raise_exception};
    st.code = exception_code(scenario);
    return {st};
  }
  if (is_parse_time(scenario)) {
    Step st{Op::hw_fault};
    st.category = static_cast<ParseTimeCategory>(static_cast<int>(scenario) -
                                                  static_cast<int>(ScenarioId::parse_mmu_structure) + 1);
    return {st};
  }
  fail(ErrorCode::unreachable_trigger, "no trigger for " + std::string(s.name));
}

std::vector<ScenarioId> user_triggers() {
  std::vector<ScenarioId> out;
  for (const auto& s : scenario_table()) {
    if (s.reach == Reachability::user || s.reach == Reachability::ioctl) out.push_back(s.id);
  }
  return out;
}

}  // namespace mpssim::faults
