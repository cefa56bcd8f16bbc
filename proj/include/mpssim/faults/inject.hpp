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
#include <string>
#include <string_view>
#include <vector>

#include "mpssim/common.hpp"
#include "mpssim/fault_seed.hpp"
#include "mpssim/faults/taxonomy.hpp"

namespace mpssim::faults {

/// Host-visible operations a fault-injection script is made of. The audit
/// composes the same alphabet.
enum class Op : std::uint8_t {
  alloc_device,     // cudaMalloc
  alloc_managed,    // cudaMallocManaged
  vmm_create_map,   // cuMemCreate + cuMemMap
  host_write,       // CPU store
  advise_ro,        // cudaMemAdvise(read-mostly)
  set_access_ro,    // cuMemSetAccess(read-only)
  make_zombie,      // debug ioctl: de-register backing
  pin,              // debug ioctl: pin to host memory
  kernel_read,      // SM load
  kernel_write,     // SM store
  kernel_prefetch,  // SM prefetch
  memcpy_read,      // CE copy out of the target
  memcpy_write,     // CE copy into the target
  stream_wait,      // PBDMA semaphore acquire
  raise_exception,  // SM exception command
  hw_fault,         // privileged parse-time fault
};

/// Address a device-side step touches, relative to the current buffer.
enum class Target : std::uint8_t { inside, past_end, unmapped, semaphore };

struct Step {
  Op op = Op::kernel_read;
  Target target = Target::inside;
  int code = 0;  // exception code for raise_exception
  ParseTimeCategory category = ParseTimeCategory::mmu_structure;
  std::uint64_t bytes = 2 * kPageSize;  // allocation size for alloc ops

  std::string describe() const;
};

std::string_view to_string(Op op);
std::string_view to_string(Target t);

bool is_alloc(Op op);
bool is_host(Op op);
bool is_ioctl(Op op);
EngineClass engine_of(Op op);

/// A VA that no allocation ever covers.
inline constexpr VirtAddr kUnmappedVa = 0x7f0000000000ull;

/// The operation sequence that deterministically raises `scenario`.
/// Throws UnreachableTrigger for gray rows, and for parse-time rows unless
/// `privileged` is set.
std::vector<Step> trigger_script(ScenarioId scenario, bool privileged = false);

/// Scenarios with a user-level trigger: the nine reachable MMU rows, the
/// five SM exceptions, and the four benign rows.
std::vector<ScenarioId> user_triggers();

}  // namespace mpssim::faults
