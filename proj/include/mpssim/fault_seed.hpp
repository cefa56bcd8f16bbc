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

#include "mpssim/common.hpp"

namespace mpssim {

/// Hardware fault types that fail the driver's initial parse. Grouped by
/// cause; the pipeline treats every category the same way.
enum class ParseTimeCategory : std::uint8_t {
  mmu_structure = 1,
  context_state = 2,
  privilege = 3,
  memory_attribute = 4,
  data_corruption = 5,
};

std::string_view to_string(ParseTimeCategory c);

/// What the MMU knows about a failed translation. Produced by
/// mem::GpuMemory::resolve_va and consumed by faults::classify.
struct FaultSeed {
  VirtAddr va = 0;
  AccessType access = AccessType::read;
  EngineClass engine = EngineClass::sm;
  ContextId space;
  std::optional<ChannelId> channel;  // present iff raised on the MMU path
  std::optional<ParseTimeCategory> hw_fault;
};

}  // namespace mpssim
