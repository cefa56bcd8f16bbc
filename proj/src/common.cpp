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

#include "mpssim/common.hpp"
#include "mpssim/fault_seed.hpp"

namespace mpssim {

std::string_view to_string(EngineClass e) {
  switch (e) {
    case EngineClass::sm: return "sm";
    case EngineClass::ce: return "ce";
    case EngineClass::pbdma: return "pbdma";
  }
  return "?";
}

std::string_view to_string(AccessType a) {
  switch (a) {
    case AccessType::read: return "read";
    case AccessType::write: return "write";
    case AccessType::prefetch: return "prefetch";
  }
  return "?";
}

std::string_view to_string(ParseTimeCategory c) {
  switch (c) {
    case ParseTimeCategory::mmu_structure: return "mmu_structure";
    case ParseTimeCategory::context_state: return "context_state";
    case ParseTimeCategory::privilege: return "privilege";
    case ParseTimeCategory::memory_attribute: return "memory_attribute";
    case ParseTimeCategory::data_corruption: return "data_corruption";
  }
  return "?";
}

std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::invalid_size: return "InvalidSize";
    case ErrorCode::invalid_interval: return "InvalidInterval";
    case ErrorCode::out_of_physical_pages: return "OutOfPhysicalPages";
    case ErrorCode::unknown_handle: return "UnknownHandle";
    case ErrorCode::unknown_range: return "UnknownRange";
    case ErrorCode::kind_mismatch: return "KindMismatch";
    case ErrorCode::range_not_live: return "RangeNotLive";
    case ErrorCode::no_mps_session: return "NoMpsSession";
    case ErrorCode::unknown_pid: return "UnknownPid";
    case ErrorCode::unknown_tsg: return "UnknownTsg";
    case ErrorCode::unknown_channel: return "UnknownChannel";
    case ErrorCode::unreachable_trigger: return "UnreachableTrigger";
    case ErrorCode::api_rejected: return "ApiRejected";
    case ErrorCode::no_channel_attribution: return "NoChannelAttribution";
    case ErrorCode::livelock_detected: return "LivelockDetected";
    case ErrorCode::ring_saturated: return "RingSaturated";
    case ErrorCode::no_snapshot_data: return "NoSnapshotData";
    case ErrorCode::kv_pool_exhausted: return "KvPoolExhausted";
    case ErrorCode::audit_violation: return "AuditViolation";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::expectation_failed: return "ExpectationFailed";
  }
  return "?";
}

}  // namespace mpssim
