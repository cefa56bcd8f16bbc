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

#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mpssim {

/// Simulated time in integer microseconds.
using Time = std::int64_t;
using Duration = std::int64_t;
using VirtAddr = std::uint64_t;

inline constexpr std::uint64_t kPageSize = 4096;
inline constexpr std::uint64_t kBigChunkSize = 2ull << 20;
inline constexpr std::uint64_t kPagesPerBigChunk = kBigChunkSize / kPageSize;

/// Strongly typed identifier. Tags keep pids, channel ids and the like from
/// being mixed up at call sites.
template <typename Tag>
struct Id {
  std::uint64_t value = 0;

  constexpr Id() = default;
  constexpr explicit Id(std::uint64_t v) : value(v) {}

  constexpr bool valid() const { return value != 0; }
  constexpr auto operator<=>(const Id&) const = default;
};

using Pid = Id<struct PidTag>;
using ChannelId = Id<struct ChannelTag>;
using TsgId = Id<struct TsgTag>;
using ContextId = Id<struct ContextTag>;
using AllocHandle = Id<struct AllocTag>;
using RangeId = Id<struct RangeTag>;
using ChunkId = Id<struct ChunkTag>;
using FaultId = Id<struct FaultTag>;

enum class EngineClass : std::uint8_t { sm, ce, pbdma };
enum class AccessType : std::uint8_t { read, write, prefetch };

std::string_view to_string(EngineClass e);
std::string_view to_string(AccessType a);

enum class ErrorCode {
  invalid_argument,
  invalid_size,
  invalid_interval,
  out_of_physical_pages,
  unknown_handle,
  unknown_range,
  kind_mismatch,
  range_not_live,
  no_mps_session,
  unknown_pid,
  unknown_tsg,
  unknown_channel,
  unreachable_trigger,
  api_rejected,
  no_channel_attribution,
  livelock_detected,
  ring_saturated,
  no_snapshot_data,
  kv_pool_exhausted,
  audit_violation,
  parse_error,
  expectation_failed,
};

std::string_view to_string(ErrorCode c);

/// The single exception type thrown by the simulator. Callers switch on
/// code(); the message carries context for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

/// Internal consistency check. Violations are simulator bugs, not user errors.
#define MPSSIM_ASSERT(cond, msg)                                                        \
  do {                                                                                  \
    if (!(cond)) throw std::logic_error(std::string("invariant violated: ") + (msg)); \
  } while (0)

}  // namespace mpssim

template <typename Tag>
struct std::hash<mpssim::Id<Tag>> {
  std::size_t operator()(const mpssim::Id<Tag>& id) const noexcept {
    return std::hash<std::uint64_t>{}(id.value);
  }
};
