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

#include "mpssim/sim/params.hpp"

#include <charconv>
#include <variant>

namespace mpssim::sim {
namespace {

using Field = std::variant<std::int64_t SimParams::*, std::uint64_t SimParams::*, bool SimParams::*>;

struct Entry {
  const char* name;
  Field field;
};

const Entry kFields[] = {
    {"benign_service_us", &SimParams::benign_service_us},
    {"m1_us", &SimParams::m1_us},
    {"m2_us", &SimParams::m2_us},
    {"m3_us", &SimParams::m3_us},
    {"tlb_invalidate_us", &SimParams::tlb_invalidate_us},
    {"shadow_copy_us", &SimParams::shadow_copy_us},
    {"rc_recovery_us", &SimParams::rc_recovery_us},
    {"time_slice_us", &SimParams::time_slice_us},
    {"num_sms", &SimParams::num_sms},
    {"gpu_pages", &SimParams::gpu_pages},
    {"process_overhead_pages", &SimParams::process_overhead_pages},
    {"dummy_page_size", &SimParams::dummy_page_size},
    {"semaphore_pool_pages", &SimParams::semaphore_pool_pages},
    {"ce_rejects_managed_lifecycle", &SimParams::ce_rejects_managed_lifecycle},
    {"pbdma_rejects_managed", &SimParams::pbdma_rejects_managed},
    {"decode_step_us", &SimParams::decode_step_us},
    {"prefill_step_us", &SimParams::prefill_step_us},
    {"prefill_chunk_tokens", &SimParams::prefill_chunk_tokens},
    {"kv_block_size", &SimParams::kv_block_size},
    {"kv_block_pages", &SimParams::kv_block_pages},
    {"vocab_size", &SimParams::vocab_size},
    {"sync_interval_N", &SimParams::sync_interval_N},
    {"sync_latency_us", &SimParams::sync_latency_us},
    {"wake_warmup_us", &SimParams::wake_warmup_us},
    {"liveness_detect_us", &SimParams::liveness_detect_us},
    {"ring_capacity", &SimParams::ring_capacity},
    {"livelock_budget", &SimParams::livelock_budget},
    {"max_time_us", &SimParams::max_time_us},
    {"check_invariants", &SimParams::check_invariants},
    {"seed", &SimParams::seed},
};

template <typename T>
T parse_number(std::string_view name, std::string_view text) {
  T out{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    fail(ErrorCode::invalid_argument,
         "parameter " + std::string(name) + ": not an integer: '" + std::string(text) + "'");
  }
  return out;
}

bool parse_bool(std::string_view name, std::string_view text) {
  if (text == "true" || text == "1" || text == "on" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "off" || text == "no") return false;
  fail(ErrorCode::invalid_argument,
       "parameter " + std::string(name) + ": not a boolean: '" + std::string(text) + "'");
}

}  // namespace

void SimParams::set(std::string_view name, std::string_view value) {
  for (const auto& e : kFields) {
    if (name != e.name) continue;
    SimParams next = *this;
    std::visit(
        [&](auto member) {
          using T = std::remove_reference_t<decltype(next.*member)>;
          if constexpr (std::is_same_v<T, bool>) {
            next.*member = parse_bool(name, value);
          } else {
            next.*member = parse_number<T>(name, value);
          }
        },
        e.field);
    next.validate();
    *this = next;
    return;
  }
  fail(ErrorCode::invalid_argument, "unknown parameter '" + std::string(name) + "'");
}

std::string SimParams::get(std::string_view name) const {
  for (const auto& e : kFields) {
    if (name != e.name) continue;
    return std::visit(
        [&](auto member) -> std::string {
          using T = std::remove_reference_t<decltype(this->*member)>;
          if constexpr (std::is_same_v<T, const bool>) {
            return this->*member ? "true" : "false";
          } else {
            return std::to_string(this->*member);
          }
        },
        e.field);
  }
  fail(ErrorCode::invalid_argument, "unknown parameter '" + std::string(name) + "'");
}

void SimParams::validate() const {
  auto nonneg = [](std::int64_t v, const char* what) {
    if (v < 0) fail(ErrorCode::invalid_argument, std::string(what) + " must be >= 0");
  };
  auto positive = [](std::int64_t v, const char* what) {
    if (v < 1) fail(ErrorCode::invalid_argument, std::string(what) + " must be >= 1");
  };
  nonneg(benign_service_us, "benign_service_us");
  nonneg(m1_us, "m1_us");
  nonneg(m2_us, "m2_us");
  nonneg(m3_us, "m3_us");
  nonneg(tlb_invalidate_us, "tlb_invalidate_us");
  nonneg(shadow_copy_us, "shadow_copy_us");
  nonneg(rc_recovery_us, "rc_recovery_us");
  nonneg(sync_latency_us, "sync_latency_us");
  nonneg(wake_warmup_us, "wake_warmup_us");
  nonneg(liveness_detect_us, "liveness_detect_us");
  nonneg(process_overhead_pages, "process_overhead_pages");
  positive(time_slice_us, "time_slice_us");
  positive(num_sms, "num_sms");
  positive(gpu_pages, "gpu_pages");
  positive(semaphore_pool_pages, "semaphore_pool_pages");
  positive(decode_step_us, "decode_step_us");
  positive(prefill_step_us, "prefill_step_us");
  positive(prefill_chunk_tokens, "prefill_chunk_tokens");
  positive(kv_block_size, "kv_block_size");
  positive(kv_block_pages, "kv_block_pages");
  positive(vocab_size, "vocab_size");
  if (sync_interval_N < 1) fail(ErrorCode::invalid_interval, "sync_interval_N must be >= 1");
  positive(ring_capacity, "ring_capacity");
  positive(livelock_budget, "livelock_budget");
  nonneg(max_time_us, "max_time_us");
  if (dummy_page_size != static_cast<std::int64_t>(kPageSize)) {
    fail(ErrorCode::invalid_argument, "dummy_page_size must equal the 4096-byte page size");
  }
}

const std::vector<std::string>& SimParams::names() {
  static const std::vector<std::string> out = [] {
    std::vector<std::string> v;
    for (const auto& e : kFields) v.emplace_back(e.name);
    return v;
  }();
  return out;
}

}  // namespace mpssim::sim
