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

namespace mpssim::sim {

/// Every tunable of a run. Latencies are integer microseconds; the handling
/// latencies default to measured values rounded to the nearest microsecond.
struct SimParams {
  // Fault handling path latencies.
  Duration benign_service_us = 226;
  Duration m1_us = 131;
  Duration m2_us = 2780;
  Duration m3_us = 1700;
  Duration tlb_invalidate_us = 0;
  Duration shadow_copy_us = 0;
  Duration rc_recovery_us = 0;

  // Execution model.
  Duration time_slice_us = 1000;
  std::int64_t num_sms = 142;

  // Memory model.
  std::int64_t gpu_pages = 12058624;  // 46 GiB of 4 KiB pages
  std::int64_t process_overhead_pages = 148224;  // 579 MiB
  std::int64_t dummy_page_size = 4096;
  std::int64_t semaphore_pool_pages = 1;
  bool ce_rejects_managed_lifecycle = true;
  bool pbdma_rejects_managed = true;

  // Serving workload.
  Duration decode_step_us = 10000;
  Duration prefill_step_us = 10000;
  std::int64_t prefill_chunk_tokens = 512;
  std::int64_t kv_block_size = 16;
  std::int64_t kv_block_pages = 16;
  std::int64_t vocab_size = 32768;

  // Recovery protocol.
  std::int64_t sync_interval_N = 16;
  Duration sync_latency_us = 8;
  Duration wake_warmup_us = 30000;
  Duration liveness_detect_us = 0;
  std::int64_t ring_capacity = 1024;

  // Kernel.
  std::int64_t livelock_budget = 10000000;
  Time max_time_us = 1000000000000;
  bool check_invariants = true;
  std::uint64_t seed = 1;

  /// Assigns a parameter by its field name; the value is parsed according to
  /// the field type. Throws Error(invalid_argument) on unknown names, bad
  /// values, or values that break validate().
  void set(std::string_view name, std::string_view value);

  /// Rendered value of a parameter, in the form set() accepts.
  std::string get(std::string_view name) const;

  /// Throws Error(invalid_argument) if any invariant is broken.
  void validate() const;

  static const std::vector<std::string>& names();
};

}  // namespace mpssim::sim
