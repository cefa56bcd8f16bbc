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

#include "mpssim/recovery/snapshot.hpp"

#include <string>

namespace mpssim::recovery {

SnapshotRing::SnapshotRing(std::size_t capacity) {
  if (capacity == 0) fail(ErrorCode::invalid_argument, "ring capacity must be positive");
  slots_.resize(capacity);
}

std::uint64_t SnapshotRing::publish(std::vector<ForwardSnapshot> deltas) {
  if (unconsumed() == slots_.size()) {
    fail(ErrorCode::ring_saturated, std::to_string(slots_.size()) + " unconsumed snapshot batches");
  }
  const std::uint64_t seq = ++producer_seq_;
  for (auto& d : deltas) d.seq = seq;
  slots_[seq % slots_.size()] = SnapshotBatch{seq, std::move(deltas)};
  return seq;
}

std::optional<SnapshotBatch> SnapshotRing::consume() {
  if (consumer_seq_ == producer_seq_) return std::nullopt;
  const std::uint64_t seq = ++consumer_seq_;
  SnapshotBatch b = std::move(slots_[seq % slots_.size()]);
  MPSSIM_ASSERT(b.seq == seq, "ring slot overwritten before it was consumed");
  return b;
}

void SnapshotFold::apply(const ForwardSnapshot& d) {
  RequestState& r = requests_[d.request_id];
  MPSSIM_ASSERT(!r.done, "delta for a finished request");
  r.blocks.insert(r.blocks.end(), d.kv_block_ids_delta.begin(), d.kv_block_ids_delta.end());
  r.tokens.insert(r.tokens.end(), d.token_delta.begin(), d.token_delta.end());
  r.progress = d.progress;
  r.done = d.done;
  MPSSIM_ASSERT(r.tokens.size() == r.progress, "token delta disagrees with progress");
}

void SnapshotFold::apply(const SnapshotBatch& b) {
  MPSSIM_ASSERT(b.seq == last_seq_ + 1, "snapshot batches folded out of order");
  for (const auto& d : b.deltas) apply(d);
  last_seq_ = b.seq;
}

}  // namespace mpssim::recovery
