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
#include <map>
#include <optional>
#include <vector>

#include "mpssim/common.hpp"

namespace mpssim::recovery {

using RequestId = std::uint64_t;
using BlockId = std::uint32_t;
using Token = std::uint32_t;

/// Incremental state of one in-flight request since its previous snapshot.
struct ForwardSnapshot {
  RequestId request_id = 0;
  std::uint64_t seq = 0;
  std::vector<BlockId> kv_block_ids_delta;
  std::vector<Token> token_delta;
  std::uint64_t progress = 0;  // tokens generated so far
  bool done = false;

  bool operator==(const ForwardSnapshot&) const = default;
};

/// Everything one publish appends. `seq` advances even when no request is
/// in flight.
struct SnapshotBatch {
  std::uint64_t seq = 0;
  std::vector<ForwardSnapshot> deltas;
};

/// Single-producer single-consumer ring of snapshot batches, ordered by
/// sequence number.
class SnapshotRing {
 public:
  explicit SnapshotRing(std::size_t capacity);

  /// Throws RingSaturated when `capacity` batches are unconsumed.
  std::uint64_t publish(std::vector<ForwardSnapshot> deltas);
  /// Oldest unconsumed batch, or nullopt.
  std::optional<SnapshotBatch> consume();

  std::size_t capacity() const { return slots_.size(); }
  std::size_t unconsumed() const { return static_cast<std::size_t>(producer_seq_ - consumer_seq_); }
  std::uint64_t producer_seq() const { return producer_seq_; }
  std::uint64_t consumer_seq() const { return consumer_seq_; }

 private:
  std::vector<SnapshotBatch> slots_;
  std::uint64_t producer_seq_ = 0;  // last published
  std::uint64_t consumer_seq_ = 0;  // last consumed
};

/// Reconstructed state of one request.
struct RequestState {
  std::vector<BlockId> blocks;
  std::vector<Token> tokens;
  std::uint64_t progress = 0;
  bool done = false;

  bool operator==(const RequestState&) const = default;
};

/// Folds deltas into per-request state. Finished requests are kept, marked
/// done, so a consumer can tell them from requests it never heard of.
class SnapshotFold {
 public:
  void apply(const ForwardSnapshot& d);
  void apply(const SnapshotBatch& b);

  const std::map<RequestId, RequestState>& requests() const { return requests_; }
  std::uint64_t last_seq() const { return last_seq_; }
  bool empty() const { return last_seq_ == 0; }

 private:
  std::map<RequestId, RequestState> requests_;
  std::uint64_t last_seq_ = 0;
};

}  // namespace mpssim::recovery
