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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mpssim/common.hpp"
#include "mpssim/recovery/snapshot.hpp"
#include "mpssim/workload/serve.hpp"
#include "mpssim/world.hpp"

namespace mpssim::recovery {

enum class StandbyState : std::uint8_t { sleeping, waking, active };

std::string_view to_string(StandbyState s);

/// Stand-in for the socket between the two instances.
struct LivenessLink {
  Pid active_pid;
  Pid standby_pid;
  bool open = true;
  Time closed_at = 0;
};

struct RecoveryReport {
  bool degraded = false;  // no snapshot to resume from; every request re-prefills
  std::string degraded_reason;
  Time closed_at = 0;
  Time failover_at = 0;
  Time awake_at = 0;
  bool caught_up = false;
  Time caught_up_at = 0;
  Duration outage = 0;  // caught_up_at - closed_at
  std::uint64_t replayed_steps = 0;
  std::uint64_t first_resumed_token = 0;
  std::uint64_t resumed_seq = 0;
  std::size_t adopted_requests = 0;
  std::size_t reprefilled_requests = 0;
};

struct PairOptions {
  bool kv_sharing = true;  // false: no snapshots, standby recomputes KV on takeover
};

/// An MPS active serving instance and a sleeping standalone standby sharing
/// its weights and KV pool.
class RecoveryPair final : public workload::SnapshotSink {
 public:
  RecoveryPair(World& w, workload::ServeSpec spec, PairOptions opts);
  RecoveryPair(const RecoveryPair&) = delete;
  RecoveryPair& operator=(const RecoveryPair&) = delete;

  /// Starts request arrivals and the active's step loop.
  void start();

  Pid active() const { return link_.active_pid; }
  Pid standby() const { return link_.standby_pid; }
  StandbyState standby_state() const { return state_; }
  const LivenessLink& link() const { return link_; }
  workload::Frontend& frontend() { return *frontend_; }
  const workload::Frontend& frontend() const { return *frontend_; }
  workload::ServeEngine& active_engine() { return *active_engine_; }
  /// The promoted standby's engine, once awake.
  workload::ServeEngine* standby_engine() { return standby_engine_.get(); }
  const workload::ServeMemory& active_memory() const { return active_mem_; }
  const workload::ServeMemory& standby_memory() const { return standby_mem_; }
  const SnapshotRing& ring() const { return ring_; }
  const SnapshotFold& fold() const { return fold_; }
  const std::optional<RecoveryReport>& report() const { return report_; }
  /// True once the promoted standby has finished every request.
  bool takeover_complete() const;

  /// Test hook: the next published delta covering `pos` of `request` carries
  /// a different token there.
  void corrupt_delta(RequestId request, std::uint64_t pos);

  void publish(Pid from, std::vector<ForwardSnapshot> deltas) override;

 private:
  void consume_all();
  void on_link_closed();
  void failover();
  void wake();
  void check_caught_up();

  World& w_;
  PairOptions opts_;
  std::unique_ptr<workload::Frontend> frontend_;
  LivenessLink link_;
  StandbyState state_ = StandbyState::sleeping;
  workload::ServeMemory active_mem_;
  workload::ServeMemory standby_mem_;
  std::unique_ptr<workload::ServeEngine> active_engine_;
  std::unique_ptr<workload::ServeEngine> standby_engine_;
  SnapshotRing ring_;
  SnapshotFold fold_;
  std::optional<std::pair<RequestId, std::uint64_t>> corruption_;
  std::map<RequestId, std::uint64_t> catch_up_targets_;
  std::uint64_t steps_at_wake_ = 0;
  std::optional<RecoveryReport> report_;
};

/// Validates N and deploys a pair. The MPS session must already exist.
std::unique_ptr<RecoveryPair> deploy_pair(World& w, workload::ServeSpec spec, PairOptions opts = {});

struct OutputVerdict {
  bool equal = true;
  std::optional<RequestId> request;  // first request that differs
  std::optional<std::uint64_t> index;  // first differing position in it
  std::string detail;
};

/// Token-for-token comparison of every completed request.
OutputVerdict verify_output_equality(const std::map<RequestId, std::vector<Token>>& recovered,
                                     const std::map<RequestId, std::vector<Token>>& baseline);

}  // namespace mpssim::recovery
