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
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpssim/common.hpp"
#include "mpssim/exec/gpu_exec.hpp"
#include "mpssim/faults/taxonomy.hpp"
#include "mpssim/mem/gpu_mem.hpp"
#include "mpssim/sim/kernel.hpp"

namespace mpssim::pipeline {

enum class BufferKind : std::uint8_t { replayable, non_replayable };

/// Hardware fault buffer. The replayable buffer is read directly through its
/// get/put cursors; non-replayable packets reach UVM through a shadow copy.
struct FaultBuffer {
  BufferKind kind = BufferKind::replayable;
  std::deque<faults::FaultRecord> queue;
  std::uint64_t get = 0;
  std::uint64_t put = 0;
};

enum class Resolution : std::uint8_t { serviced, isolated, fatal };

std::string_view to_string(Resolution r);

struct Outcome {
  FaultId fault;
  faults::ScenarioId scenario;
  Resolution resolution = Resolution::fatal;
  faults::Mechanism mechanism = faults::Mechanism::none;
  std::optional<Pid> terminated;
  Time resolved_at = 0;
};

/// Last error RC recovery wrote to a client's context.
struct ErrorNotifier {
  std::string source;  // scenario name
  Time at = 0;
};

struct PipelineStats {
  std::uint64_t fatal_reports = 0;
  std::uint64_t traps = 0;
  std::uint64_t rc_recoveries = 0;
  std::uint64_t isolations = 0;
  std::uint64_t serviced = 0;
};

/// The fault lifecycle: detection into fault buffers, UVM top and bottom
/// halves, the isolation interception window, fatal reporting, and RC
/// recovery in RM/GSP.
class FaultPipeline {
 public:
  FaultPipeline(sim::Kernel& k, exec::GpuExec& exec, mem::GpuMemory& mem);

  void set_isolation(bool on) { isolation_ = on; }
  bool isolation() const { return isolation_; }

  void register_channel(ChannelId ch, Pid owner) { channel_to_pid_[ch] = owner; }

  /// Top half for an MMU fault raised by `channel`: classify, enqueue,
  /// stall or preempt, and queue the bottom half.
  const faults::FaultRecord& raise_mmu_fault(const FaultSeed& seed, ChannelId channel);
  /// Global TRAP from an SM exception. Carries no channel.
  const faults::FaultRecord& raise_sm_trap(int exception_code);

  const std::vector<faults::FaultRecord>& records() const { return records_; }
  const std::vector<Outcome>& outcomes() const { return outcomes_; }
  const std::map<Pid, ErrorNotifier>& notifiers() const { return notifiers_; }
  const PipelineStats& stats() const { return stats_; }
  const FaultBuffer& buffer(BufferKind k) const { return k == BufferKind::replayable ? replayable_ : shadow_; }
  std::optional<Pid> owner_of(ChannelId ch) const;

 private:
  void queue_bottom_half();
  void bottom_half();
  void handle(const faults::FaultRecord& r, TsgId tsg);
  void service(const faults::FaultRecord& r, TsgId tsg);
  void intercept(const faults::FaultRecord& r, TsgId tsg);
  void report_fatal(const faults::FaultRecord& r, TsgId tsg);
  void rc_recovery(TsgId tsg, const std::string& source);
  void release_fault_hold(const faults::FaultRecord& r, TsgId tsg);
  sim::EntityRef uvm() const { return sim::EntityRef::of(sim::EntityKind::uvm); }
  sim::EntityRef rm() const { return sim::EntityRef::of(sim::EntityKind::rmgsp); }

  sim::Kernel& k_;
  exec::GpuExec& exec_;
  mem::GpuMemory& mem_;
  bool isolation_ = true;
  std::map<ChannelId, Pid> channel_to_pid_;
  FaultBuffer replayable_{BufferKind::replayable, {}, 0, 0};
  FaultBuffer shadow_{BufferKind::non_replayable, {}, 0, 0};
  std::map<FaultId, TsgId> pending_tsg_;
  bool bottom_half_queued_ = false;
  std::vector<faults::FaultRecord> records_;
  std::vector<Outcome> outcomes_;
  std::map<Pid, ErrorNotifier> notifiers_;
  PipelineStats stats_;
};

}  // namespace mpssim::pipeline
