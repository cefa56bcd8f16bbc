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

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mpssim/common.hpp"
#include "mpssim/exec/gpu_exec.hpp"
#include "mpssim/faults/inject.hpp"
#include "mpssim/faults/taxonomy.hpp"
#include "mpssim/mem/gpu_mem.hpp"
#include "mpssim/pipeline/pipeline.hpp"
#include "mpssim/sim/kernel.hpp"

namespace mpssim {

struct ClientInfo {
  Pid pid;
  exec::ClientMode mode = exec::ClientMode::mps;
  ContextId context;
  AllocHandle overhead;
  std::optional<RangeId> semaphore_pool;
};

struct ClientOutcome {
  Pid pid;
  bool alive = true;
  std::string reason;
  Time terminated_at = 0;
};

struct RunReport {
  Time end_time = 0;
  bool quiescent = true;  // false when max_time cut the run short
  sim::DispatchStats stats;
  std::vector<ClientOutcome> clients;
  std::map<Pid, pipeline::ErrorNotifier> notifiers;
};

/// How a fault-injection script ended.
struct ScriptResult {
  std::size_t steps_done = 0;
  bool finished = false;  // every step completed
  std::optional<ErrorCode> rejected;
  std::string detail;
};

/// One simulated machine: kernel, GPU execution, memory, and the fault
/// pipeline, plus the host-side API that workloads and scripts drive.
class World final : public exec::ExecHooks {
 public:
  explicit World(sim::SimParams params, bool isolation = true);
  World(const World&) = delete;
  World& operator=(const World&) = delete;

  sim::Kernel& kernel() { return kernel_; }
  const sim::Kernel& kernel() const { return kernel_; }
  exec::GpuExec& gpu() { return exec_; }
  const exec::GpuExec& gpu() const { return exec_; }
  mem::GpuMemory& memory() { return mem_; }
  const mem::GpuMemory& memory() const { return mem_; }
  pipeline::FaultPipeline& faults() { return pipeline_; }
  const pipeline::FaultPipeline& faults() const { return pipeline_; }
  const sim::SimParams& params() const { return kernel_.params(); }
  Time now() const { return kernel_.now(); }

  void start_mps();
  /// Creates the client, its per-process reservation, and its
  /// driver-internal semaphore pool.
  Pid create_client(exec::ClientMode mode);
  void terminate_client(Pid pid, std::string_view reason) { exec_.terminate_client(pid, reason); }
  bool is_live(Pid pid) const { return exec_.is_live(pid); }
  const ClientInfo& client_info(Pid pid) const;
  ContextId context_of(Pid pid) const { return exec_.client(pid).context; }

  using TerminationListener = std::function<void(Pid, std::string_view)>;
  void on_termination(TerminationListener l) { listeners_.push_back(std::move(l)); }

  // Host API. Device-side calls complete asynchronously via `done`.
  void launch(Pid pid, Duration d, std::string label, std::function<void()> done);
  void kernel_access(Pid pid, VirtAddr va, AccessType a, std::uint64_t value, std::function<void()> done);
  /// CE copy. Throws ApiRejected for managed ranges the API refuses.
  void memcpy(Pid pid, VirtAddr va, bool write, std::function<void()> done);
  /// PBDMA semaphore acquire. Throws ApiRejected for user managed memory.
  void stream_wait(Pid pid, VirtAddr va, std::function<void()> done);
  void raise_exception(Pid pid, int code);
  void raise_hw_fault(Pid pid, ParseTimeCategory c, EngineClass engine = EngineClass::sm);

  /// Runs the steps in order, starting at the current time.
  void run_script(Pid pid, std::vector<faults::Step> steps, std::function<void(const ScriptResult&)> done = {});
  /// Schedules the trigger for `scenario` after `delay`. Throws
  /// UnreachableTrigger immediately for gray rows.
  void inject(Pid pid, faults::ScenarioId scenario, Duration delay = 0, bool privileged = false);

  RunReport run_until_quiescent(Time max_time);
  RunReport run_until_quiescent() { return run_until_quiescent(params().max_time_us); }
  RunReport report() const;

  // exec::ExecHooks
  exec::Outcome on_access(const exec::Channel& ch, const exec::Command& cmd) override;
  exec::Outcome on_exception(const exec::Channel& ch, const exec::Command& cmd) override;
  void on_client_terminated(Pid pid, std::string_view reason) override;

 private:
  struct Script;
  void script_step(const std::shared_ptr<Script>& s);
  void script_finish(const std::shared_ptr<Script>& s, bool finished, std::optional<ErrorCode> code,
                     std::string detail);
  bool entity_live(sim::EntityRef e) const;

  sim::Kernel kernel_;
  mem::GpuMemory mem_;
  exec::GpuExec exec_;
  pipeline::FaultPipeline pipeline_;
  std::map<Pid, ClientInfo> infos_;
  std::vector<TerminationListener> listeners_;
  sim::DispatchStats stats_;
  bool quiescent_ = true;
};

}  // namespace mpssim
