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

#include "mpssim/pipeline/pipeline.hpp"

namespace mpssim::pipeline {

using faults::FaultRecord;
using faults::Mechanism;
using faults::Replayability;
using faults::ScenarioId;

std::string_view to_string(Resolution r) {
  switch (r) {
    case Resolution::serviced: return "serviced";
    case Resolution::isolated: return "isolated";
    case Resolution::fatal: return "fatal";
  }
  return "?";
}

FaultPipeline::FaultPipeline(sim::Kernel& k, exec::GpuExec& exec, mem::GpuMemory& mem)
    : k_(k), exec_(exec), mem_(mem) {}

std::optional<Pid> FaultPipeline::owner_of(ChannelId ch) const {
  auto it = channel_to_pid_.find(ch);
  if (it == channel_to_pid_.end()) return std::nullopt;
  return it->second;
}

const FaultRecord& FaultPipeline::raise_mmu_fault(const FaultSeed& seed, ChannelId channel) {
  FaultRecord r;
  r.id = FaultId(records_.size() + 1);
  r.seed = seed;
  r.seed.channel = channel;
  r.channel = channel;
  r.pid = owner_of(channel);
  MPSSIM_ASSERT(r.pid.has_value(), "MMU fault from an unregistered channel");
  r.scenario = faults::classify_mmu(r.seed, mem_);
  r.verdicts = faults::verdicts_for(r.scenario, seed.engine);
  r.detected_at = k_.now();
  const TsgId tsg = exec_.channel(channel).tsg;
  const bool replayable = r.verdicts.replayable == Replayability::replayable;
  records_.push_back(r);
  const FaultRecord& rec = records_.back();

  k_.emit(sim::EntityRef::channel(channel), "fault.raise",
          {{"fault", rec.id},
           {"scenario", faults::info(rec.scenario).name},
           {"engine", to_string(seed.engine)},
           {"access", to_string(seed.access)},
           {"va", seed.va},
           {"pid", *rec.pid},
           {"buffer", replayable ? "replayable" : "non-replayable"}});

  pending_tsg_[rec.id] = tsg;
  if (replayable) {
    replayable_.queue.push_back(rec);
    ++replayable_.put;
    exec_.stall_tsg(tsg);
    queue_bottom_half();
  } else {
    exec_.preempt_tsg(tsg);
    const FaultRecord copy = rec;
    k_.schedule(k_.params().shadow_copy_us, rm(), "rmgsp.shadow_copy", [this, copy] {
      shadow_.queue.push_back(copy);
      ++shadow_.put;
      k_.emit(rm(), "rmgsp.shadow_copy", {{"fault", copy.id}});
      queue_bottom_half();
    });
  }
  return rec;
}

const FaultRecord& FaultPipeline::raise_sm_trap(int exception_code) {
  const std::optional<TsgId> resident = exec_.current_tsg();
  MPSSIM_ASSERT(resident.has_value(), "SM exception with no resident TSG");
  FaultRecord r;
  r.id = FaultId(records_.size() + 1);
  r.scenario = faults::sm_exception_scenario(exception_code);
  r.verdicts = faults::verdicts_for(r.scenario, EngineClass::sm);
  r.seed.engine = EngineClass::sm;
  r.detected_at = k_.now();
  r.exception_code = exception_code;
  auto gen = k_.rng().substream(0x5157ull << 32 | r.id.value);
  r.sm_id = static_cast<std::uint32_t>(gen() % static_cast<std::uint64_t>(k_.params().num_sms));
  records_.push_back(r);
  const FaultRecord& rec = records_.back();
  ++stats_.traps;
  k_.emit(rm(), "rmgsp.trap",
          {{"fault", rec.id},
           {"scenario", faults::info(rec.scenario).name},
           {"code", exception_code},
           {"sm", *rec.sm_id},
           {"tsg", *resident}});
  const std::string source(faults::info(rec.scenario).name);
  const TsgId tsg = *resident;
  const FaultId id = rec.id;
  const ScenarioId scenario = rec.scenario;
  k_.schedule(k_.params().rc_recovery_us, rm(), "rmgsp.rc_recovery", [this, tsg, source, id, scenario] {
    rc_recovery(tsg, source);
    outcomes_.push_back(Outcome{id, scenario, Resolution::fatal, Mechanism::none, std::nullopt, k_.now()});
  });
  return rec;
}

void FaultPipeline::queue_bottom_half() {
  if (bottom_half_queued_) return;
  bottom_half_queued_ = true;
  k_.schedule(0, uvm(), "uvm.bottom_half", [this] { bottom_half(); });
}

void FaultPipeline::bottom_half() {
  bottom_half_queued_ = false;
  std::vector<FaultRecord> batch;
  while (!replayable_.queue.empty()) {
    batch.push_back(replayable_.queue.front());
    replayable_.queue.pop_front();
    ++replayable_.get;
  }
  while (!shadow_.queue.empty()) {
    batch.push_back(shadow_.queue.front());
    shadow_.queue.pop_front();
    ++shadow_.get;
  }
  for (const FaultRecord& r : batch) {
    const TsgId tsg = pending_tsg_.at(r.id);
    pending_tsg_.erase(r.id);
    handle(r, tsg);
  }
}

void FaultPipeline::handle(const FaultRecord& r, TsgId tsg) {
  if (faults::is_parse_time(r.scenario)) {
    report_fatal(r, tsg);
  } else if (r.verdicts.serviceable == faults::Serviceability::serviceable) {
    service(r, tsg);
  } else if (isolation_) {
    intercept(r, tsg);
  } else {
    report_fatal(r, tsg);
  }
}

void FaultPipeline::release_fault_hold(const FaultRecord& r, TsgId tsg) {
  if (r.verdicts.replayable == Replayability::replayable) {
    exec_.unstall_tsg(tsg);
  } else {
    exec_.resume_tsg(tsg);
  }
}

void FaultPipeline::service(const FaultRecord& r, TsgId tsg) {
  if (r.scenario != ScenarioId::benign_invalid_prefetch_sm) {
    try {
      mem_.service_fault(r.seed.space, r.seed.va);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::out_of_physical_pages) throw;
      report_fatal(r, tsg);
      return;
    }
  }
  k_.emit(uvm(), "uvm.service",
          {{"fault", r.id}, {"scenario", faults::info(r.scenario).name}, {"latency", k_.params().benign_service_us}});
  k_.schedule(k_.params().benign_service_us, uvm(), "uvm.replay", [this, r, tsg] {
    release_fault_hold(r, tsg);
    ++stats_.serviced;
    outcomes_.push_back(Outcome{r.id, r.scenario, Resolution::serviced, Mechanism::none, std::nullopt, k_.now()});
  });
}

void FaultPipeline::intercept(const FaultRecord& r, TsgId tsg) {
  if (!r.pid) fail(ErrorCode::no_channel_attribution, "fault " + std::to_string(r.id.value));
  const Pid pid = *r.pid;
  const mem::VaRange* range = mem_.find_range(r.seed.space, r.seed.va);
  Mechanism mech = Mechanism::m1;
  Duration latency = k_.params().m1_us;
  if (range == nullptr) {
    mem_.redirect_unmapped(pid, r.seed.space, r.seed.va);
  } else if (range->kind == mem::RangeKind::managed) {
    mech = Mechanism::m2;
    latency = k_.params().m2_us;
    mem_.redirect_managed(r.seed.space, r.seed.va);
  } else {
    mech = Mechanism::m3;
    latency = k_.params().m3_us;
    mem_.redirect_external(r.seed.space, r.seed.va);
  }
  mem_.service_fault(r.seed.space, r.seed.va);
  k_.emit(uvm(), "uvm.isolate",
          {{"fault", r.id},
           {"scenario", faults::info(r.scenario).name},
           {"mech", faults::to_string(mech)},
           {"pid", pid},
           {"latency", latency}});
  k_.schedule(latency, uvm(), "uvm.isolate_done", [this, r, tsg, pid, mech] {
    if (exec_.is_live(pid)) exec_.terminate_client(pid, "isolation");
    release_fault_hold(r, tsg);
    ++stats_.isolations;
    outcomes_.push_back(Outcome{r.id, r.scenario, Resolution::isolated, mech, pid, k_.now()});
  });
}

void FaultPipeline::report_fatal(const FaultRecord& r, TsgId tsg) {
  const bool replayable = r.verdicts.replayable == Replayability::replayable;
  Duration delay = 0;
  if (replayable) {
    k_.emit(uvm(), "uvm.tlb_invalidate", {{"fault", r.id}});
    delay = k_.params().tlb_invalidate_us;
  }
  k_.schedule(delay, uvm(), "uvm.fatal_report", [this, r, tsg] {
    ++stats_.fatal_reports;
    const std::string source(faults::info(r.scenario).name);
    k_.emit(uvm(), "uvm.fatal_report", {{"fault", r.id}, {"scenario", source}});
    k_.schedule(k_.params().rc_recovery_us, rm(), "rmgsp.rc_recovery", [this, r, tsg, source] {
      rc_recovery(tsg, source);
      outcomes_.push_back(Outcome{r.id, r.scenario, Resolution::fatal, Mechanism::none, std::nullopt, k_.now()});
    });
  });
}

void FaultPipeline::rc_recovery(TsgId tsg, const std::string& source) {
  ++stats_.rc_recoveries;
  if (exec_.tsg(tsg).destroyed) {
    k_.emit(rm(), "rmgsp.rc_recovery", {{"tsg", tsg}, {"source", source}, {"skipped", true}});
    return;
  }
  k_.emit(rm(), "rmgsp.rc_recovery", {{"tsg", tsg}, {"source", source}, {"skipped", false}});
  const std::vector<Pid> pids = exec_.teardown_tsg(tsg, "fault_propagation");
  for (Pid p : pids) {
    notifiers_[p] = ErrorNotifier{source, k_.now()};
    k_.emit(rm(), "rmgsp.notifier", {{"pid", p}, {"source", source}});
  }
}

}  // namespace mpssim::pipeline
