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

#include "mpssim/world.hpp"

namespace mpssim {

using faults::Op;
using faults::Step;
using faults::Target;

struct World::Script {
  Pid pid;
  std::vector<Step> steps;
  std::size_t next = 0;
  std::optional<RangeId> buffer;
  std::function<void(const ScriptResult&)> done;
};

World::World(sim::SimParams params, bool isolation)
    : kernel_(std::move(params)), mem_(kernel_), exec_(kernel_, *this), pipeline_(kernel_, exec_, mem_) {
  pipeline_.set_isolation(isolation);
  kernel_.set_liveness([this](sim::EntityRef e) { return entity_live(e); });
}

bool World::entity_live(sim::EntityRef e) const {
  switch (e.kind) {
    case sim::EntityKind::client: return exec_.is_live(Pid(e.id));
    case sim::EntityKind::channel: return !exec_.channel(ChannelId(e.id)).torn_down;
    case sim::EntityKind::tsg: return !exec_.tsg(TsgId(e.id)).destroyed;
    default: return true;
  }
}

void World::start_mps() { exec_.start_mps_session(); }

Pid World::create_client(exec::ClientMode mode) {
  const Pid pid = exec_.create_client(mode);
  const exec::Client& c = exec_.client(pid);
  for (ChannelId ch : {c.sm, c.ce, c.pbdma}) pipeline_.register_channel(ch, pid);
  ClientInfo info;
  info.pid = pid;
  info.mode = mode;
  info.context = c.context;
  if (params().process_overhead_pages > 0) {
    info.overhead = mem_.reserve_process(pid, static_cast<std::uint64_t>(params().process_overhead_pages));
  }
  if (params().semaphore_pool_pages > 0) {
    info.semaphore_pool = mem_.alloc_managed(
        pid, c.context, static_cast<std::uint64_t>(params().semaphore_pool_pages) * kPageSize, true);
  }
  infos_.emplace(pid, info);
  return pid;
}

const ClientInfo& World::client_info(Pid pid) const {
  auto it = infos_.find(pid);
  if (it == infos_.end()) fail(ErrorCode::unknown_pid, "pid " + std::to_string(pid.value));
  return it->second;
}

void World::launch(Pid pid, Duration d, std::string label, std::function<void()> done) {
  exec_.submit(exec_.client(pid).sm, exec::Command::compute(d, std::move(label), std::move(done)));
}

void World::kernel_access(Pid pid, VirtAddr va, AccessType a, std::uint64_t value, std::function<void()> done) {
  exec_.submit(exec_.client(pid).sm, exec::Command::mem_access(va, a, value, std::move(done)));
}

void World::memcpy(Pid pid, VirtAddr va, bool write, std::function<void()> done) {
  const mem::VaRange* r = mem_.find_range(context_of(pid), va);
  if (r != nullptr && r->kind == mem::RangeKind::managed && params().ce_rejects_managed_lifecycle &&
      (r->lifecycle == mem::Lifecycle::zombie || !r->migratable)) {
    fail(ErrorCode::api_rejected, "memcpy refuses a managed range that is being torn down or pinned");
  }
  const AccessType a = write ? AccessType::write : AccessType::read;
  exec_.submit(exec_.client(pid).ce, exec::Command::mem_access(va, a, write ? va ^ pid.value : 0, std::move(done)));
}

void World::stream_wait(Pid pid, VirtAddr va, std::function<void()> done) {
  const mem::VaRange* r = mem_.find_range(context_of(pid), va);
  if (r != nullptr && r->kind == mem::RangeKind::managed && !r->driver_internal && params().pbdma_rejects_managed) {
    fail(ErrorCode::api_rejected, "stream memory operations refuse managed memory");
  }
  exec_.submit(exec_.client(pid).pbdma, exec::Command::semaphore_wait(va, std::move(done)));
}

void World::raise_exception(Pid pid, int code) {
  faults::sm_exception_scenario(code);  // validates the code
  exec_.submit(exec_.client(pid).sm, exec::Command::exception(code));
}

void World::raise_hw_fault(Pid pid, ParseTimeCategory c, EngineClass engine) {
  const exec::Client& cl = exec_.client(pid);
  const ChannelId ch = engine == EngineClass::sm ? cl.sm : engine == EngineClass::ce ? cl.ce : cl.pbdma;
  FaultSeed seed;
  seed.va = faults::kUnmappedVa;
  seed.access = AccessType::write;
  seed.engine = engine;
  seed.space = cl.context;
  seed.hw_fault = c;
  pipeline_.raise_mmu_fault(seed, ch);
}

exec::Outcome World::on_access(const exec::Channel& ch, const exec::Command& cmd) {
  const ContextId space = exec_.client(ch.owner).context;
  const AccessType a = cmd.kind == exec::Command::Kind::semaphore_wait ? AccessType::read : cmd.access;
  const mem::TranslationResult tr = mem_.resolve_va(space, cmd.va, a, ch.engine, ch.id);
  if (const auto* miss = std::get_if<mem::Miss>(&tr)) {
    pipeline_.raise_mmu_fault(miss->seed, ch.id);
    // A faulting prefetch is dropped, not retried.
    return a == AccessType::prefetch ? exec::Outcome::completed : exec::Outcome::blocked;
  }
  if (a == AccessType::write) mem_.gpu_write(space, cmd.va, cmd.value);
  return exec::Outcome::completed;
}

exec::Outcome World::on_exception(const exec::Channel&, const exec::Command& cmd) {
  pipeline_.raise_sm_trap(cmd.exception_code);
  return exec::Outcome::blocked;
}

void World::on_client_terminated(Pid pid, std::string_view reason) {
  mem_.release_process(pid);
  for (const auto& l : listeners_) l(pid, reason);
}

void World::run_script(Pid pid, std::vector<Step> steps, std::function<void(const ScriptResult&)> done) {
  auto s = std::make_shared<Script>();
  s->pid = pid;
  s->steps = std::move(steps);
  s->done = std::move(done);
  kernel_.schedule(0, sim::EntityRef::client(pid), "script.step", [this, s] { script_step(s); });
}

void World::inject(Pid pid, faults::ScenarioId scenario, Duration delay, bool privileged) {
  std::vector<Step> steps = faults::trigger_script(scenario, privileged);
  kernel_.schedule(delay, sim::EntityRef::client(pid), "inject",
                   [this, pid, steps = std::move(steps), scenario]() mutable {
                     kernel_.emit(sim::EntityRef::client(pid), "inject",
                                  {{"trigger", faults::info(scenario).name}});
                     run_script(pid, std::move(steps));
                   });
}

void World::script_finish(const std::shared_ptr<Script>& s, bool finished, std::optional<ErrorCode> code,
                          std::string detail) {
  if (!s->done) return;
  ScriptResult r;
  r.steps_done = s->next;
  r.finished = finished;
  r.rejected = code;
  r.detail = std::move(detail);
  s->done(r);
}

void World::script_step(const std::shared_ptr<Script>& s) {
  const Pid pid = s->pid;
  const ContextId space = context_of(pid);
  auto cont = [this, s] {
    ++s->next;
    kernel_.schedule(0, sim::EntityRef::client(s->pid), "script.step", [this, s] { script_step(s); });
  };
  while (s->next < s->steps.size()) {
    const Step st = s->steps[s->next];
    kernel_.emit(sim::EntityRef::client(pid), "script.step", {{"step", st.describe()}});
    const std::uint64_t value = sim::mix64(pid.value << 16 | s->next);
    try {
      if (faults::is_alloc(st.op)) {
        if (st.op == Op::alloc_device) {
          s->buffer = mem_.alloc_device(pid, space, st.bytes);
        } else if (st.op == Op::alloc_managed) {
          s->buffer = mem_.alloc_managed(pid, space, st.bytes);
        } else {
          s->buffer = mem_.vmm_create_map(pid, space, st.bytes).second;
        }
        ++s->next;
        continue;
      }
      if (faults::is_host(st.op)) {
        if (!s->buffer) fail(ErrorCode::invalid_argument, "no buffer for " + st.describe());
        const RangeId b = *s->buffer;
        const mem::RangeKind kind = mem_.range(b).kind;
        switch (st.op) {
          case Op::host_write: mem_.host_write(b, 0, value); break;
          case Op::advise_ro:
            if (kind != mem::RangeKind::managed) fail(ErrorCode::kind_mismatch, "advise needs managed memory");
            mem_.set_access(b, mem::Protection::read_only);
            break;
          case Op::set_access_ro:
            if (kind != mem::RangeKind::external) fail(ErrorCode::kind_mismatch, "set_access needs VMM memory");
            mem_.set_access(b, mem::Protection::read_only);
            break;
          case Op::make_zombie: mem_.make_zombie(b); break;
          case Op::pin: mem_.pin_non_migratable(b); break;
          default: break;
        }
        ++s->next;
        continue;
      }
      if (st.op == Op::raise_exception) {
        raise_exception(pid, st.code);
        ++s->next;
        return;
      }
      if (st.op == Op::hw_fault) {
        raise_hw_fault(pid, st.category);
        ++s->next;
        return;
      }
      VirtAddr va = faults::kUnmappedVa;
      if (st.target == Target::inside || st.target == Target::past_end) {
        if (!s->buffer) fail(ErrorCode::invalid_argument, "no buffer for " + st.describe());
        const mem::VaRange& r = mem_.range(*s->buffer);
        va = st.target == Target::inside ? r.base : r.base + r.length;
      } else if (st.target == Target::semaphore) {
        const auto& pool = client_info(pid).semaphore_pool;
        if (!pool) fail(ErrorCode::invalid_argument, "client has no semaphore pool");
        va = mem_.range(*pool).base;
      }
      switch (st.op) {
        case Op::kernel_read: kernel_access(pid, va, AccessType::read, 0, cont); break;
        case Op::kernel_write: kernel_access(pid, va, AccessType::write, value, cont); break;
        case Op::kernel_prefetch: kernel_access(pid, va, AccessType::prefetch, 0, cont); break;
        case Op::memcpy_read: memcpy(pid, va, false, cont); break;
        case Op::memcpy_write: memcpy(pid, va, true, cont); break;
        case Op::stream_wait: stream_wait(pid, va, cont); break;
        default: MPSSIM_ASSERT(false, "unhandled script op");
      }
      return;
    } catch (const Error& e) {
      kernel_.emit(sim::EntityRef::client(pid), "script.rejected", {{"error", to_string(e.code())}});
      script_finish(s, false, e.code(), e.what());
      return;
    }
  }
  script_finish(s, true, std::nullopt, {});
}

RunReport World::run_until_quiescent(Time max_time) {
  const sim::DispatchStats st = kernel_.run(max_time);
  stats_.dispatched += st.dispatched;
  stats_.dropped += st.dropped;
  quiescent_ = kernel_.pending() == 0;
  return report();
}

RunReport World::report() const {
  RunReport r;
  r.end_time = kernel_.now();
  r.quiescent = quiescent_;
  r.stats = stats_;
  for (Pid p : exec_.pids()) {
    const exec::Client& c = exec_.client(p);
    r.clients.push_back(ClientOutcome{p, !c.terminated, c.reason, c.terminated_at});
  }
  r.notifiers = pipeline_.notifiers();
  return r;
}

}  // namespace mpssim
