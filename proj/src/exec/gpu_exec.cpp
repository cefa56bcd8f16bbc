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

#include "mpssim/exec/gpu_exec.hpp"

#include <algorithm>

namespace mpssim::exec {
namespace {

sim::EntityRef gpu_ref() { return sim::EntityRef::of(sim::EntityKind::gpu); }
sim::EntityRef sched_ref() { return sim::EntityRef::of(sim::EntityKind::scheduler); }

}  // namespace

std::string_view to_string(ClientMode m) { return m == ClientMode::mps ? "mps" : "standalone"; }

std::string_view to_string(ChannelState s) {
  switch (s) {
    case ChannelState::idle: return "idle";
    case ChannelState::running: return "running";
    case ChannelState::stalled: return "stalled";
    case ChannelState::preempted: return "preempted";
    case ChannelState::torn_down: return "torn_down";
  }
  return "?";
}

std::string_view to_string(TsgKind k) {
  switch (k) {
    case TsgKind::shared_gr: return "gr";
    case TsgKind::per_client_ce: return "ce";
    case TsgKind::standalone: return "standalone";
  }
  return "?";
}

Command Command::compute(Duration d, std::string label, std::function<void()> done) {
  if (d < 0) fail(ErrorCode::invalid_argument, "negative compute duration");
  Command c;
  c.kind = Kind::compute;
  c.duration = d;
  c.remaining = d;
  c.label = std::move(label);
  c.on_complete = std::move(done);
  return c;
}

Command Command::mem_access(VirtAddr va, AccessType a, std::uint64_t value, std::function<void()> done) {
  Command c;
  c.kind = Kind::access;
  c.va = va;
  c.access = a;
  c.value = value;
  c.on_complete = std::move(done);
  return c;
}

Command Command::semaphore_wait(VirtAddr va, std::function<void()> done) {
  Command c;
  c.kind = Kind::semaphore_wait;
  c.va = va;
  c.access = AccessType::read;
  c.on_complete = std::move(done);
  return c;
}

Command Command::exception(int code) {
  Command c;
  c.kind = Kind::exception;
  c.exception_code = code;
  return c;
}

GpuExec::GpuExec(sim::Kernel& k, ExecHooks& hooks) : k_(k), hooks_(hooks) {}

void GpuExec::start_mps_session() {
  if (session_) fail(ErrorCode::invalid_argument, "MPS session already running");
  MpsSession s;
  s.server_context = ContextId(next_context_++);
  s.gr_tsg = add_tsg(TsgKind::shared_gr, Pid{});
  session_ = s;
  k_.emit(gpu_ref(), "mps.start", {{"ctx", s.server_context}, {"gr_tsg", s.gr_tsg}});
}

TsgId GpuExec::add_tsg(TsgKind kind, Pid owner) {
  Tsg t;
  t.id = TsgId(next_tsg_++);
  t.kind = kind;
  t.owner = owner;
  const TsgId id = t.id;
  tsgs_.emplace(id, std::move(t));
  return id;
}

ChannelId GpuExec::add_channel(Pid owner, EngineClass e, TsgId tsg) {
  Channel c;
  c.id = ChannelId(next_channel_++);
  c.owner = owner;
  c.engine = e;
  c.tsg = tsg;
  tg(tsg).channels.push_back(c.id);
  const ChannelId id = c.id;
  channels_.emplace(id, std::move(c));
  return id;
}

Pid GpuExec::create_client(ClientMode mode) {
  if (mode == ClientMode::mps && !session_) fail(ErrorCode::no_mps_session, "mps client without a session");
  settle();
  Client c;
  c.pid = Pid(next_pid_++);
  c.mode = mode;
  if (mode == ClientMode::mps) {
    c.context = session_->server_context;
    c.sm = add_channel(c.pid, EngineClass::sm, session_->gr_tsg);
    c.pbdma = add_channel(c.pid, EngineClass::pbdma, session_->gr_tsg);
    c.ce = add_channel(c.pid, EngineClass::ce, add_tsg(TsgKind::per_client_ce, c.pid));
    session_->clients.insert(c.pid);
  } else {
    c.context = ContextId(next_context_++);
    const TsgId own = add_tsg(TsgKind::standalone, c.pid);
    c.sm = add_channel(c.pid, EngineClass::sm, own);
    c.ce = add_channel(c.pid, EngineClass::ce, own);
    c.pbdma = add_channel(c.pid, EngineClass::pbdma, own);
  }
  k_.emit(sim::EntityRef::client(c.pid), "client.create",
          {{"mode", to_string(mode)},
           {"ctx", c.context},
           {"sm_tsg", channel(c.sm).tsg},
           {"ce_tsg", channel(c.ce).tsg}});
  const Pid pid = c.pid;
  clients_.emplace(pid, std::move(c));
  return pid;
}

void GpuExec::submit(ChannelId id, Command cmd) {
  Channel& c = ch(id);
  if (c.torn_down) fail(ErrorCode::unknown_channel, "submit to torn-down channel " + std::to_string(id.value));
  settle();
  c.pushbuffer.push_back(std::move(cmd));
  request_pump();
}

void GpuExec::stall_tsg(TsgId id) {
  Tsg& t = tg(id);
  MPSSIM_ASSERT(!t.destroyed, "stall of destroyed TSG");
  settle();
  ++t.stall_refs;
  k_.emit(sim::EntityRef::tsg(id), "tsg.stall", {{"refs", t.stall_refs}});
  request_pump();
}

void GpuExec::unstall_tsg(TsgId id) {
  Tsg& t = tg(id);
  if (t.destroyed) return;
  MPSSIM_ASSERT(t.stall_refs > 0, "unstall of TSG that is not stalled");
  settle();
  if (--t.stall_refs == 0) clear_blocked(t);
  k_.emit(sim::EntityRef::tsg(id), "tsg.unstall", {{"refs", t.stall_refs}});
  request_pump();
}

void GpuExec::preempt_tsg(TsgId id) {
  Tsg& t = tg(id);
  MPSSIM_ASSERT(!t.destroyed, "preempt of destroyed TSG");
  settle();
  t.preempted = true;
  k_.emit(sim::EntityRef::tsg(id), "tsg.preempt");
  request_pump();
}

void GpuExec::resume_tsg(TsgId id) {
  Tsg& t = tg(id);
  if (t.destroyed) return;
  settle();
  t.preempted = false;
  if (t.stall_refs == 0) clear_blocked(t);
  k_.emit(sim::EntityRef::tsg(id), "tsg.resume");
  request_pump();
}

void GpuExec::clear_blocked(Tsg& t) {
  for (ChannelId c : t.channels) ch(c).blocked = false;
}

std::vector<Pid> GpuExec::teardown_tsg(TsgId id, std::string_view reason) {
  auto it = tsgs_.find(id);
  if (it == tsgs_.end() || it->second.destroyed) {
    fail(ErrorCode::unknown_tsg, "tsg " + std::to_string(id.value));
  }
  settle();
  Tsg& t = it->second;
  std::set<Pid> affected;
  for (ChannelId c : t.channels) {
    Channel& chan = ch(c);
    affected.insert(chan.owner);
    chan.torn_down = true;
    chan.pushbuffer.clear();
  }
  const bool gr = t.kind == TsgKind::shared_gr;
  if (gr) affected.insert(session_->clients.begin(), session_->clients.end());
  t.channels.clear();
  t.destroyed = true;
  std::string pid_list;
  for (Pid p : affected) pid_list += (pid_list.empty() ? "" : ",") + std::to_string(p.value);
  k_.emit(sim::EntityRef::tsg(id), "tsg.teardown", {{"reason", reason}, {"pids", pid_list}});
  if (gr) {
    k_.emit(gpu_ref(), "mps.end", {{"ctx", session_->server_context}});
    session_.reset();
  }
  std::vector<Pid> out(affected.begin(), affected.end());
  for (Pid p : out) {
    if (is_live(p)) terminate_client(p, reason);
  }
  request_pump();
  return out;
}

void GpuExec::terminate_client(Pid pid, std::string_view reason) {
  auto it = clients_.find(pid);
  if (it == clients_.end() || it->second.terminated) {
    fail(ErrorCode::unknown_pid, "pid " + std::to_string(pid.value));
  }
  settle();
  Client& c = it->second;
  for (ChannelId id : {c.sm, c.ce, c.pbdma}) {
    Channel& chan = ch(id);
    if (chan.torn_down) continue;
    chan.torn_down = true;
    chan.pushbuffer.clear();
    auto& members = tg(chan.tsg).channels;
    members.erase(std::remove(members.begin(), members.end(), id), members.end());
  }
  for (auto& [tid, t] : tsgs_) {
    if (t.owner == pid && t.kind != TsgKind::shared_gr) t.destroyed = true;
  }
  if (session_) session_->clients.erase(pid);
  c.terminated = true;
  c.reason = std::string(reason);
  c.terminated_at = k_.now();
  k_.emit(sim::EntityRef::client(pid), "client.terminated", {{"reason", reason}});
  hooks_.on_client_terminated(pid, reason);
  request_pump();
}

const Client& GpuExec::client(Pid pid) const {
  auto it = clients_.find(pid);
  if (it == clients_.end()) fail(ErrorCode::unknown_pid, "pid " + std::to_string(pid.value));
  return it->second;
}

bool GpuExec::is_live(Pid pid) const {
  auto it = clients_.find(pid);
  return it != clients_.end() && !it->second.terminated;
}

const Channel& GpuExec::channel(ChannelId id) const {
  auto it = channels_.find(id);
  if (it == channels_.end()) fail(ErrorCode::unknown_channel, "channel " + std::to_string(id.value));
  return it->second;
}

Channel& GpuExec::ch(ChannelId id) {
  auto it = channels_.find(id);
  if (it == channels_.end()) fail(ErrorCode::unknown_channel, "channel " + std::to_string(id.value));
  return it->second;
}

const Tsg& GpuExec::tsg(TsgId id) const {
  auto it = tsgs_.find(id);
  if (it == tsgs_.end()) fail(ErrorCode::unknown_tsg, "tsg " + std::to_string(id.value));
  return it->second;
}

Tsg& GpuExec::tg(TsgId id) {
  auto it = tsgs_.find(id);
  if (it == tsgs_.end()) fail(ErrorCode::unknown_tsg, "tsg " + std::to_string(id.value));
  return it->second;
}

ChannelState GpuExec::channel_state(ChannelId id) const {
  const Channel& c = channel(id);
  if (c.torn_down) return ChannelState::torn_down;
  const Tsg& t = tsg(c.tsg);
  if (t.stall_refs > 0) return ChannelState::stalled;
  if (t.preempted) return ChannelState::preempted;
  return c.pushbuffer.empty() ? ChannelState::idle : ChannelState::running;
}

std::vector<Pid> GpuExec::pids() const {
  std::vector<Pid> out;
  for (const auto& [p, c] : clients_) out.push_back(p);
  return out;
}

std::vector<TsgId> GpuExec::tsgs() const {
  std::vector<TsgId> out;
  for (const auto& [id, t] : tsgs_) out.push_back(id);
  return out;
}

std::uint64_t GpuExec::dispatched(Pid pid) const {
  auto it = dispatched_.find(pid);
  return it == dispatched_.end() ? 0 : it->second;
}

std::uint64_t GpuExec::live_channel_count() const {
  std::uint64_t n = 0;
  for (const auto& [id, t] : tsgs_) n += t.channels.size();
  return n;
}

std::uint64_t GpuExec::torn_channel_count() const {
  return static_cast<std::uint64_t>(
      std::count_if(channels_.begin(), channels_.end(), [](const auto& kv) { return kv.second.torn_down; }));
}

bool GpuExec::channel_ready(const Channel& c) const {
  if (c.torn_down || c.blocked || c.pushbuffer.empty()) return false;
  const Tsg& t = tsgs_.at(c.tsg);
  return !t.destroyed && t.stall_refs == 0 && !t.preempted;
}

bool GpuExec::tsg_runnable(TsgId id) const {
  const Tsg& t = tsg(id);
  if (t.destroyed || t.stall_refs > 0 || t.preempted) return false;
  return std::any_of(t.channels.begin(), t.channels.end(),
                     [this](ChannelId c) { return channel_ready(channels_.at(c)); });
}

void GpuExec::settle() {
  const Time now = k_.now();
  const Duration elapsed = now - last_settle_;
  last_settle_ = now;
  if (elapsed == 0 || !current_ || !tsg_runnable(*current_)) return;
  for (ChannelId id : tg(*current_).channels) {
    Channel& c = ch(id);
    if (!channel_ready(c)) continue;
    Command& head = c.pushbuffer.front();
    if (head.kind != Command::Kind::compute) continue;
    head.remaining -= elapsed;
    MPSSIM_ASSERT(head.remaining >= 0, "compute overran its completion time");
  }
}

void GpuExec::request_pump() {
  if (in_tick_) return;
  if (tick_event_) k_.cancel(*tick_event_);
  tick_event_ = k_.schedule(0, gpu_ref(), "gpu.pump", [this] { tick(); });
}

void GpuExec::choose_current() {
  std::vector<TsgId> ring;
  for (const auto& [id, t] : tsgs_) {
    if (tsg_runnable(id)) ring.push_back(id);
  }
  if (ring.empty()) {
    current_.reset();
    return;
  }
  if (current_ && tsg_runnable(*current_) && (ring.size() == 1 || k_.now() < slice_end_)) return;
  TsgId pick = ring.front();
  if (current_) {
    auto after = std::upper_bound(ring.begin(), ring.end(), *current_);
    if (after != ring.end()) pick = *after;
  }
  if (!current_ || pick != *current_) {
    k_.emit(sched_ref(), "sched.switch", {{"tsg", pick}});
  }
  current_ = pick;
  slice_end_ = k_.now() + k_.params().time_slice_us;
}

bool GpuExec::run_heads(TsgId tid) {
  bool any = false;
  const std::vector<ChannelId> ids = tg(tid).channels;
  for (ChannelId id : ids) {
    while (true) {
      Channel& c = ch(id);
      if (!channel_ready(c)) break;
      Command& head = c.pushbuffer.front();
      if (head.kind == Command::Kind::compute) {
        if (head.remaining > 0) break;
      } else {
        const Command cmd = head;
        const Outcome o = cmd.kind == Command::Kind::exception ? hooks_.on_exception(c, cmd)
                                                                : hooks_.on_access(c, cmd);
        any = true;
        Channel& after = ch(id);
        if (after.torn_down) break;
        if (o == Outcome::blocked) {
          after.blocked = true;
          break;
        }
      }
      Channel& done_ch = ch(id);
      Command done = std::move(done_ch.pushbuffer.front());
      done_ch.pushbuffer.pop_front();
      ++dispatched_[done_ch.owner];
      any = true;
      if (done.on_complete) done.on_complete();
    }
  }
  return any;
}

void GpuExec::tick() {
  tick_event_.reset();
  in_tick_ = true;
  settle();
  // Work that finished exactly at the slice boundary belongs to that slice.
  if (current_ && tsg_runnable(*current_)) run_heads(*current_);
  while (true) {
    choose_current();
    if (!current_) break;
    if (!run_heads(*current_)) break;
  }
  in_tick_ = false;
  if (!current_) return;

  std::optional<Time> next;
  const Time now = k_.now();
  for (const auto& [id, t] : tsgs_) {
    if (id != *current_ && tsg_runnable(id)) {
      next = std::max(slice_end_, now);
      break;
    }
  }
  for (ChannelId id : tg(*current_).channels) {
    const Channel& c = ch(id);
    if (!channel_ready(c) || c.pushbuffer.front().kind != Command::Kind::compute) continue;
    const Time done = now + c.pushbuffer.front().remaining;
    next = next ? std::min(*next, done) : done;
  }
  if (next) {
    tick_event_ = k_.schedule(*next - now, gpu_ref(), "gpu.tick", [this] { tick(); });
  }
}

}  // namespace mpssim::exec
