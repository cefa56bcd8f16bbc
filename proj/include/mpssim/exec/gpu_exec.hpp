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
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mpssim/common.hpp"
#include "mpssim/sim/kernel.hpp"

namespace mpssim::exec {

enum class ClientMode : std::uint8_t { mps, standalone };
enum class ChannelState : std::uint8_t { idle, running, stalled, preempted, torn_down };
enum class TsgKind : std::uint8_t { shared_gr, per_client_ce, standalone };

std::string_view to_string(ClientMode m);
std::string_view to_string(ChannelState s);
std::string_view to_string(TsgKind k);

/// One pushbuffer entry. Compute commands occupy their engine for
/// `duration`; everything else executes the moment it reaches the head.
struct Command {
  enum class Kind : std::uint8_t { compute, access, semaphore_wait, exception };

  Kind kind = Kind::compute;
  Duration duration = 0;
  VirtAddr va = 0;
  AccessType access = AccessType::read;
  std::uint64_t value = 0;
  int exception_code = 0;
  std::string label;
  std::function<void()> on_complete;

  Duration remaining = 0;  // compute progress, maintained by the scheduler

  static Command compute(Duration d, std::string label = {}, std::function<void()> done = {});
  static Command mem_access(VirtAddr va, AccessType a, std::uint64_t value = 0, std::function<void()> done = {});
  static Command semaphore_wait(VirtAddr va, std::function<void()> done = {});
  static Command exception(int code);
};

struct Channel {
  ChannelId id;
  Pid owner;
  EngineClass engine = EngineClass::sm;
  TsgId tsg;
  bool torn_down = false;
  bool blocked = false;  // head command waits on fault resolution
  std::deque<Command> pushbuffer;
};

struct Tsg {
  TsgId id;
  TsgKind kind = TsgKind::standalone;
  Pid owner;  // invalid for the shared GR TSG
  std::vector<ChannelId> channels;
  int stall_refs = 0;
  bool preempted = false;
  bool destroyed = false;
};

struct Client {
  Pid pid;
  ClientMode mode = ClientMode::mps;
  ContextId context;
  ChannelId sm;
  ChannelId ce;
  ChannelId pbdma;
  bool terminated = false;
  std::string reason;
  Time terminated_at = 0;
};

struct MpsSession {
  ContextId server_context;
  std::set<Pid> clients;
  TsgId gr_tsg;
};

enum class Outcome : std::uint8_t { completed, blocked };

/// Callbacks into the rest of the world for commands that touch memory or
/// raise exceptions. They may stall, preempt, or tear down TSGs
/// synchronously.
class ExecHooks {
 public:
  virtual ~ExecHooks() = default;
  virtual Outcome on_access(const Channel& ch, const Command& cmd) = 0;
  virtual Outcome on_exception(const Channel& ch, const Command& cmd) = 0;
  virtual void on_client_terminated(Pid pid, std::string_view reason) = 0;
};

/// Clients, channels, TSGs, the MPS session and the round-robin TSG
/// scheduler. Compute progresses only while its TSG holds the GPU, and all
/// runnable channels of that TSG progress together.
class GpuExec {
 public:
  GpuExec(sim::Kernel& k, ExecHooks& hooks);

  void start_mps_session();
  const std::optional<MpsSession>& session() const { return session_; }

  /// Throws NoMpsSession for an mps client without a session.
  Pid create_client(ClientMode mode);

  void submit(ChannelId ch, Command cmd);

  // Fault-and-stall: all channels of the TSG stop, including idle ones.
  void stall_tsg(TsgId t);
  void unstall_tsg(TsgId t);
  // Fault-and-switch: the TSG is taken off the GPU until resumed.
  void preempt_tsg(TsgId t);
  void resume_tsg(TsgId t);

  /// Tears down every channel of the TSG and terminates each owner whose
  /// context died with it. Returns the distinct affected pids.
  std::vector<Pid> teardown_tsg(TsgId t, std::string_view reason);
  /// Throws UnknownPid for unknown or already terminated pids.
  void terminate_client(Pid pid, std::string_view reason);

  const Client& client(Pid pid) const;
  bool has_client(Pid pid) const { return clients_.count(pid) != 0; }
  bool is_live(Pid pid) const;
  const Channel& channel(ChannelId id) const;
  const Tsg& tsg(TsgId id) const;
  ChannelState channel_state(ChannelId id) const;
  std::optional<TsgId> current_tsg() const { return current_; }
  std::vector<Pid> pids() const;
  std::vector<TsgId> tsgs() const;
  std::uint64_t dispatched(Pid pid) const;
  std::uint64_t live_channel_count() const;
  std::uint64_t created_channel_count() const { return channels_.size(); }
  std::uint64_t torn_channel_count() const;
  bool tsg_runnable(TsgId t) const;

 private:
  ChannelId add_channel(Pid owner, EngineClass e, TsgId tsg);
  TsgId add_tsg(TsgKind kind, Pid owner);
  Channel& ch(ChannelId id);
  Tsg& tg(TsgId id);
  bool channel_ready(const Channel& c) const;
  void clear_blocked(Tsg& t);
  void settle();
  void request_pump();
  void tick();
  void choose_current();
  bool run_heads(TsgId t);

  sim::Kernel& k_;
  ExecHooks& hooks_;
  std::optional<MpsSession> session_;
  std::map<Pid, Client> clients_;
  std::map<ChannelId, Channel> channels_;
  std::map<TsgId, Tsg> tsgs_;
  std::map<Pid, std::uint64_t> dispatched_;
  std::optional<TsgId> current_;
  Time slice_end_ = 0;
  Time last_settle_ = 0;
  std::optional<sim::EventId> tick_event_;
  bool in_tick_ = false;
  std::uint64_t next_pid_ = 1;
  std::uint64_t next_channel_ = 1;
  std::uint64_t next_tsg_ = 1;
  std::uint64_t next_context_ = 1;
};

}  // namespace mpssim::exec
