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

#include "mpssim/recovery/pair.hpp"

#include <algorithm>

namespace mpssim::recovery {

using workload::Frontend;
using workload::ServeEngine;

std::string_view to_string(StandbyState s) {
  switch (s) {
    case StandbyState::sleeping: return "sleeping";
    case StandbyState::waking: return "waking";
    case StandbyState::active: return "active";
  }
  return "?";
}

namespace {

sim::EntityRef pair_ref() { return sim::EntityRef::of(sim::EntityKind::pair); }

}  // namespace

RecoveryPair::RecoveryPair(World& w, workload::ServeSpec spec, PairOptions opts)
    : w_(w), opts_(opts), ring_(static_cast<std::size_t>(w.params().ring_capacity)) {
  frontend_ = std::make_unique<Frontend>(w, std::move(spec));
  const Pid active = w.create_client(exec::ClientMode::mps);
  const Pid standby = w.create_client(exec::ClientMode::standalone);
  link_ = LivenessLink{active, standby, true, 0};
  active_mem_ = workload::create_serve_memory(w, active, frontend_->spec());
  if (opts_.kv_sharing) {
    standby_mem_ = workload::map_serve_memory(w, standby, active_mem_);
  } else {
    standby_mem_ = active_mem_;
    standby_mem_.weights_range = w.memory().vmm_map(standby, w.context_of(standby), active_mem_.weights);
    standby_mem_.kv = AllocHandle();
    standby_mem_.kv_range = RangeId();
  }
  active_engine_ = std::make_unique<ServeEngine>(w, active, active_mem_, frontend_->spec(), *frontend_,
                                                 opts_.kv_sharing ? this : nullptr);
  frontend_->attach(active_engine_.get());
  w.on_termination([this](Pid p, std::string_view) {
    if (p == link_.active_pid && link_.open) on_link_closed();
  });
  w.kernel().emit(pair_ref(), "pair.deploy",
                  {{"active", active}, {"standby", standby}, {"kv_sharing", opts_.kv_sharing}});
}

void RecoveryPair::start() { frontend_->start(); }

bool RecoveryPair::takeover_complete() const {
  return state_ == StandbyState::active && w_.is_live(standby()) && frontend_->all_complete();
}

void RecoveryPair::corrupt_delta(RequestId request, std::uint64_t pos) { corruption_ = {request, pos}; }

void RecoveryPair::publish(Pid from, std::vector<ForwardSnapshot> deltas) {
  MPSSIM_ASSERT(from == link_.active_pid, "snapshot from a process other than the active");
  if (corruption_) {
    for (ForwardSnapshot& d : deltas) {
      const std::uint64_t first = d.progress - d.token_delta.size();
      if (d.request_id != corruption_->first || corruption_->second < first || corruption_->second >= d.progress) {
        continue;
      }
      Token& t = d.token_delta[corruption_->second - first];
      t = static_cast<Token>((t + 1) % static_cast<std::uint64_t>(w_.params().vocab_size));
      w_.kernel().emit(pair_ref(), "pair.corrupt", {{"req", d.request_id}, {"pos", corruption_->second}});
      corruption_.reset();
      break;
    }
  }
  const std::size_t n = deltas.size();
  const std::uint64_t seq = ring_.publish(std::move(deltas));
  w_.kernel().emit(pair_ref(), "pair.publish", {{"seq", seq}, {"deltas", n}});
  w_.kernel().schedule(0, sim::EntityRef::client(standby()), "pair.consume", [this] { consume_all(); });
}

void RecoveryPair::consume_all() {
  while (auto b = ring_.consume()) {
    fold_.apply(*b);
    w_.kernel().emit(sim::EntityRef::client(standby()), "pair.consume", {{"seq", b->seq}});
  }
}

void RecoveryPair::on_link_closed() {
  link_.open = false;
  link_.closed_at = w_.now();
  frontend_->attach(nullptr);
  w_.kernel().emit(pair_ref(), "pair.link_closed", {{"active", link_.active_pid}});
  w_.kernel().schedule(w_.params().liveness_detect_us, sim::EntityRef::client(standby()), "pair.failover",
                       [this] { failover(); });
}

void RecoveryPair::failover() {
  MPSSIM_ASSERT(state_ == StandbyState::sleeping, "failover on a standby that is not sleeping");
  consume_all();
  state_ = StandbyState::waking;
  RecoveryReport r;
  r.closed_at = link_.closed_at;
  r.failover_at = w_.now();
  r.resumed_seq = fold_.last_seq();
  if (fold_.empty()) {
    r.degraded = true;
    r.degraded_reason = std::string(to_string(ErrorCode::no_snapshot_data));
  }
  report_ = r;
  w_.kernel().emit(sim::EntityRef::client(standby()), "pair.wake",
                   {{"seq", fold_.last_seq()}, {"degraded", r.degraded}});
  w_.kernel().schedule(w_.params().wake_warmup_us, sim::EntityRef::client(standby()), "pair.awake",
                       [this] { wake(); });
}

void RecoveryPair::wake() {
  state_ = StandbyState::active;
  RecoveryReport& r = *report_;
  r.awake_at = w_.now();
  if (!opts_.kv_sharing) standby_mem_ = workload::with_private_kv(w_, standby(), standby_mem_, frontend_->spec());
  standby_engine_ = std::make_unique<ServeEngine>(w_, standby(), standby_mem_, frontend_->spec(), *frontend_);
  frontend_->attach(standby_engine_.get());

  std::uint64_t first_resumed = UINT64_MAX;
  for (RequestId id : frontend_->arrived_unfinished()) {
    const auto& delivered = frontend_->delivered(id);
    auto it = fold_.requests().find(id);
    if (!r.degraded && it != fold_.requests().end() && !it->second.done) {
      standby_engine_->adopt(frontend_->request(id), it->second);
      ++r.adopted_requests;
    } else {
      standby_engine_->enqueue(frontend_->request(id));
      ++r.reprefilled_requests;
    }
    if (!delivered.empty()) catch_up_targets_[id] = delivered.size();
    first_resumed = std::min<std::uint64_t>(first_resumed, delivered.size());
  }
  r.first_resumed_token = first_resumed == UINT64_MAX ? 0 : first_resumed;
  w_.kernel().emit(sim::EntityRef::client(standby()), "pair.awake",
                   {{"adopted", r.adopted_requests}, {"reprefill", r.reprefilled_requests}});
  steps_at_wake_ = standby_engine_->steps();
  standby_engine_->on_step([this](std::uint64_t) { check_caught_up(); });
  check_caught_up();
}

void RecoveryPair::check_caught_up() {
  RecoveryReport& r = *report_;
  if (r.caught_up) return;
  for (auto it = catch_up_targets_.begin(); it != catch_up_targets_.end();) {
    const bool met = frontend_->complete(it->first) || standby_engine_->progress(it->first) >= it->second;
    it = met ? catch_up_targets_.erase(it) : std::next(it);
  }
  if (!catch_up_targets_.empty()) return;
  r.caught_up = true;
  r.caught_up_at = w_.now();
  r.replayed_steps = standby_engine_->steps() - steps_at_wake_;
  r.outage = r.caught_up_at - r.closed_at;
  w_.kernel().emit(pair_ref(), "pair.caught_up",
                   {{"outage", r.outage}, {"replayed_steps", r.replayed_steps}, {"degraded", r.degraded}});
}

std::unique_ptr<RecoveryPair> deploy_pair(World& w, workload::ServeSpec spec, PairOptions opts) {
  if (w.params().sync_interval_N < 1) fail(ErrorCode::invalid_interval, "N must be >= 1");
  if (!w.gpu().session()) fail(ErrorCode::no_mps_session, "deploy_pair needs an MPS session");
  return std::make_unique<RecoveryPair>(w, std::move(spec), opts);
}

OutputVerdict verify_output_equality(const std::map<RequestId, std::vector<Token>>& recovered,
                                     const std::map<RequestId, std::vector<Token>>& baseline) {
  OutputVerdict v;
  for (const auto& [id, want] : baseline) {
    auto it = recovered.find(id);
    if (it == recovered.end()) {
      v.equal = false;
      v.request = id;
      v.detail = "request " + std::to_string(id) + " missing from recovered run";
      return v;
    }
    const auto& got = it->second;
    const std::size_t n = std::min(got.size(), want.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (got[i] != want[i]) {
        v.equal = false;
        v.request = id;
        v.index = i;
        v.detail = "request " + std::to_string(id) + " differs at token " + std::to_string(i);
        return v;
      }
    }
    if (got.size() != want.size()) {
      v.equal = false;
      v.request = id;
      v.index = n;
      v.detail = "request " + std::to_string(id) + " length " + std::to_string(got.size()) + " vs " +
                 std::to_string(want.size());
      return v;
    }
  }
  for (const auto& [id, got] : recovered) {
    if (baseline.count(id) == 0) {
      v.equal = false;
      v.request = id;
      v.detail = "request " + std::to_string(id) + " missing from baseline";
      return v;
    }
  }
  return v;
}

}  // namespace mpssim::recovery
