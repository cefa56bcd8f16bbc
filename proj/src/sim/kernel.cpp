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

#include "mpssim/sim/kernel.hpp"

namespace mpssim::sim {

EventId EventQueue::push(Time at, EntityRef target, std::string_view kind, std::function<void()> action) {
  const std::uint64_t seq = next_seq_++;
  pending_.emplace(std::pair{at, seq}, Event{at, seq, target, kind, std::move(action)});
  index_.emplace(seq, at);
  return seq;
}

bool EventQueue::cancel(EventId id) {
  auto it = index_.find(id);
  if (it == index_.end()) return false;
  pending_.erase(std::pair{it->second, id});
  index_.erase(it);
  return true;
}

Time EventQueue::next_time() const {
  MPSSIM_ASSERT(!pending_.empty(), "next_time on empty queue");
  return pending_.begin()->first.first;
}

Event EventQueue::pop() {
  MPSSIM_ASSERT(!pending_.empty(), "pop on empty queue");
  auto node = pending_.extract(pending_.begin());
  index_.erase(node.mapped().seq);
  return std::move(node.mapped());
}

Kernel::Kernel(SimParams params) : params_(std::move(params)), rng_(params_.seed) {
  params_.validate();
}

EventId Kernel::schedule(Duration delay, EntityRef target, std::string_view kind, std::function<void()> action) {
  if (delay < 0) fail(ErrorCode::invalid_argument, "negative event delay for " + std::string(kind));
  return queue_.push(clock_.now() + delay, target, kind, std::move(action));
}

DispatchStats Kernel::run(Time max_time) {
  DispatchStats stats;
  while (!queue_.empty() && queue_.next_time() <= max_time) {
    if (dispatched_total_ >= static_cast<std::uint64_t>(params_.livelock_budget)) {
      fail(ErrorCode::livelock_detected,
           "event budget of " + std::to_string(params_.livelock_budget) + " exhausted at t=" +
               std::to_string(clock_.now()));
    }
    Event ev = queue_.pop();
    clock_.advance_to(ev.fire_at);
    ++dispatched_total_;
    if (is_live_ && !is_live_(ev.target)) {
      ++stats.dropped;
      trace_.emit(clock_.now(), ev.target, "event.dropped", {{"event", ev.kind}});
      continue;
    }
    ++stats.dispatched;
    ev.action();
  }
  return stats;
}

}  // namespace mpssim::sim
