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
#include <functional>
#include <map>
#include <random>
#include <string_view>
#include <unordered_map>
#include <utility>

#include "mpssim/common.hpp"
#include "mpssim/sim/params.hpp"
#include "mpssim/sim/trace.hpp"

namespace mpssim::sim {

class VirtualClock {
 public:
  Time now() const { return now_; }
  void advance_to(Time t) {
    MPSSIM_ASSERT(t >= now_, "virtual clock moved backwards");
    now_ = t;
  }

 private:
  Time now_ = 0;
};

using EventId = std::uint64_t;

struct Event {
  Time fire_at = 0;
  std::uint64_t seq = 0;
  EntityRef target;
  std::string_view kind;  // static storage only
  std::function<void()> action;
};

/// Pending events ordered by (fire_at, seq). seq is the insertion counter and
/// doubles as the event id, so equal-time events pop in insertion order.
class EventQueue {
 public:
  EventId push(Time at, EntityRef target, std::string_view kind, std::function<void()> action);
  bool cancel(EventId id);

  bool empty() const { return pending_.empty(); }
  std::size_t size() const { return pending_.size(); }
  Time next_time() const;
  Event pop();

 private:
  std::map<std::pair<Time, std::uint64_t>, Event> pending_;
  std::unordered_map<EventId, Time> index_;
  std::uint64_t next_seq_ = 1;
};

/// splitmix64 finalizer; the basis of every keyed random stream.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// The World's single seeded source. Modules never share an engine; they
/// derive an independent stream keyed by an entity id.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}
  std::uint64_t seed() const { return seed_; }
  std::mt19937_64 substream(std::uint64_t key) const { return std::mt19937_64(mix64(seed_ ^ mix64(key))); }

 private:
  std::uint64_t seed_;
};

struct DispatchStats {
  std::uint64_t dispatched = 0;
  std::uint64_t dropped = 0;
};

/// Clock, event queue, trace, parameters, and randomness of one run. Owned by
/// a World and handed by reference to every simulated component.
class Kernel {
 public:
  explicit Kernel(SimParams params);
  Kernel(const Kernel&) = delete;
  Kernel& operator=(const Kernel&) = delete;

  Time now() const { return clock_.now(); }
  const SimParams& params() const { return params_; }
  const Rng& rng() const { return rng_; }
  Trace& trace() { return trace_; }
  const Trace& trace() const { return trace_; }
  std::size_t pending() const { return queue_.size(); }

  EventId schedule(Duration delay, EntityRef target, std::string_view kind, std::function<void()> action);
  bool cancel(EventId id) { return queue_.cancel(id); }

  /// Events whose target is not live are dropped with a trace record.
  void set_liveness(std::function<bool(EntityRef)> is_live) { is_live_ = std::move(is_live); }

  void emit(EntityRef who, std::string_view kind,
            std::initializer_list<std::pair<std::string_view, FieldValue>> fields = {}) {
    trace_.emit(clock_.now(), who, kind, fields);
  }

  /// Dispatches until the queue is empty or the next event lies beyond
  /// max_time. Throws Error(livelock_detected) once the livelock budget is
  /// exhausted.
  DispatchStats run(Time max_time);

 private:
  SimParams params_;
  VirtualClock clock_;
  EventQueue queue_;
  Trace trace_;
  Rng rng_;
  std::function<bool(EntityRef)> is_live_;
  std::uint64_t dispatched_total_ = 0;
};

}  // namespace mpssim::sim
