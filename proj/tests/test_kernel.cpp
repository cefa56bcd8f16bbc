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

#include "doctest.h"

#include <random>

#include "mpssim/sim/kernel.hpp"
#include "mpssim/sim/params.hpp"
#include "mpssim/sim/trace.hpp"

using namespace mpssim;
using sim::EntityKind;
using sim::EntityRef;

TEST_CASE("events fire in time order, ties in insertion order") {
  sim::Kernel k(sim::SimParams{});
  std::vector<int> order;
  k.schedule(20, EntityRef{}, "c", [&] { order.push_back(3); });
  k.schedule(10, EntityRef{}, "a", [&] { order.push_back(1); });
  k.schedule(10, EntityRef{}, "b", [&] { order.push_back(2); });
  k.schedule(0, EntityRef{}, "z", [&] { order.push_back(0); });
  k.run(1000);
  CHECK(order == std::vector<int>{0, 1, 2, 3});
  CHECK(k.now() == 20);
}

TEST_CASE("random schedules match a sorted oracle") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    sim::Kernel k(sim::SimParams{});
    std::vector<std::pair<Time, int>> want;
    std::vector<std::pair<Time, int>> got;
    const int n = 1 + static_cast<int>(rng() % 50);
    for (int i = 0; i < n; ++i) {
      const Time t = static_cast<Time>(rng() % 30);
      want.emplace_back(t, i);
      k.schedule(t, EntityRef{}, "e", [&got, &k, i] { got.emplace_back(k.now(), i); });
    }
    std::stable_sort(want.begin(), want.end(), [](auto& a, auto& b) { return a.first < b.first; });
    k.run(1000);
    CHECK(got == want);
  }
}

TEST_CASE("cancelled events never fire") {
  sim::Kernel k(sim::SimParams{});
  bool fired = false;
  const auto id = k.schedule(5, EntityRef{}, "x", [&] { fired = true; });
  CHECK(k.cancel(id));
  CHECK_FALSE(k.cancel(id));
  k.run(100);
  CHECK_FALSE(fired);
}

TEST_CASE("events for dead entities are dropped and traced") {
  sim::Kernel k(sim::SimParams{});
  k.set_liveness([](EntityRef e) { return !(e.kind == EntityKind::client && e.id == 2); });
  int fired = 0;
  k.schedule(1, EntityRef::client(Pid(1)), "live", [&] { ++fired; });
  k.schedule(1, EntityRef::client(Pid(2)), "dead", [&] { ++fired; });
  const auto stats = k.run(100);
  CHECK(fired == 1);
  CHECK(stats.dropped == 1);
  const auto& recs = k.trace().records();
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].kind == "event.dropped");
  CHECK(recs[0].entity == "client:2");
}

TEST_CASE("events past the horizon stay queued") {
  sim::Kernel k(sim::SimParams{});
  int fired = 0;
  k.schedule(10, EntityRef{}, "a", [&] { ++fired; });
  k.schedule(500, EntityRef{}, "b", [&] { ++fired; });
  k.run(100);
  CHECK(fired == 1);
  CHECK(k.pending() == 1);
}

TEST_CASE("a self-rescheduling event trips the livelock budget") {
  sim::SimParams p;
  p.livelock_budget = 1000;
  sim::Kernel k(p);
  std::function<void()> again = [&] { k.schedule(0, EntityRef{}, "spin", again); };
  k.schedule(0, EntityRef{}, "spin", again);
  try {
    k.run(100);
    FAIL("expected livelock");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::livelock_detected);
  }
}

TEST_CASE("trace records round-trip through text, including awkward values") {
  sim::Trace t;
  t.emit(7, EntityRef::client(Pid(3)), "weird",
         {{"space", "a b"}, {"pct", "100%"}, {"eq", "k=v"}, {"empty", ""}, {"n", 12}, {"flag", true}});
  t.emit(9, EntityRef::of(EntityKind::uvm), "plain", {});
  const std::string text = t.serialize();
  const sim::Trace back = sim::Trace::parse(text);
  CHECK(back == t);
  CHECK(back.serialize() == text);
  CHECK(back.records()[0].at("space") == "a b");
  CHECK(back.records()[0].at("eq") == "k=v");
  CHECK(back.records()[0].num("n") == 12);
  CHECK(back.records()[0].at("flag") == "yes");
  CHECK(text.rfind("t=7 e=client:3 k=weird ", 0) == 0);
}

TEST_CASE("substreams are stable per key and differ across keys") {
  sim::Rng a(5);
  sim::Rng b(5);
  CHECK(a.substream(1)() == b.substream(1)());
  CHECK(a.substream(1)() != a.substream(2)());
  CHECK(sim::Rng(6).substream(1)() != a.substream(1)());
}

TEST_CASE("parameters: set, get and validation") {
  sim::SimParams p;
  p.set("decode_step_us", "250");
  CHECK(p.decode_step_us == 250);
  CHECK(p.get("decode_step_us") == "250");
  p.set("check_invariants", "false");
  CHECK(p.get("check_invariants") == "false");
  CHECK_THROWS_AS(p.set("no_such_param", "1"), Error);
  CHECK_THROWS_AS(p.set("decode_step_us", "fast"), Error);
  sim::SimParams q;
  q.sync_interval_N = 0;
  try {
    q.validate();
    FAIL("expected invalid interval");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_interval);
  }
  for (const auto& name : sim::SimParams::names()) {
    sim::SimParams r;
    CHECK_NOTHROW(r.set(name, sim::SimParams{}.get(name)));
  }
}
