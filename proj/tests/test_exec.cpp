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

#include "mpssim/world.hpp"

using namespace mpssim;
using exec::ClientMode;

namespace {

TsgId sm_tsg(const World& w, Pid p) { return w.gpu().channel(w.gpu().client(p).sm).tsg; }
TsgId ce_tsg(const World& w, Pid p) { return w.gpu().channel(w.gpu().client(p).ce).tsg; }

}  // namespace

TEST_CASE("MPS clients share the server context and the GR TSG") {
  World w(sim::SimParams{});
  w.start_mps();
  const Pid a = w.create_client(ClientMode::mps);
  const Pid b = w.create_client(ClientMode::mps);
  const Pid s = w.create_client(ClientMode::standalone);
  CHECK(w.context_of(a) == w.context_of(b));
  CHECK(w.context_of(a) == w.gpu().session()->server_context);
  CHECK(w.context_of(s) != w.context_of(a));
  CHECK(sm_tsg(w, a) == sm_tsg(w, b));
  CHECK(sm_tsg(w, a) == w.gpu().session()->gr_tsg);
  CHECK(ce_tsg(w, a) != ce_tsg(w, b));
  CHECK(ce_tsg(w, a) != sm_tsg(w, a));
  CHECK(w.gpu().tsg(ce_tsg(w, a)).kind == exec::TsgKind::per_client_ce);
  CHECK(w.gpu().tsg(sm_tsg(w, s)).kind == exec::TsgKind::standalone);
  CHECK(w.gpu().tsg(sm_tsg(w, s)).owner == s);
}

TEST_CASE("MPS clients without a session are rejected") {
  World w(sim::SimParams{});
  CHECK_THROWS_AS(w.create_client(ClientMode::mps), Error);
}

TEST_CASE("channels of one TSG progress together") {
  World w(sim::SimParams{});
  w.start_mps();
  const Pid a = w.create_client(ClientMode::mps);
  const Pid b = w.create_client(ClientMode::mps);
  Time ta = 0;
  Time tb = 0;
  w.launch(a, 3000, "a", [&] { ta = w.now(); });
  w.launch(b, 3000, "b", [&] { tb = w.now(); });
  w.run_until_quiescent();
  CHECK(ta == 3000);
  CHECK(tb == 3000);
}

TEST_CASE("separate TSGs time-slice round-robin") {
  // Oracle: replay the slices by hand.
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    sim::SimParams p;
    p.time_slice_us = 1 + static_cast<Duration>(rng() % 1500);
    World w(p);
    const int n = 1 + static_cast<int>(rng() % 4);
    std::vector<Pid> pids;
    std::vector<Duration> work;
    std::vector<Time> got(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < n; ++i) {
      pids.push_back(w.create_client(ClientMode::standalone));
      work.push_back(1 + static_cast<Duration>(rng() % 5000));
      w.launch(pids.back(), work.back(), "k", [&got, &w, i] { got[static_cast<std::size_t>(i)] = w.now(); });
    }
    w.run_until_quiescent();

    std::vector<Duration> left = work;
    std::vector<Time> want(static_cast<std::size_t>(n), -1);
    Time t = 0;
    std::size_t live = static_cast<std::size_t>(n);
    std::size_t cur = 0;
    while (live > 0) {
      if (left[cur] > 0) {
        const Duration run = live == 1 ? left[cur] : std::min(left[cur], p.time_slice_us);
        t += run;
        left[cur] -= run;
        if (left[cur] == 0) {
          want[cur] = t;
          --live;
        }
      }
      cur = (cur + 1) % static_cast<std::size_t>(n);
    }
    CAPTURE(p.time_slice_us);
    CHECK(got == want);
  }
}

TEST_CASE("a stalled TSG makes no compute progress") {
  World w(sim::SimParams{});
  const Pid a = w.create_client(ClientMode::standalone);
  Time done = 0;
  w.launch(a, 2000, "a", [&] { done = w.now(); });
  const TsgId t = sm_tsg(w, a);
  w.kernel().schedule(500, sim::EntityRef{}, "stall", [&] { w.gpu().stall_tsg(t); });
  w.kernel().schedule(1500, sim::EntityRef{}, "unstall", [&] { w.gpu().unstall_tsg(t); });
  w.run_until_quiescent();
  CHECK(done == 3000);
}

TEST_CASE("tearing down the GR TSG terminates every MPS client on it") {
  World w(sim::SimParams{});
  w.start_mps();
  const Pid a = w.create_client(ClientMode::mps);
  const Pid b = w.create_client(ClientMode::mps);
  const Pid s = w.create_client(ClientMode::standalone);
  std::vector<Pid> died;
  w.on_termination([&](Pid p, std::string_view) { died.push_back(p); });
  bool finished = false;
  w.launch(a, 5000, "a", [&] { finished = true; });
  w.kernel().schedule(100, sim::EntityRef{}, "kill",
                      [&] { w.gpu().teardown_tsg(w.gpu().session()->gr_tsg, "test"); });
  w.run_until_quiescent();
  CHECK_FALSE(finished);
  CHECK_FALSE(w.is_live(a));
  CHECK_FALSE(w.is_live(b));
  CHECK(w.is_live(s));
  std::sort(died.begin(), died.end());
  CHECK(died == std::vector<Pid>{a, b});
  CHECK(w.gpu().client(a).reason == "test");
}

TEST_CASE("terminating a client releases its memory and drops its events") {
  World w(sim::SimParams{});
  const Pid a = w.create_client(ClientMode::standalone);
  const auto before = w.memory().footprint_pages();
  w.memory().alloc_device(a, w.context_of(a), 8 * kPageSize);
  CHECK(w.memory().footprint_pages() == before + 8);
  bool fired = false;
  w.kernel().schedule(50, sim::EntityRef::client(a), "late", [&] { fired = true; });
  w.terminate_client(a, "test");
  w.run_until_quiescent();
  CHECK_FALSE(fired);
  CHECK(w.memory().ranges_of(a).empty());
  CHECK(w.memory().footprint_pages() == before - static_cast<std::uint64_t>(w.params().process_overhead_pages));
}
