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

#include "mpssim/recovery/pair.hpp"
#include "mpssim/world.hpp"

using namespace mpssim;
using namespace mpssim::recovery;

namespace {

workload::ServeSpec one_request(std::uint32_t max_new, std::uint32_t prompt = 16) {
  workload::ServeSpec spec;
  workload::RequestSpec r;
  r.id = 1;
  for (std::uint32_t i = 0; i < prompt; ++i) r.prompt.push_back(i * 3 + 1);
  r.max_new_tokens = max_new;
  spec.requests.push_back(r);
  return spec;
}

workload::ServeSpec mixed() {
  workload::ServeSpec spec;
  spec.kv_blocks = 64;
  spec.requests.push_back({1, 0, std::vector<Token>(40, 5), 24});
  spec.requests.push_back({2, 15000, std::vector<Token>(600, 9), 16});
  spec.requests.push_back({3, 90000, std::vector<Token>(8, 2), 12});
  return spec;
}

std::map<RequestId, std::vector<Token>> baseline(const sim::SimParams& p, const workload::ServeSpec& spec) {
  World w(p);
  w.start_mps();
  auto pair = deploy_pair(w, spec);
  pair->start();
  w.run_until_quiescent();
  REQUIRE(pair->frontend().all_complete());
  return pair->frontend().outputs();
}

struct Crash {
  std::unique_ptr<World> w;
  std::unique_ptr<RecoveryPair> pair;
  Pid injector;
  std::uint64_t standby_dispatched_at_crash = 0;
};

Crash crash_at(const sim::SimParams& p, const workload::ServeSpec& spec, std::uint64_t k,
               faults::ScenarioId s = faults::ScenarioId::sm_exc4, PairOptions opts = {}) {
  Crash c;
  c.w = std::make_unique<World>(p);
  c.w->start_mps();
  c.pair = deploy_pair(*c.w, spec, opts);
  c.injector = c.w->create_client(exec::ClientMode::mps);
  World* w = c.w.get();
  Crash* cp = &c;
  c.pair->frontend().at_tokens(k, [w, cp, s] {
    cp->standby_dispatched_at_crash = w->gpu().dispatched(cp->pair->standby());
    w->inject(cp->injector, s);
  });
  c.pair->start();
  c.w->run_until_quiescent();
  return c;
}

}  // namespace

TEST_CASE("every SM exception fails over to the standby") {
  const sim::SimParams p;
  const auto spec = mixed();
  const auto want = baseline(p, spec);
  for (int code : {2, 4, 5, 6, 7}) {
    CAPTURE(code);
    auto c = crash_at(p, spec, 20, faults::sm_exception_scenario(code));
    CHECK_FALSE(c.w->is_live(c.pair->active()));
    CHECK(c.w->is_live(c.pair->standby()));
    CHECK(c.pair->standby_state() == StandbyState::active);
    CHECK(c.pair->takeover_complete());
    CHECK(c.standby_dispatched_at_crash == 0);
    CHECK(verify_output_equality(c.pair->frontend().outputs(), want).equal);
    CHECK(c.pair->frontend().replay_mismatches() == 0);
  }
}

TEST_CASE("replayed steps: exactly K mod N, never more than N") {
  sim::SimParams p;
  for (std::int64_t n : {1, 16}) {
    p.sync_interval_N = n;
    for (std::uint64_t k = 1; k <= 128; ++k) {
      CAPTURE(n);
      CAPTURE(k);
      auto c = crash_at(p, one_request(static_cast<std::uint32_t>(k + 8)), k);
      const auto& r = c.pair->report();
      REQUIRE(r.has_value());
      REQUIRE(r->caught_up);
      CHECK_FALSE(r->degraded);
      CHECK(r->replayed_steps == k % static_cast<std::uint64_t>(n));
      CHECK(r->replayed_steps <= static_cast<std::uint64_t>(n));
    }
  }
}

TEST_CASE("outage decomposes into detection, warm-up and replay") {
  sim::SimParams p;
  p.liveness_detect_us = 700;
  p.sync_interval_N = 8;
  for (std::uint64_t k : {1, 5, 8, 13, 31}) {
    auto c = crash_at(p, one_request(40), k);
    const auto& r = *c.pair->report();
    CHECK(r.failover_at - r.closed_at == p.liveness_detect_us);
    CHECK(r.awake_at - r.failover_at == p.wake_warmup_us);
    CHECK(r.outage == p.liveness_detect_us + p.wake_warmup_us +
                          static_cast<Duration>(r.replayed_steps) * p.decode_step_us);
    CHECK(r.caught_up_at - r.closed_at == r.outage);
  }
  p.sync_interval_N = 1;
  p.liveness_detect_us = 0;
  auto c = crash_at(p, one_request(40), 17);
  CHECK(c.pair->report()->outage == p.wake_warmup_us);
}

TEST_CASE("recovered output equals the fault-free output token for token") {
  const sim::SimParams p;
  for (std::uint64_t k = 1; k <= 1024; k *= 2) {
    CAPTURE(k);
    const auto spec = one_request(static_cast<std::uint32_t>(k + 32));
    const auto want = baseline(p, spec);
    auto c = crash_at(p, spec, k);
    const auto v = verify_output_equality(c.pair->frontend().outputs(), want);
    CHECK_MESSAGE(v.equal, v.detail);
  }
}

TEST_CASE("output check pinpoints the first differing token") {
  const std::map<RequestId, std::vector<Token>> a{{1, {1, 2, 3}}, {2, {4}}};
  CHECK(verify_output_equality(a, a).equal);
  auto b = a;
  b[1][2] = 9;
  auto v = verify_output_equality(b, a);
  CHECK_FALSE(v.equal);
  CHECK(v.request == 1);
  CHECK(v.index == 2);
  b = a;
  b[2].push_back(5);
  v = verify_output_equality(b, a);
  CHECK_FALSE(v.equal);
  CHECK(v.index == 1);
  b = a;
  b.erase(2);
  CHECK_FALSE(verify_output_equality(b, a).equal);
}

TEST_CASE("a corrupted snapshot shows up as an output difference") {
  sim::SimParams p;
  p.sync_interval_N = 16;
  const auto spec = one_request(40);
  const auto want = baseline(p, spec);
  World w(p);
  w.start_mps();
  auto pair = deploy_pair(w, spec);
  const Pid inj = w.create_client(exec::ClientMode::mps);
  pair->corrupt_delta(1, 3);
  pair->frontend().at_tokens(20, [&] { w.inject(inj, faults::ScenarioId::sm_exc4); });
  pair->start();
  w.run_until_quiescent();
  const auto v = verify_output_equality(pair->frontend().outputs(), want);
  CHECK_FALSE(v.equal);
  CHECK(v.index == 3);
}

TEST_CASE("pair footprint: weights + KV + two process overheads, aliases counted once") {
  const sim::SimParams p;
  const auto spec = mixed();
  World w(p);
  w.start_mps();
  const auto before = w.memory().footprint_pages();
  auto pair = deploy_pair(w, spec);
  const std::uint64_t weights = spec.weight_pages;
  const std::uint64_t kv = spec.kv_blocks * static_cast<std::uint64_t>(p.kv_block_pages);
  const auto overhead = static_cast<std::uint64_t>(p.process_overhead_pages);
  CHECK(w.memory().footprint_pages() - before == weights + kv + 2 * overhead);

  const auto* wa = w.memory().allocation(pair->active_memory().weights);
  const auto* ka = w.memory().allocation(pair->active_memory().kv);
  REQUIRE(wa != nullptr);
  REQUIRE(ka != nullptr);
  CHECK(wa->refcount() == 2);
  CHECK(ka->refcount() == 2);

  w.terminate_client(pair->active(), "test");
  wa = w.memory().allocation(pair->active_memory().weights);
  ka = w.memory().allocation(pair->active_memory().kv);
  REQUIRE(wa != nullptr);
  REQUIRE(ka != nullptr);
  CHECK(wa->refcount() >= 1);
  CHECK(ka->refcount() >= 1);
  CHECK(w.memory().footprint_pages() - before == weights + kv + overhead);
}

TEST_CASE("weights written by the active are visible to the standby after the crash") {
  const sim::SimParams p;
  World w(p);
  w.start_mps();
  auto pair = deploy_pair(w, mixed());
  const auto& a = w.memory().range(pair->active_memory().weights_range);
  const auto& s = w.memory().range(pair->standby_memory().weights_range);
  const auto tag = w.memory().gpu_read_tag(a.space, a.base);
  const ContextId sspace = s.space;
  const VirtAddr sbase = s.base;
  w.terminate_client(pair->active(), "test");
  CHECK(w.memory().gpu_read_tag(sspace, sbase) == tag);
}

TEST_CASE("without KV sharing the standby re-prefills from a private pool") {
  const sim::SimParams p;
  const auto spec = mixed();
  const auto want = baseline(p, spec);
  auto c = crash_at(p, spec, 20, faults::ScenarioId::sm_exc4, PairOptions{false});
  const auto& r = *c.pair->report();
  CHECK(r.adopted_requests == 0);
  CHECK(r.reprefilled_requests > 0);
  CHECK(c.pair->takeover_complete());
  CHECK(verify_output_equality(c.pair->frontend().outputs(), want).equal);
  CHECK(c.pair->standby_memory().kv != c.pair->active_memory().kv);
}

TEST_CASE("a crash before the first snapshot degrades to re-prefill") {
  const sim::SimParams p;
  const auto spec = mixed();
  const auto want = baseline(p, spec);
  World w(p);
  w.start_mps();
  auto pair = deploy_pair(w, spec);
  const Pid inj = w.create_client(exec::ClientMode::mps);
  w.inject(inj, faults::ScenarioId::sm_exc7, 10);
  pair->start();
  w.run_until_quiescent();
  const auto& r = *pair->report();
  CHECK(r.degraded);
  CHECK(r.degraded_reason == "NoSnapshotData");
  CHECK(pair->takeover_complete());
  CHECK(verify_output_equality(pair->frontend().outputs(), want).equal);
}

TEST_CASE("deploy_pair preconditions") {
  sim::SimParams p;
  World w(p);
  try {
    deploy_pair(w, mixed());
    FAIL("expected no MPS session");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::no_mps_session);
  }
  p.sync_interval_N = 0;
  try {
    World w0(p);
    FAIL("expected invalid interval");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_interval);
  }
}

TEST_CASE("isolated MMU faults leave the pair untouched") {
  const sim::SimParams p;
  const auto spec = mixed();
  auto c = crash_at(p, spec, 20, faults::ScenarioId::mmu1_oob_sm);
  CHECK(c.w->is_live(c.pair->active()));
  CHECK_FALSE(c.pair->report().has_value());
  CHECK(c.pair->frontend().all_complete());
}

TEST_CASE("failover runs are deterministic") {
  const sim::SimParams p;
  auto a = crash_at(p, mixed(), 33);
  auto b = crash_at(p, mixed(), 33);
  CHECK(a.w->kernel().trace().serialize() == b.w->kernel().trace().serialize());
}
