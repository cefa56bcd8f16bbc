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

#include <algorithm>

#include "mpssim/workload/serve.hpp"
#include "mpssim/workload/victim.hpp"
#include "mpssim/world.hpp"

using namespace mpssim;
using exec::ClientMode;
using faults::ScenarioId;
using pipeline::Resolution;

namespace {

bool has_kind(const World& w, std::string_view kind) {
  for (const auto& r : w.kernel().trace().records()) {
    if (r.kind == kind) return true;
  }
  return false;
}

std::size_t count_prefix(const World& w, std::string_view prefix) {
  std::size_t n = 0;
  for (const auto& r : w.kernel().trace().records()) n += r.kind.rfind(prefix, 0) == 0 ? 1 : 0;
  return n;
}

// Victim loop, a serving client and a benign demand-paging client on one
// MPS server.
std::string busy_run(bool isolation, bool benign_faults) {
  World w(sim::SimParams{}, isolation);
  w.start_mps();
  const Pid victim = w.create_client(ClientMode::mps);
  const Pid server = w.create_client(ClientMode::mps);
  const Pid pager = w.create_client(ClientMode::mps);
  workload::VictimLoop loop(w, victim, 10, 700);
  workload::ServeSpec spec;
  spec.requests.push_back({1, 0, {1, 2, 3}, 12});
  spec.requests.push_back({2, 3000, {4, 5, 6, 7, 8}, 9});
  const auto mem = workload::create_serve_memory(w, server, spec);
  workload::Frontend fe(w, spec);
  workload::ServeEngine engine(w, server, mem, fe.spec(), fe);
  fe.attach(&engine);
  loop.start();
  fe.start();
  if (benign_faults) {
    w.inject(pager, ScenarioId::benign_demand_paging_sm, 1500);
    w.inject(pager, ScenarioId::benign_page_fault_ce, 2500);
    w.inject(pager, ScenarioId::benign_invalid_prefetch_sm, 3500);
  }
  w.run_until_quiescent();
  CHECK(loop.verdict() == "ALIVE");
  CHECK(fe.all_complete());
  return w.kernel().trace().serialize();
}

struct Faulted {
  std::unique_ptr<World> w;
  Pid victim;
  Pid injector;
  std::unique_ptr<workload::VictimLoop> loop;
};

Faulted faulted(ScenarioId s, bool isolation, ClientMode mode = ClientMode::mps) {
  Faulted f;
  f.w = std::make_unique<World>(sim::SimParams{}, isolation);
  f.w->start_mps();
  f.victim = f.w->create_client(mode);
  f.injector = f.w->create_client(ClientMode::mps);
  f.loop = std::make_unique<workload::VictimLoop>(*f.w, f.victim, 20, 1000);
  f.loop->start();
  f.w->inject(f.injector, s, 5000, faults::is_parse_time(s));
  f.w->run_until_quiescent();
  return f;
}

}  // namespace

TEST_CASE("without faults the isolation path never runs and traces match byte for byte") {
  for (bool benign : {false, true}) {
    CAPTURE(benign);
    const std::string on = busy_run(true, benign);
    const std::string off = busy_run(false, benign);
    CHECK(on == off);
    CHECK(on.find("uvm.isolate") == std::string::npos);
    CHECK(on.find("mem.redirect") == std::string::npos);
    CHECK(on.find("uvm.fatal_report") == std::string::npos);
  }
}

TEST_CASE("benign faults are serviced in place") {
  for (ScenarioId s : {ScenarioId::benign_demand_paging_sm, ScenarioId::benign_invalid_prefetch_sm,
                       ScenarioId::benign_page_fault_ce, ScenarioId::benign_page_fault_pbdma}) {
    CAPTURE(faults::info(s).name);
    auto f = faulted(s, false);
    CHECK(f.loop->verdict() == "ALIVE");
    CHECK(f.w->is_live(f.injector));
    const auto& out = f.w->faults().outcomes();
    REQUIRE_FALSE(out.empty());
    for (const auto& o : out) CHECK(o.resolution == Resolution::serviced);
    CHECK(out.front().scenario == s);
  }
}

TEST_CASE("isolation terminates only the faulting client after the mechanism latency") {
  const sim::SimParams p;
  for (ScenarioId s : {ScenarioId::mmu1_oob_sm, ScenarioId::mmu2_am_cpu_sm, ScenarioId::mmu3_am_gpu_sm,
                       ScenarioId::mmu4_am_vmm_sm, ScenarioId::mmu5_zombie_sm, ScenarioId::mmu6_nonmigratable_sm,
                       ScenarioId::mmu11_oob_pbdma}) {
    CAPTURE(faults::info(s).name);
    auto f = faulted(s, true);
    CHECK(f.loop->verdict() == "ALIVE");
    CHECK_FALSE(f.w->is_live(f.injector));
    // Trigger scripts may populate pages first; those faults are serviced.
    std::vector<pipeline::Outcome> out;
    for (const auto& o : f.w->faults().outcomes()) {
      if (o.resolution != Resolution::serviced) out.push_back(o);
    }
    REQUIRE(out.size() == 1);
    CHECK(out[0].resolution == Resolution::isolated);
    CHECK(out[0].scenario == s);
    CHECK(out[0].terminated == f.injector);
    CHECK(out[0].mechanism == faults::info(s).mechanism);
    const Duration latency = out[0].mechanism == faults::Mechanism::m1   ? p.m1_us
                             : out[0].mechanism == faults::Mechanism::m2 ? p.m2_us
                                                                         : p.m3_us;
    const auto& recs = f.w->faults().records();
    const auto rec = std::find_if(recs.begin(), recs.end(), [&](const auto& r) { return r.id == out[0].fault; });
    REQUIRE(rec != recs.end());
    CHECK(out[0].resolved_at - rec->detected_at == latency);
    CHECK(f.w->gpu().client(f.injector).reason == "isolation");
    CHECK(f.w->faults().stats().rc_recoveries == 0);
    CHECK(f.w->faults().notifiers().empty());
  }
}

TEST_CASE("without isolation a shared-TSG fault tears down every co-client") {
  for (ScenarioId s : {ScenarioId::mmu1_oob_sm, ScenarioId::mmu4_am_vmm_sm, ScenarioId::mmu11_oob_pbdma}) {
    CAPTURE(faults::info(s).name);
    auto f = faulted(s, false);
    CHECK(f.loop->verdict().rfind("DIED", 0) == 0);
    CHECK_FALSE(f.w->is_live(f.injector));
    CHECK(f.w->gpu().client(f.victim).reason == "fault_propagation");
    CHECK(f.w->faults().stats().fatal_reports == 1);
    CHECK(f.w->faults().stats().rc_recoveries == 1);
    const auto& n = f.w->faults().notifiers();
    REQUIRE(n.count(f.victim) == 1);
    CHECK(n.at(f.victim).source == faults::info(s).name);
    CHECK(n.count(f.injector) == 1);
  }
}

TEST_CASE("a standalone victim survives shared-TSG faults either way") {
  for (bool iso : {false, true}) {
    auto f = faulted(ScenarioId::mmu1_oob_sm, iso, ClientMode::standalone);
    CHECK(f.loop->verdict() == "ALIVE");
  }
}

TEST_CASE("copy engine faults stay in the faulting client's own TSG") {
  for (bool iso : {false, true}) {
    auto f = faulted(ScenarioId::mmu7_oob_ce, iso);
    CHECK(f.loop->verdict() == "ALIVE");
    CHECK_FALSE(f.w->is_live(f.injector));
    CHECK(f.w->faults().notifiers().count(f.victim) == 0);
  }
}

TEST_CASE("non-replayable faults pass through the shadow buffer; replayable ones stall") {
  auto ce = faulted(ScenarioId::mmu7_oob_ce, false);
  CHECK(has_kind(*ce.w, "rmgsp.shadow_copy"));
  CHECK(has_kind(*ce.w, "tsg.preempt"));
  CHECK(ce.w->faults().buffer(pipeline::BufferKind::non_replayable).put == 1);
  CHECK(ce.w->faults().records().front().verdicts.replayable == faults::Replayability::non_replayable);

  auto sm = faulted(ScenarioId::mmu1_oob_sm, true);
  CHECK(has_kind(*sm.w, "tsg.stall"));
  CHECK_FALSE(has_kind(*sm.w, "rmgsp.shadow_copy"));
  CHECK(sm.w->faults().buffer(pipeline::BufferKind::replayable).put == 1);
  CHECK(sm.w->faults().records().back().channel.has_value());
}

TEST_CASE("parse-time faults are fatal even with isolation on") {
  auto f = faulted(ScenarioId::parse_mmu_structure, true);
  CHECK(f.loop->verdict().rfind("DIED", 0) == 0);
  CHECK_FALSE(has_kind(*f.w, "uvm.isolate"));
  CHECK(f.w->faults().outcomes().front().resolution == Resolution::fatal);
}

TEST_CASE("SM exceptions carry no channel and kill the whole MPS server TSG") {
  for (int code : {2, 4, 5, 6, 7}) {
    const ScenarioId s = faults::sm_exception_scenario(code);
    auto f = faulted(s, true);
    CHECK(f.loop->verdict().rfind("DIED", 0) == 0);
    const auto& rec = f.w->faults().records().front();
    CHECK_FALSE(rec.channel.has_value());
    CHECK(rec.exception_code == code);
    CHECK(f.w->faults().stats().traps == 1);
    CHECK_FALSE(has_kind(*f.w, "uvm.isolate"));
  }
}

TEST_CASE("every mutation leaves a trace record") {
  auto f = faulted(ScenarioId::mmu2_am_cpu_sm, true);
  CHECK(count_prefix(*f.w, "mem.") > 0);
  CHECK(count_prefix(*f.w, "fault.raise") == 1);
  CHECK(count_prefix(*f.w, "uvm.isolate") == 1);
  CHECK(count_prefix(*f.w, "client.terminated") == 1);
}
