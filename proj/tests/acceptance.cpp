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

// Acceptance run: one line per criterion, exit status 0 only if all pass.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "mpssim/faults/audit.hpp"
#include "mpssim/harness/runner.hpp"
#include "mpssim/recovery/pair.hpp"
#include "mpssim/workload/serve.hpp"
#include "mpssim/workload/victim.hpp"
#include "mpssim/world.hpp"
#include "snapshot_oracle.hpp"

using namespace mpssim;
using faults::ScenarioId;
using workload::RequestId;
using workload::Token;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail = what;  // keep the first failure
    pass = false;
  }
};

harness::RunResult run_bundled(const std::string& file) {
  return harness::run_scenario(harness::load_scenario(std::string(MPSSIM_SCENARIO_DIR) + "/" + file));
}

std::string get(const harness::Report& r, const std::string& key) {
  const auto it = r.actual.find(key);
  return it == r.actual.end() ? "<missing>" : it->second;
}

std::string name(ScenarioId s) { return std::string(faults::info(s).name); }

// Containment verdicts per numbered MMU row: victim without isolation, with.
Outcome containment() {
  struct Row {
    int number;
    const char* without;
    const char* with;
  };
  const Row rows[] = {{1, "DIED", "ALIVE"}, {2, "DIED", "ALIVE"},  {3, "DIED", "ALIVE"},
                      {4, "DIED", "ALIVE"}, {5, "DIED", "ALIVE"},  {6, "DIED", "ALIVE"},
                      {7, "ALIVE", "ALIVE"}, {8, "ALIVE", "ALIVE"}, {11, "DIED", "ALIVE"}};
  const auto r = run_bundled("table3.scenario").report;
  Outcome o;
  for (const auto& row : rows) {
    const std::string f = name(*faults::scenario_by_number(row.number));
    o.require(get(r, f + ".without") == row.without, "#" + std::to_string(row.number) + " without isolation");
    o.require(get(r, f + ".with") == row.with, "#" + std::to_string(row.number) + " with isolation");
  }
  o.detail = o.pass ? "9 rows x 2 columns match" : o.detail;
  return o;
}

Outcome recovery_coverage() {
  const auto r = run_bundled("table4.scenario").report;
  Outcome o;
  for (int code : {2, 4, 5, 6, 7}) {
    const std::string f = name(faults::sm_exception_scenario(code));
    o.require(get(r, f + ".active") == "DIED", f + " active");
    o.require(get(r, f + ".standby") == "ALIVE", f + " standby");
    o.require(get(r, f + ".takeover") == "yes", f + " takeover");
  }
  o.detail = o.pass ? "5 exception codes fail over" : o.detail;
  return o;
}

Outcome reachability() {
  faults::AuditConfig cfg;
  cfg.depth = 3;
  const auto rep = faults::audit(cfg);
  Outcome o;
  std::uint64_t gray_hits = 0;
  for (int n : {9, 10, 12, 13, 14}) gray_hits += rep.cell(*faults::scenario_by_number(n)).hits;
  o.require(gray_hits == 0, "gray row raised");
  o.require(rep.violations.empty(), "violations reported");
  o.require(rep.sequences == (1 + 10 + 100 + 1000) * 24 + 5, "sequence count");
  o.detail = o.pass ? std::to_string(rep.sequences) + " sequences, 0 gray hits" : o.detail;
  return o;
}

workload::ServeSpec one_request(std::uint32_t max_new) {
  workload::ServeSpec spec;
  workload::RequestSpec r;
  r.id = 1;
  for (std::uint32_t i = 0; i < 16; ++i) r.prompt.push_back(i * 7 + 3);
  r.max_new_tokens = max_new;
  spec.requests.push_back(r);
  return spec;
}

std::map<RequestId, std::vector<Token>> fault_free(const sim::SimParams& p, const workload::ServeSpec& spec) {
  World w(p);
  w.start_mps();
  auto pair = recovery::deploy_pair(w, spec);
  pair->start();
  w.run_until_quiescent();
  return pair->frontend().outputs();
}

struct Crashed {
  std::unique_ptr<World> w;
  std::unique_ptr<recovery::RecoveryPair> pair;
};

Crashed crash_at(const sim::SimParams& p, const workload::ServeSpec& spec, std::uint64_t k) {
  Crashed c;
  c.w = std::make_unique<World>(p);
  c.w->start_mps();
  c.pair = recovery::deploy_pair(*c.w, spec);
  const Pid injector = c.w->create_client(exec::ClientMode::mps);
  World* w = c.w.get();
  c.pair->frontend().at_tokens(k, [w, injector] { w->inject(injector, ScenarioId::sm_exc4); });
  c.pair->start();
  c.w->run_until_quiescent();
  return c;
}

Outcome replay_bound() {
  Outcome o;
  for (std::int64_t n : {1, 16}) {
    sim::SimParams p;
    p.sync_interval_N = n;
    for (std::uint64_t k = 1; k <= 128; ++k) {
      const auto c = crash_at(p, one_request(static_cast<std::uint32_t>(k + 8)), k);
      const auto& r = c.pair->report();
      const std::string at = "N=" + std::to_string(n) + " K=" + std::to_string(k);
      if (!r || !r->caught_up) {
        o.require(false, at + " no takeover");
        continue;
      }
      o.require(r->replayed_steps <= static_cast<std::uint64_t>(n), at + " replayed more than N");
      if (n == 1) {
        const Duration base = p.liveness_detect_us + p.wake_warmup_us;
        o.require(r->outage >= base && r->outage <= base + p.decode_step_us, at + " outage outside bound");
      }
    }
  }
  o.detail = o.pass ? "256 cells within bound" : o.detail;
  return o;
}

Outcome output_correctness() {
  const sim::SimParams p;
  Outcome o;
  for (std::uint64_t k = 1; k <= 1024; k *= 2) {
    const auto spec = one_request(static_cast<std::uint32_t>(k + 32));
    const auto c = crash_at(p, spec, k);
    const auto v = recovery::verify_output_equality(c.pair->frontend().outputs(), fault_free(p, spec));
    o.require(v.equal, "K=" + std::to_string(k) + ": " + v.detail);
  }
  o.detail = o.pass ? "11 crash points identical" : o.detail;
  return o;
}

Outcome transparency() {
  const auto r = run_bundled("fig3-isolation-throughput.scenario").report;
  Outcome o;
  for (ScenarioId s : {ScenarioId::mmu1_oob_sm, ScenarioId::mmu2_am_cpu_sm, ScenarioId::mmu4_am_vmm_sm}) {
    const std::string f = name(s);
    const sim::SimParams p;
    const Duration latency = faults::info(s).mechanism == faults::Mechanism::m1   ? p.m1_us
                             : faults::info(s).mechanism == faults::Mechanism::m2 ? p.m2_us
                                                                                  : p.m3_us;
    o.require(get(r, f + ".transparent") == "yes", f + " not transparent");
    o.require(get(r, f + ".stall_windows") == "0" || get(r, f + ".stall_windows") == "1", f + " stall windows");
    o.require(get(r, f + ".stall_us") == std::to_string(latency), f + " stall length");
    o.require(get(r, f + ".off_terminated_at_injection") == "yes", f + " isolation off");
  }
  o.detail = o.pass ? "3 faults, one stall of the mechanism latency each" : o.detail;
  return o;
}

Outcome memory_accounting() {
  const sim::SimParams p;
  workload::ServeSpec spec = one_request(8);
  spec.weight_pages = 1024;
  spec.kv_blocks = 64;
  World w(p);
  w.start_mps();
  const auto before = w.memory().footprint_pages();
  auto pair = recovery::deploy_pair(w, spec);
  const auto weights = static_cast<std::uint64_t>(spec.weight_pages);
  const auto kv = static_cast<std::uint64_t>(spec.kv_blocks) * static_cast<std::uint64_t>(p.kv_block_pages);
  const auto overhead = static_cast<std::uint64_t>(p.process_overhead_pages);
  Outcome o;
  o.require(w.memory().footprint_pages() - before == weights + kv + 2 * overhead, "pair footprint");
  w.terminate_client(pair->active(), "acceptance");
  for (auto h : {pair->active_memory().weights, pair->active_memory().kv}) {
    const auto* a = w.memory().allocation(h);
    o.require(a != nullptr && a->refcount() >= 1, "allocation lost with the active");
  }
  o.require(w.memory().footprint_pages() - before == weights + kv + overhead, "footprint after termination");
  o.detail = o.pass ? std::to_string(weights + kv + 2 * overhead) + " pages exact" : o.detail;
  return o;
}

std::string busy_trace(bool isolation) {
  World w(sim::SimParams{}, isolation);
  w.start_mps();
  const Pid victim = w.create_client(exec::ClientMode::mps);
  const Pid server = w.create_client(exec::ClientMode::mps);
  const Pid pager = w.create_client(exec::ClientMode::mps);
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
  w.inject(pager, ScenarioId::benign_demand_paging_sm, 1500);
  w.run_until_quiescent();
  return w.kernel().trace().serialize();
}

Outcome zero_overhead() {
  const std::string on = busy_trace(true);
  const std::string off = busy_trace(false);
  Outcome o;
  o.require(on == off, "traces differ");
  for (const char* kind : {"uvm.isolate", "mem.redirect", "uvm.fatal_report"}) {
    o.require(on.find(kind) == std::string::npos, std::string(kind) + " emitted");
  }
  o.detail = o.pass ? std::to_string(on.size()) + " trace bytes identical" : o.detail;
  return o;
}

Outcome snapshot_oracle() {
  std::mt19937_64 rng(20261015);
  Outcome o;
  std::uint64_t publishes = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto r = testing::random_history(rng);
    publishes += r.publishes;
    o.require(r.ok, "history " + std::to_string(i));
  }
  o.detail = o.pass ? "1000 histories, " + std::to_string(publishes) + " publish points" : o.detail;
  return o;
}

Outcome determinism() {
  Outcome o;
  int n = 0;
  for (const char* f : {"table3.scenario", "table4.scenario", "fig3-isolation-throughput.scenario",
                        "fig6-recovery-sweeps.scenario", "fig8-sync-overhead.scenario",
                        "reachability-audit.scenario"}) {
    const auto a = run_bundled(f);
    const auto b = run_bundled(f);
    o.require(a.trace.serialize() == b.trace.serialize(), std::string(f) + " trace");
    o.require(a.report.to_json().dump() == b.report.to_json().dump(), std::string(f) + " report");
    ++n;
  }
  o.detail = o.pass ? std::to_string(n) + " scenarios byte-identical" : o.detail;
  return o;
}

struct Criterion {
  int number;
  const char* title;
  const char* tolerance;
  double limit_s;  // 0 for no runtime limit
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "containment matrix", "exact verdicts", 5, containment},
      {2, "recovery coverage", "exact verdicts", 5, recovery_coverage},
      {3, "reachability audit", "0 gray hits", 60, reachability},
      {4, "replay bound", "replayed <= N; N=1 outage <= wake + 1 step", 0, replay_bound},
      {5, "output correctness", "token-exact", 0, output_correctness},
      {6, "isolation transparency", "<= 1 stall of exact latency", 0, transparency},
      {7, "memory accounting", "exact pages", 0, memory_accounting},
      {8, "no-fault zero overhead", "byte-exact trace", 0, zero_overhead},
      {9, "snapshot composition oracle", "exact at every publish", 0, snapshot_oracle},
      {10, "determinism", "byte-exact", 0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0 && secs >= c.limit_s) {
      o.pass = false;
      o.detail += " (over the runtime limit)";
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %2d %-28s [%s] %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", c.number, c.title, c.tolerance,
                o.detail.c_str(), secs);
  }
  std::printf("%d/10 criteria pass\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
