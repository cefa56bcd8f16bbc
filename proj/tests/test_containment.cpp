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

#include "mpssim/workload/victim.hpp"
#include "mpssim/world.hpp"

using namespace mpssim;

namespace {

std::string victim_verdict(faults::ScenarioId s, bool isolation) {
  World w(sim::SimParams{}, isolation);
  w.start_mps();
  const Pid victim = w.create_client(exec::ClientMode::mps);
  const Pid injector = w.create_client(exec::ClientMode::mps);
  workload::VictimLoop loop(w, victim, 20, 1000);
  loop.start();
  w.inject(injector, s, 5000);
  w.run_until_quiescent();
  return loop.verdict();
}

}  // namespace

TEST_CASE("shared-TSG faults kill the victim only without isolation") {
  using S = faults::ScenarioId;
  for (S s : {S::mmu1_oob_sm, S::mmu2_am_cpu_sm, S::mmu3_am_gpu_sm, S::mmu4_am_vmm_sm, S::mmu5_zombie_sm,
              S::mmu6_nonmigratable_sm, S::mmu11_oob_pbdma}) {
    CAPTURE(faults::info(s).name);
    CHECK(victim_verdict(s, false).rfind("DIED", 0) == 0);
    CHECK(victim_verdict(s, true) == "ALIVE");
  }
}

TEST_CASE("copy engine faults stay in the faulting client's TSG") {
  using S = faults::ScenarioId;
  for (S s : {S::mmu7_oob_ce, S::mmu8_am_ce}) {
    CAPTURE(faults::info(s).name);
    CHECK(victim_verdict(s, false) == "ALIVE");
    CHECK(victim_verdict(s, true) == "ALIVE");
  }
}
