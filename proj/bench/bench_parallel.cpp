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

// Parallel vs serial: the reachability audit and the per-cell scenario runner.

#include <benchmark/benchmark.h>

#include "mpssim/faults/audit.hpp"
#include "mpssim/harness/runner.hpp"

using namespace mpssim;

namespace {

void BM_AuditSerial(benchmark::State& state) {
  faults::AuditConfig cfg;
  cfg.depth = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(faults::audit_serial(cfg).sequences);
}

void BM_AuditParallel(benchmark::State& state) {
  faults::AuditConfig cfg;
  cfg.depth = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(faults::audit(cfg).sequences);
}

void run_cells(benchmark::State& state, const char* file, bool parallel) {
  const auto sc = harness::load_scenario(std::string(MPSSIM_SCENARIO_DIR) + "/" + file);
  harness::RunFlags flags;
  flags.parallel = parallel;
  for (auto _ : state) benchmark::DoNotOptimize(harness::execute(sc, flags).records().size());
}

void BM_SweepSerial(benchmark::State& state) { run_cells(state, "fig6-recovery-sweeps.scenario", false); }
void BM_SweepParallel(benchmark::State& state) { run_cells(state, "fig6-recovery-sweeps.scenario", true); }
void BM_ContainmentSerial(benchmark::State& state) { run_cells(state, "table3.scenario", false); }
void BM_ContainmentParallel(benchmark::State& state) { run_cells(state, "table3.scenario", true); }

}  // namespace

BENCHMARK(BM_AuditSerial)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AuditParallel)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ContainmentSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ContainmentParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
