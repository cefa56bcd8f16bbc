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
#include <filesystem>

#include "mpssim/harness/runner.hpp"

using namespace mpssim;
using namespace mpssim::harness;

namespace {

std::string parse_error(const std::string& text) {
  try {
    parse_scenario(text, "t.scenario");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse_error);
    return e.what();
  }
  return "";
}

bool mentions(const std::string& msg, const std::string& needle) { return msg.find(needle) != std::string::npos; }

std::vector<std::string> bundled() {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(MPSSIM_SCENARIO_DIR)) {
    if (e.path().extension() == ".scenario") out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

const char* kRun = R"(schema: 1
name: two-clients
kind: run
seed: 4
clients:
  - {name: victim, workload: victim, iterations: 10, kernel_us: 500}
  - {name: bad}
injections:
  - {client: bad, trigger: mmu.oob.sm, time: 2000}
expect:
  victim.verdict: ALIVE
  bad.verdict: DIED
)";

}  // namespace

TEST_CASE("scenario files need a supported schema version") {
  CHECK(mentions(parse_error("name: x\nkind: run\n"), "schema"));
  CHECK(mentions(parse_error("schema: 2\nname: x\nkind: run\n"), "t.scenario:1:"));
}

TEST_CASE("unknown keys are errors that name the line") {
  const std::string msg = parse_error("schema: 1\nname: x\nkind: run\nisolaton: true\n");
  CHECK(mentions(msg, "t.scenario:"));
  CHECK(mentions(msg, "isolaton"));
  const std::string nested =
      parse_error("schema: 1\nname: x\nkind: run\nclients:\n  - {name: a, wrokload: victim}\n");
  CHECK(mentions(nested, "t.scenario:5:"));
  CHECK(mentions(nested, "wrokload"));
}

TEST_CASE("dangling references and unreachable triggers are rejected") {
  const std::string base = "schema: 1\nname: x\nkind: run\nclients: [{name: a}]\ninjections:\n";
  CHECK(mentions(parse_error(base + "  - {client: b, trigger: mmu.oob.sm, time: 1}\n"), "undeclared client 'b'"));
  CHECK(mentions(parse_error(base + "  - {client: a, trigger: mmu.bogus, time: 1}\n"), "unknown fault trigger"));
  CHECK(mentions(parse_error(base + "  - {client: a, trigger: mmu.am.pbdma, time: 1}\n"), "t.scenario:6:"));
  CHECK(mentions(parse_error(base + "  - {client: a, trigger: parse.privilege, time: 1}\n"), "privileged"));
  CHECK(parse_error(base + "  - {client: a, trigger: parse.privilege, time: 1, privileged: true}\n").empty());
  CHECK(mentions(parse_error(base + "  - {client: a, trigger: mmu.oob.sm}\n"), "exactly one of"));
  CHECK(mentions(parse_error(base + "  - {client: a, trigger: mmu.oob.sm, at_tokens: 3, service: a}\n"),
                 "does not serve"));
}

TEST_CASE("kind requirements are checked") {
  CHECK(mentions(parse_error("schema: 1\nname: x\nkind: containment\n"), "faults"));
  CHECK(mentions(parse_error("schema: 1\nname: x\nkind: recovery\nfaults: [sm.exc4.illegal_instruction]\n"),
                 "serve"));
  CHECK(mentions(parse_error("schema: 1\nname: x\nkind: warp\n"), "unknown kind"));
  CHECK(mentions(parse_error("schema: 1\nname: x\nkind: sync_overhead\nns: [0]\nserve:\n  requests:\n"
                             "    - {prompt: 4, max_new_tokens: 2}\n"),
                 "N must be >= 1"));
}

TEST_CASE("integer lists accept ranges") {
  const Scenario sc = parse_scenario(
      "schema: 1\nname: x\nkind: recovery_sweep\nks: [1..4, 8..64*2, 100]\nns: [3]\n"
      "serve:\n  requests:\n    - {prompt: 4, max_new_tokens: 2}\n");
  CHECK(sc.ks == std::vector<std::uint64_t>{1, 2, 3, 4, 8, 16, 32, 64, 100});
  CHECK(mentions(parse_error("schema: 1\nname: x\nkind: recovery_sweep\nks: [5..2]\nns: [1]\n"), "bad range"));
}

TEST_CASE("nested expectations flatten to dotted keys") {
  const Scenario sc = parse_scenario(
      "schema: 1\nname: x\nkind: containment\nfaults: [mmu.oob.sm]\n"
      "expect:\n  mmu.oob.sm:\n    with: ALIVE\n  mmu.oob.sm.without: DIED\n");
  CHECK(sc.expect.at("mmu.oob.sm.with") == "ALIVE");
  CHECK(sc.expect.at("mmu.oob.sm.without") == "DIED");
}

TEST_CASE("a free-form run reports client verdicts") {
  const auto r = run_scenario(parse_scenario(kRun));
  CHECK(r.report.pass());
  RunFlags off;
  off.no_isolation = true;
  const auto f = run_scenario(parse_scenario(kRun), off);
  CHECK_FALSE(f.report.pass());
  CHECK(f.report.actual.at("victim.verdict") == "DIED");
}

TEST_CASE("missing report keys fail their expectation") {
  std::string text = kRun;
  text += "  no.such.key: 1\n";
  const auto r = run_scenario(parse_scenario(text));
  CHECK_FALSE(r.report.pass());
  const auto it = std::find_if(r.report.checks.begin(), r.report.checks.end(),
                               [](const Check& c) { return c.key == "no.such.key"; });
  REQUIRE(it != r.report.checks.end());
  CHECK(it->actual == "<missing>");
}

TEST_CASE("bad parameter overrides are configuration errors") {
  RunFlags flags;
  flags.params.emplace_back("sync_interval_N", "0");
  CHECK_THROWS_AS(run_scenario(parse_scenario(kRun), flags), Error);
  flags.params = {{"nonsense", "1"}};
  CHECK_THROWS_AS(run_scenario(parse_scenario(kRun), flags), Error);
}

TEST_CASE("every bundled scenario meets its expectations") {
  const auto files = bundled();
  CHECK(files.size() == 6);
  for (const auto& f : files) {
    CAPTURE(f);
    const auto r = run_scenario(load_scenario(f));
    for (const auto& c : r.report.checks) {
      CHECK_MESSAGE(c.pass, c.key << ": expected " << c.expected << ", got " << c.actual);
    }
    CHECK_FALSE(r.report.checks.empty());
  }
}

TEST_CASE("bundled scenarios are deterministic and render from their trace alone") {
  for (const auto& f : bundled()) {
    CAPTURE(f);
    const Scenario sc = load_scenario(f);
    const auto a = run_scenario(sc);
    const auto b = run_scenario(sc);
    const std::string text = a.trace.serialize();
    CHECK(text == b.trace.serialize());
    CHECK(a.report.to_json().dump() == b.report.to_json().dump());
    const Report again = render(sim::Trace::parse(text));
    CHECK(again.to_json().dump() == a.report.to_json().dump());
    CHECK(again.to_text() == a.report.to_text());
  }
}

TEST_CASE("parallel and serial cell execution give the same trace") {
  const Scenario sc = load_scenario(std::string(MPSSIM_SCENARIO_DIR) + "/table4.scenario");
  RunFlags serial;
  serial.parallel = false;
  CHECK(execute(sc).serialize() == execute(sc, serial).serialize());
}

TEST_CASE("matrix runs cover the sweep cross product") {
  const std::string file = std::string(MPSSIM_SCENARIO_DIR) + "/table3.scenario";
  const auto m = run_matrix(file, {{"m1_us", {"131", "500"}}, {"seed", {"1", "2", "3"}}});
  CHECK(m.rows.size() == 6);
  // Stall expectations pin the default latency, so only m1_us=131 passes.
  std::size_t passing = 0;
  for (const auto& r : m.rows) passing += r.pass ? 1 : 0;
  CHECK(passing == 3);
  CHECK(run_matrix(file, {{"seed", {}}}).rows.empty());
  CHECK_THROWS_AS(run_matrix("/no/such/suite", {}), Error);
}

TEST_CASE("JSON lines carry one object per cell plus a summary") {
  const auto r = run_scenario(load_scenario(std::string(MPSSIM_SCENARIO_DIR) + "/table3.scenario"));
  const std::string jl = r.report.to_json_lines();
  std::size_t lines = 0;
  for (char c : jl) lines += c == '\n' ? 1 : 0;
  CHECK(lines == r.report.cells.size() + 1);
  const auto last = nlohmann::json::parse(jl.substr(jl.rfind('\n', jl.size() - 2) + 1));
  CHECK(last.at("type") == "summary");
  CHECK(last.at("pass") == true);
}
