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

#include "mpssim/faults/audit.hpp"

#include <algorithm>
#include <set>

#include "mpssim/world.hpp"

namespace mpssim::faults {

namespace {

bool uses_ioctl(const std::vector<Step>& seq) {
  return std::any_of(seq.begin(), seq.end(), [](const Step& s) { return is_ioctl(s.op); });
}

void tally(AuditReport& r, const std::vector<Step>& seq, const std::vector<ScenarioId>& seen) {
  const bool user = !uses_ioctl(seq);
  for (ScenarioId s : std::set<ScenarioId>(seen.begin(), seen.end())) {
    AuditCell& c = r.cells[static_cast<std::size_t>(s)];
    ++c.hits;
    if (user) ++c.user_hits;
    if (!c.witness) c.witness = describe(seq);
  }
}

void finish(AuditReport& r) {
  for (const ScenarioInfo& row : scenario_table()) {
    if (is_parse_time(row.id)) continue;
    const Reachability got = r.derived(row.id);
    if (row.reach == Reachability::unreachable) {
      if (got != Reachability::unreachable) r.violations.push_back(row.id);
    } else if (got != row.reach) {
      r.label_mismatches.push_back(row.id);
    }
  }
}

}  // namespace

Reachability AuditReport::derived(ScenarioId s) const {
  const AuditCell& c = cell(s);
  if (c.user_hits > 0) return Reachability::user;
  if (c.hits > 0) return Reachability::ioctl;
  return Reachability::unreachable;
}

const std::vector<Op>& audit_prep_ops() {
  static const std::vector<Op> ops = {Op::alloc_device, Op::alloc_managed, Op::vmm_create_map, Op::host_write,
                                      Op::advise_ro,    Op::set_access_ro, Op::make_zombie,    Op::pin,
                                      Op::kernel_read,  Op::kernel_write};
  return ops;
}

std::vector<std::vector<Step>> audit_sequences(int depth) {
  if (depth < 0) fail(ErrorCode::invalid_argument, "audit depth must be >= 0");
  std::vector<std::vector<Step>> prefixes{{}};
  std::vector<std::vector<Step>> frontier{{}};
  for (int d = 0; d < depth; ++d) {
    std::vector<std::vector<Step>> next;
    for (const auto& p : frontier) {
      for (Op op : audit_prep_ops()) {
        auto q = p;
        q.push_back(Step{op, Target::inside});
        next.push_back(std::move(q));
      }
    }
    prefixes.insert(prefixes.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  static const Op terminals[] = {Op::kernel_read,  Op::kernel_write,  Op::kernel_prefetch,
                                 Op::memcpy_read,  Op::memcpy_write,  Op::stream_wait};
  static const Target targets[] = {Target::inside, Target::past_end, Target::unmapped, Target::semaphore};
  std::vector<std::vector<Step>> out;
  for (const auto& p : prefixes) {
    for (Op op : terminals) {
      for (Target t : targets) {
        auto q = p;
        q.push_back(Step{op, t});
        out.push_back(std::move(q));
      }
    }
  }
  for (int code : {2, 4, 5, 6, 7}) {
    Step s{Op::raise_exception, Target::inside};
    s.code = code;
    out.push_back({s});
  }
  return out;
}

std::vector<ScenarioId> run_sequence(const sim::SimParams& params, const std::vector<Step>& seq) {
  World w(params, false);
  w.start_mps();
  const Pid pid = w.create_client(exec::ClientMode::mps);
  w.run_script(pid, seq);
  w.run_until_quiescent();
  std::vector<ScenarioId> seen;
  for (const FaultRecord& r : w.faults().records()) seen.push_back(r.scenario);
  return seen;
}

std::string describe(const std::vector<Step>& seq) {
  std::string out;
  for (const Step& s : seq) {
    if (!out.empty()) out += " ; ";
    out += s.describe();
  }
  return out;
}

AuditReport audit_serial(const AuditConfig& cfg) {
  const auto seqs = audit_sequences(cfg.depth);
  AuditReport r;
  r.sequences = seqs.size();
  for (const auto& seq : seqs) tally(r, seq, run_sequence(cfg.params, seq));
  finish(r);
  return r;
}

AuditReport audit(const AuditConfig& cfg) {
  const auto seqs = audit_sequences(cfg.depth);
  std::vector<std::vector<ScenarioId>> seen(seqs.size());
  const auto n = static_cast<std::int64_t>(seqs.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) {
    seen[static_cast<std::size_t>(i)] = run_sequence(cfg.params, seqs[static_cast<std::size_t>(i)]);
  }
  AuditReport r;
  r.sequences = seqs.size();
  for (std::size_t i = 0; i < seqs.size(); ++i) tally(r, seqs[i], seen[i]);
  finish(r);
  return r;
}

}  // namespace mpssim::faults
