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

#include "mpssim/harness/runner.hpp"

#include <algorithm>
#include <exception>
#include <filesystem>
#include <memory>

#include "mpssim/faults/audit.hpp"
#include "mpssim/recovery/pair.hpp"
#include "mpssim/workload/serve.hpp"
#include "mpssim/workload/victim.hpp"
#include "mpssim/world.hpp"

namespace mpssim::harness {

namespace {

using Fields = std::vector<std::pair<std::string, std::string>>;

sim::Record make_record(Time t, std::string entity, std::string kind, Fields fields) {
  sim::Record r;
  r.time = t;
  r.entity = std::move(entity);
  r.kind = std::move(kind);
  r.fields = std::move(fields);
  return r;
}

struct Cell {
  std::string role;  // what the cell measures; see plan()
  std::string fault;
  bool isolation = true;
  std::int64_t n = 0;
  std::uint64_t k = 0;

  Fields labels(std::size_t index) const {
    Fields f{{"cell", std::to_string(index)}, {"role", role}};
    if (!fault.empty()) f.emplace_back("fault", fault);
    f.emplace_back("isolation", isolation ? "yes" : "no");
    if (n > 0) f.emplace_back("N", std::to_string(n));
    if (k > 0) f.emplace_back("K", std::to_string(k));
    return f;
  }
};

faults::ScenarioId fault_id(const std::string& name) {
  auto id = faults::scenario_by_name(name);
  if (!id) fail(ErrorCode::parse_error, "unknown fault trigger '" + name + "'");
  return *id;
}

std::vector<Cell> plan(const Scenario& sc, const RunFlags& flags) {
  const bool iso = sc.isolation && !flags.no_isolation;
  std::vector<Cell> cells;
  switch (sc.kind) {
    case Kind::run: cells.push_back({"run", "", iso, 0, 0}); break;
    case Kind::audit: cells.push_back({"audit", "", iso, 0, 0}); break;
    case Kind::containment:
      for (const auto& f : sc.faults) {
        cells.push_back({"victim", f, false, 0, 0});
        cells.push_back({"victim", f, true, 0, 0});
      }
      break;
    case Kind::recovery:
      cells.push_back({"baseline", "", iso, 0, 0});
      for (const auto& f : sc.faults) cells.push_back({"failover", f, iso, 0, sc.crash_at_tokens});
      break;
    case Kind::isolation_throughput:
      cells.push_back({"baseline", "", true, 0, 0});
      for (const auto& f : sc.faults) {
        cells.push_back({"faulted", f, true, 0, 0});
        cells.push_back({"faulted", f, false, 0, 0});
      }
      break;
    case Kind::recovery_sweep: {
      const std::string f = sc.faults.empty() ? "sm.exc4.illegal_instruction" : sc.faults.front();
      for (std::uint64_t k : sc.ks) cells.push_back({"baseline", "", iso, sc.ns.front(), k});
      for (std::int64_t n : sc.ns) {
        for (std::uint64_t k : sc.ks) cells.push_back({"failover", f, iso, n, k});
      }
      break;
    }
    case Kind::sync_overhead:
      cells.push_back({"plain", "", iso, 0, 0});
      for (std::int64_t n : sc.ns) cells.push_back({"pair", "", iso, n, 0});
      break;
  }
  return cells;
}

void append_roles(World& w, Fields roles) {
  w.kernel().trace().append(make_record(w.now(), "world", "harness.roles", std::move(roles)));
}

std::string pid_str(Pid p) { return std::to_string(p.value); }

workload::ServeSpec sweep_spec(const Scenario& sc, std::uint64_t k) {
  workload::ServeSpec s = sc.serve;
  s.requests.front().max_new_tokens = static_cast<std::uint32_t>(k + sc.tail_tokens);
  return s;
}

/// A single serving instance without a standby.
struct PlainService {
  workload::ServeMemory mem;
  std::unique_ptr<workload::Frontend> frontend;
  std::unique_ptr<workload::ServeEngine> engine;

  PlainService(World& w, Pid pid, const workload::ServeSpec& spec) {
    mem = workload::create_serve_memory(w, pid, spec);
    frontend = std::make_unique<workload::Frontend>(w, spec);
    engine = std::make_unique<workload::ServeEngine>(w, pid, mem, frontend->spec(), *frontend);
    frontend->attach(engine.get());
  }
};

void run_generic(World& w, const Scenario& sc) {
  bool mps = false;
  for (const auto& c : sc.clients) mps = mps || c.mode == exec::ClientMode::mps;
  if (mps) w.start_mps();
  std::map<std::string, Pid> pids;
  std::map<std::string, workload::Frontend*> services;
  std::vector<std::unique_ptr<workload::VictimLoop>> victims;
  std::vector<std::unique_ptr<PlainService>> plain;
  std::vector<std::unique_ptr<recovery::RecoveryPair>> pairs;
  Fields roles;
  for (const auto& c : sc.clients) {
    switch (c.workload) {
      case WorkloadKind::none:
      case WorkloadKind::victim:
      case WorkloadKind::serve: {
        const Pid pid = w.create_client(c.mode);
        pids[c.name] = pid;
        roles.emplace_back(c.name, pid_str(pid));
        if (c.workload == WorkloadKind::victim) {
          victims.push_back(std::make_unique<workload::VictimLoop>(w, pid, c.iterations, c.kernel_us));
        } else if (c.workload == WorkloadKind::serve) {
          plain.push_back(std::make_unique<PlainService>(w, pid, sc.serve));
          services[c.name] = plain.back()->frontend.get();
        }
        break;
      }
      case WorkloadKind::pair: {
        pairs.push_back(recovery::deploy_pair(w, sc.serve, recovery::PairOptions{c.kv_sharing}));
        pids[c.name] = pairs.back()->active();
        services[c.name] = &pairs.back()->frontend();
        roles.emplace_back(c.name, pid_str(pairs.back()->active()));
        roles.emplace_back(c.name + ".standby", pid_str(pairs.back()->standby()));
        break;
      }
    }
  }
  append_roles(w, roles);
  for (const auto& i : sc.injections) {
    const Pid pid = pids.at(i.client);
    const faults::ScenarioId id = fault_id(i.trigger);
    if (i.time) {
      w.inject(pid, id, *i.time, i.privileged);
    } else {
      const bool privileged = i.privileged;
      services.at(i.service)->at_tokens(*i.at_tokens, [&w, pid, id, privileged] { w.inject(pid, id, 0, privileged); });
    }
  }
  for (auto& v : victims) v->start();
  for (auto& p : plain) p->frontend->start();
  for (auto& p : pairs) p->start();
  w.run_until_quiescent();
}

void run_audit_cell(sim::Trace& out, const Scenario& sc, const sim::SimParams& params, bool parallel) {
  faults::AuditConfig cfg;
  cfg.depth = sc.depth;
  cfg.params = params;
  if (sc.broken_gates) {
    cfg.params.ce_rejects_managed_lifecycle = false;
    cfg.params.pbdma_rejects_managed = false;
  }
  const faults::AuditReport r = parallel ? faults::audit(cfg) : faults::audit_serial(cfg);
  out.append(make_record(0, "audit", "audit.summary",
                         {{"sequences", std::to_string(r.sequences)},
                          {"depth", std::to_string(sc.depth)},
                          {"broken_gates", sc.broken_gates ? "yes" : "no"}}));
  for (const auto& row : faults::scenario_table()) {
    const faults::AuditCell& c = r.cell(row.id);
    out.append(make_record(0, "audit", "audit.cell",
                           {{"scenario", std::string(row.name)},
                            {"hits", std::to_string(c.hits)},
                            {"user_hits", std::to_string(c.user_hits)},
                            {"witness", c.witness.value_or("-")}}));
  }
}

sim::Trace run_cell(const Scenario& sc, const sim::SimParams& base, const Cell& cell, std::size_t index,
                    const RunFlags& flags) {
  sim::Trace out;
  out.append(make_record(0, "world", "cell.begin", cell.labels(index)));
  sim::SimParams p = base;
  if (cell.n > 0) p.sync_interval_N = cell.n;
  if (sc.kind == Kind::audit) {
    run_audit_cell(out, sc, p, flags.parallel);
    out.append(make_record(0, "world", "cell.end", {{"cell", std::to_string(index)}}));
    return out;
  }

  World w(p, cell.isolation);
  const recovery::PairOptions pair_opts{sc.kv_sharing};
  switch (sc.kind) {
    case Kind::run: run_generic(w, sc); break;
    case Kind::containment: {
      w.start_mps();
      const Pid victim = w.create_client(exec::ClientMode::mps);
      const Pid injector = w.create_client(exec::ClientMode::mps);
      append_roles(w, {{"victim", pid_str(victim)}, {"injector", pid_str(injector)}});
      workload::VictimLoop loop(w, victim, sc.iterations, sc.kernel_us);
      loop.start();
      w.inject(injector, fault_id(cell.fault), sc.inject_at);
      w.run_until_quiescent();
      break;
    }
    case Kind::recovery:
    case Kind::recovery_sweep: {
      w.start_mps();
      const workload::ServeSpec spec = sc.kind == Kind::recovery ? sc.serve : sweep_spec(sc, cell.k);
      auto pair = recovery::deploy_pair(w, spec, pair_opts);
      const Pid injector = w.create_client(exec::ClientMode::mps);
      append_roles(w, {{"active", pid_str(pair->active())},
                       {"standby", pid_str(pair->standby())},
                       {"injector", pid_str(injector)}});
      if (cell.role == "failover") {
        const faults::ScenarioId id = fault_id(cell.fault);
        pair->frontend().at_tokens(cell.k, [&w, injector, id] { w.inject(injector, id); });
      }
      pair->start();
      w.run_until_quiescent();
      break;
    }
    case Kind::isolation_throughput: {
      w.start_mps();
      const Pid victim = w.create_client(exec::ClientMode::mps);
      PlainService svc(w, victim, sc.serve);
      const Pid injector = w.create_client(exec::ClientMode::mps);
      append_roles(w, {{"victim", pid_str(victim)}, {"injector", pid_str(injector)}});
      if (cell.role == "faulted") w.inject(injector, fault_id(cell.fault), sc.inject_at);
      svc.frontend->start();
      w.run_until_quiescent();
      break;
    }
    case Kind::sync_overhead: {
      w.start_mps();
      if (cell.role == "plain") {
        const Pid pid = w.create_client(exec::ClientMode::mps);
        append_roles(w, {{"active", pid_str(pid)}});
        PlainService svc(w, pid, sc.serve);
        svc.frontend->start();
        w.run_until_quiescent();
      } else {
        auto pair = recovery::deploy_pair(w, sc.serve, pair_opts);
        append_roles(w, {{"active", pid_str(pair->active())}, {"standby", pid_str(pair->standby())}});
        pair->start();
        w.run_until_quiescent();
      }
      break;
    }
    case Kind::audit: break;
  }
  for (const auto& r : w.kernel().trace().records()) out.append(r);
  const RunReport rep = w.report();
  out.append(make_record(rep.end_time, "world", "cell.end",
                         {{"cell", std::to_string(index)}, {"quiescent", rep.quiescent ? "yes" : "no"}}));
  return out;
}

}  // namespace

sim::SimParams effective_params(const Scenario& sc, const RunFlags& flags) {
  sim::SimParams p;
  if (sc.seed) p.seed = *sc.seed;
  for (const auto& [k, v] : sc.params) p.set(k, v);
  for (const auto& [k, v] : flags.params) p.set(k, v);
  if (flags.seed) p.seed = *flags.seed;
  p.validate();
  return p;
}

sim::Trace execute(const Scenario& sc, const RunFlags& flags) {
  const sim::SimParams params = effective_params(sc, flags);
  sim::Trace trace;
  trace.append(make_record(0, "world", "run.begin",
                           {{"name", sc.name}, {"kind", std::string(to_string(sc.kind))}}));
  Fields pf;
  for (const auto& name : sim::SimParams::names()) pf.emplace_back(name, params.get(name));
  trace.append(make_record(0, "world", "run.params", std::move(pf)));
  for (const auto& [k, v] : sc.expect) trace.append(make_record(0, "world", "run.expect", {{"key", k}, {"value", v}}));

  const std::vector<Cell> cells = plan(sc, flags);
  std::vector<sim::Trace> results(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  const auto n = static_cast<std::int64_t>(cells.size());
  const bool nested_parallel = sc.kind == Kind::audit;
#pragma omp parallel for schedule(dynamic) if (flags.parallel && !nested_parallel)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      results[idx] = run_cell(sc, params, cells[idx], idx, flags);
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (const auto& r : results) {
    for (const auto& rec : r.records()) trace.append(rec);
  }
  return trace;
}

RunResult run_scenario(const Scenario& sc, const RunFlags& flags) {
  RunResult r;
  r.trace = execute(sc, flags);
  r.report = render(r.trace);
  return r;
}

bool MatrixReport::pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const MatrixRow& r) { return r.pass; });
}

nlohmann::ordered_json MatrixReport::to_json() const {
  nlohmann::ordered_json j;
  j["pass"] = pass();
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"scenario", r.scenario},
                         {"sweep", r.sweep},
                         {"pass", r.pass},
                         {"checks", r.checks},
                         {"failed", r.failed}});
  }
  return j;
}

std::string MatrixReport::to_text() const {
  std::string out = "scenario                        sweep                 checks  failed  result\n";
  for (const auto& r : rows) {
    std::string line = r.scenario;
    line.resize(std::max<std::size_t>(line.size() + 1, 32), ' ');
    std::string sweep = r.sweep.empty() ? "-" : r.sweep;
    sweep.resize(std::max<std::size_t>(sweep.size() + 1, 22), ' ');
    std::string checks = std::to_string(r.checks);
    checks.resize(8, ' ');
    std::string failed = std::to_string(r.failed);
    failed.resize(8, ' ');
    out += line + sweep + checks + failed + (r.pass ? "PASS" : "FAIL") + "\n";
  }
  out += "overall: " + std::string(pass() ? "PASS" : "FAIL") + " (" + std::to_string(rows.size()) + " runs)\n";
  return out;
}

MatrixReport run_matrix(const std::string& suite,
                        const std::vector<std::pair<std::string, std::vector<std::string>>>& sweep,
                        const RunFlags& flags) {
  namespace fs = std::filesystem;
  std::vector<std::string> files;
  if (fs::is_directory(suite)) {
    for (const auto& e : fs::directory_iterator(suite)) {
      if (e.is_regular_file() && e.path().extension() == ".scenario") files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(suite)) {
    files.push_back(suite);
  } else {
    fail(ErrorCode::parse_error, suite + ": no such suite");
  }

  // Cross product of the sweep axes; one empty point when there is no sweep.
  std::vector<std::vector<std::pair<std::string, std::string>>> points{{}};
  for (const auto& [key, values] : sweep) {
    if (values.empty()) return MatrixReport{};
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& p : points) {
      for (const auto& v : values) {
        auto q = p;
        q.emplace_back(key, v);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }

  MatrixReport m;
  for (const auto& file : files) {
    const Scenario sc = load_scenario(file);
    for (const auto& point : points) {
      RunFlags f = flags;
      std::string label;
      for (const auto& [k, v] : point) {
        f.params.emplace_back(k, v);
        label += (label.empty() ? "" : ",") + k + "=" + v;
      }
      const Report rep = run_scenario(sc, f).report;
      MatrixRow row{sc.name, label, rep.pass(), rep.checks.size(), 0};
      for (const auto& c : rep.checks) row.failed += c.pass ? 0 : 1;
      m.rows.push_back(row);
    }
  }
  return m;
}

}  // namespace mpssim::harness
