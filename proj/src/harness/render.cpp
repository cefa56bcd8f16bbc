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

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

#include "mpssim/faults/taxonomy.hpp"
#include "mpssim/harness/runner.hpp"
#include "mpssim/recovery/pair.hpp"

namespace mpssim::harness {

namespace {

using Json = nlohmann::ordered_json;
using Outputs = std::map<workload::RequestId, std::vector<workload::Token>>;

std::string yn(bool b) { return b ? "yes" : "no"; }

std::int64_t to_int(const std::string& s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) fail(ErrorCode::parse_error, "not a number in trace: " + s);
  return v;
}

struct CellView {
  std::map<std::string, std::string> labels;
  std::vector<const sim::Record*> records;
  Time end = 0;

  std::string label(const std::string& k) const {
    auto it = labels.find(k);
    return it == labels.end() ? "" : it->second;
  }
  std::int64_t num_label(const std::string& k) const {
    const std::string v = label(k);
    return v.empty() ? 0 : to_int(v);
  }
  bool isolation() const { return label("isolation") == "yes"; }

  std::string role_pid(const std::string& role) const {
    for (const auto* r : records) {
      if (r->kind != "harness.roles") continue;
      if (auto v = r->get(role)) return std::string(*v);
    }
    return "";
  }
  std::string client(const std::string& role) const { return "client:" + role_pid(role); }

  const sim::Record* find(const std::string& kind, const std::string& entity = "") const {
    for (const auto* r : records) {
      if (r->kind == kind && (entity.empty() || r->entity == entity)) return r;
    }
    return nullptr;
  }
};

struct Tok {
  std::int64_t req = 0;
  std::int64_t pos = 0;
  std::int64_t tok = 0;
  Time t = 0;
};

std::vector<Tok> tokens(const CellView& c) {
  std::vector<Tok> out;
  for (const auto* r : c.records) {
    if (r->kind == "serve.token") out.push_back({r->num("req"), r->num("pos"), r->num("tok"), r->time});
  }
  return out;
}

Outputs outputs(const CellView& c) {
  Outputs out;
  for (const auto* r : c.records) {
    if (r->kind != "serve.complete") continue;
    std::vector<workload::Token> toks;
    const std::string s = r->at("out");
    std::size_t pos = 0;
    while (pos < s.size()) {
      std::size_t end = s.find(',', pos);
      if (end == std::string::npos) end = s.size();
      toks.push_back(static_cast<workload::Token>(to_int(s.substr(pos, end - pos))));
      pos = end + 1;
    }
    out[static_cast<workload::RequestId>(r->num("req"))] = std::move(toks);
  }
  return out;
}

std::string victim_verdict(const CellView& c, const std::string& role) {
  const std::string e = c.client(role);
  for (const auto* r : c.records) {
    if (r->entity != e) continue;
    if (r->kind == "victim.done") return "ALIVE";
    if (r->kind == "victim.died" || r->kind == "victim.error") return "DIED";
  }
  return "RUNNING";
}

std::string died_at(const CellView& c, const std::string& role) {
  const std::string e = c.client(role);
  for (const auto* r : c.records) {
    if (r->entity == e && (r->kind == "victim.died" || r->kind == "victim.error")) return r->at("iteration");
  }
  return "";
}

const sim::Record* terminated(const CellView& c, const std::string& role) {
  return c.find("client.terminated", c.client(role));
}

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.resize(w, ' ');
  return s;
}

std::string table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) w[i] = header[i].size();
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size() && i < w.size(); ++i) w[i] = std::max(w[i], r[i].size());
  }
  auto line = [&](const std::vector<std::string>& r) {
    std::string out;
    for (std::size_t i = 0; i < r.size(); ++i) {
      out += i + 1 == r.size() ? r[i] : pad(r[i], w[i] + 2);
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + "\n";
  };
  std::string out = line(header);
  std::string rule;
  for (std::size_t i = 0; i < w.size(); ++i) rule += std::string(w[i], '-') + (i + 1 == w.size() ? "" : "  ");
  out += rule + "\n";
  for (const auto& r : rows) out += line(r);
  return out;
}

struct Parsed {
  std::string name;
  Kind kind = Kind::run;
  std::map<std::string, std::string> params;
  std::map<std::string, std::string> expect;
  std::vector<CellView> cells;

  std::int64_t param(const std::string& k) const {
    auto it = params.find(k);
    if (it == params.end()) fail(ErrorCode::parse_error, "trace lacks parameter " + k);
    return to_int(it->second);
  }
};

Parsed parse(const sim::Trace& trace) {
  Parsed p;
  bool begun = false;
  CellView* cur = nullptr;
  for (const auto& r : trace.records()) {
    if (r.kind == "run.begin") {
      p.name = r.at("name");
      auto k = kind_by_name(r.at("kind"));
      if (!k) fail(ErrorCode::parse_error, "trace names unknown kind " + r.at("kind"));
      p.kind = *k;
      begun = true;
    } else if (r.kind == "run.params") {
      for (const auto& [k, v] : r.fields) p.params[k] = v;
    } else if (r.kind == "run.expect") {
      p.expect[r.at("key")] = r.at("value");
    } else if (r.kind == "cell.begin") {
      p.cells.emplace_back();
      cur = &p.cells.back();
      for (const auto& [k, v] : r.fields) cur->labels[k] = v;
    } else if (r.kind == "cell.end") {
      if (cur == nullptr) fail(ErrorCode::parse_error, "cell.end outside a cell");
      cur->end = r.time;
      cur = nullptr;
    } else if (cur != nullptr) {
      cur->records.push_back(&r);
    }
  }
  if (!begun) fail(ErrorCode::parse_error, "trace has no run.begin record");
  return p;
}

void render_containment(const Parsed& p, Report& rep) {
  struct Row {
    std::string without;
    std::string with;
    std::string without_at;
    std::string stall;
    std::string mech;
  };
  std::vector<std::string> order;
  std::map<std::string, Row> rows;
  for (const auto& c : p.cells) {
    const std::string f = c.label("fault");
    if (!rows.count(f)) order.push_back(f);
    Row& row = rows[f];
    const std::string v = victim_verdict(c, "victim");
    if (c.isolation()) {
      row.with = v;
      if (const auto* iso = c.find("uvm.isolate")) {
        row.stall = iso->at("latency");
        row.mech = iso->at("mech");
      }
    } else {
      row.without = v;
      row.without_at = died_at(c, "victim");
    }
    rep.cells.push_back({{"cell", c.label("cell")},
                         {"fault", f},
                         {"isolation", c.isolation()},
                         {"victim", v},
                         {"died_at_iteration", died_at(c, "victim")}});
  }
  std::vector<std::vector<std::string>> lines;
  for (const auto& f : order) {
    const Row& r = rows[f];
    const auto& info = faults::info(*faults::scenario_by_name(f));
    const bool shared = info.engine != EngineClass::ce;
    rep.actual[f + ".without"] = r.without;
    rep.actual[f + ".with"] = r.with;
    rep.actual[f + ".shared_tsg"] = yn(shared);
    if (!r.stall.empty()) rep.actual[f + ".stall_us"] = r.stall;
    lines.push_back({info.number > 0 ? "#" + std::to_string(info.number) : "-", f, yn(shared),
                     r.without + (r.without_at.empty() ? "" : "(" + r.without_at + ")"), r.with,
                     r.mech.empty() ? "-" : r.mech, r.stall.empty() ? "-" : r.stall});
  }
  rep.table = table({"#", "fault", "shared TSG", "w/o isolation", "with isolation", "mech", "stall us"}, lines);
}

struct Takeover {
  std::string active;
  std::string standby;
  bool caught_up = false;
  bool complete = false;
  bool outputs_equal = false;
  bool standby_idle = true;
  std::int64_t outage = -1;
  std::int64_t replayed = -1;
  bool degraded = false;
  std::string first_diff;
};

Takeover takeover(const CellView& c, const Outputs& baseline, std::size_t nreq) {
  Takeover t;
  t.active = terminated(c, "active") ? "DIED" : "ALIVE";
  t.standby = terminated(c, "standby") ? "DIED" : "ALIVE";
  const std::string standby = c.client("standby");
  for (const auto* r : c.records) {
    if (r->kind == "pair.wake") break;
    if (r->entity == standby && r->kind.rfind("serve.", 0) == 0) t.standby_idle = false;
  }
  if (const auto* cu = c.find("pair.caught_up")) {
    t.caught_up = true;
    t.outage = cu->num("outage");
    t.replayed = cu->num("replayed_steps");
    t.degraded = cu->at("degraded") == "yes";
  }
  const Outputs out = outputs(c);
  t.complete = out.size() == nreq;
  const auto v = recovery::verify_output_equality(out, baseline);
  t.outputs_equal = v.equal;
  if (!v.equal) t.first_diff = v.detail;
  return t;
}

void render_recovery(const Parsed& p, Report& rep) {
  const CellView* base = nullptr;
  for (const auto& c : p.cells) {
    if (c.label("role") == "baseline") base = &c;
  }
  if (base == nullptr) fail(ErrorCode::parse_error, "recovery trace lacks its baseline cell");
  const Outputs want = outputs(*base);
  std::vector<std::vector<std::string>> lines;
  for (const auto& c : p.cells) {
    if (c.label("role") != "failover") continue;
    const std::string f = c.label("fault");
    const Takeover t = takeover(c, want, want.size());
    const bool ok = t.caught_up && t.complete && t.outputs_equal && t.standby == "ALIVE";
    rep.actual[f + ".active"] = t.active;
    rep.actual[f + ".standby"] = t.standby;
    rep.actual[f + ".takeover"] = yn(ok);
    rep.actual[f + ".standby_idle_before_crash"] = yn(t.standby_idle);
    rep.cells.push_back({{"cell", c.label("cell")},
                         {"fault", f},
                         {"active", t.active},
                         {"standby", t.standby},
                         {"takeover", ok},
                         {"outage_us", t.outage},
                         {"replayed_steps", t.replayed},
                         {"outputs_equal", t.outputs_equal},
                         {"standby_idle_before_crash", t.standby_idle}});
    lines.push_back({f, "MPS", t.active, "standalone", t.standby, yn(ok), std::to_string(t.outage),
                     std::to_string(t.replayed)});
  }
  rep.table = table({"fault", "active", "active state", "standby", "standby state", "takeover", "outage us",
                     "replayed"},
                    lines);
}

void render_isolation_throughput(const Parsed& p, Report& rep) {
  const CellView* base = nullptr;
  for (const auto& c : p.cells) {
    if (c.label("role") == "baseline") base = &c;
  }
  if (base == nullptr) fail(ErrorCode::parse_error, "throughput trace lacks its baseline cell");
  const std::vector<Tok> want = tokens(*base);
  rep.cells.push_back({{"cell", base->label("cell")}, {"role", "baseline"}, {"tokens", want.size()}});
  std::vector<std::vector<std::string>> lines;
  for (const auto& c : p.cells) {
    if (c.label("role") != "faulted") continue;
    const std::string f = c.label("fault");
    const std::vector<Tok> got = tokens(c);
    const auto* inj = c.find("inject");
    const Time inject_at = inj ? inj->time : -1;
    Json cell = {{"cell", c.label("cell")}, {"fault", f}, {"isolation", c.isolation()}, {"tokens", got.size()}};
    if (c.isolation()) {
      // Same tokens, and every timestamp shifted by 0 before one stall window
      // and by the same amount after it.
      bool same = got.size() == want.size();
      std::set<Time> shifts;
      bool ordered = true;
      Time last = 0;
      for (std::size_t i = 0; same && i < got.size(); ++i) {
        same = got[i].req == want[i].req && got[i].pos == want[i].pos && got[i].tok == want[i].tok;
        const Time d = got[i].t - want[i].t;
        if (d < last) ordered = false;
        last = d;
        shifts.insert(d);
      }
      shifts.erase(0);
      const auto* iso = c.find("uvm.isolate");
      const std::int64_t latency = iso ? iso->num("latency") : 0;
      const std::int64_t stall = shifts.empty() ? 0 : *shifts.begin();
      const bool transparent = same && ordered && shifts.size() <= 1 && (shifts.empty() || stall == latency);
      const bool victim_alive = terminated(c, "victim") == nullptr;
      rep.actual[f + ".transparent"] = yn(transparent && victim_alive);
      rep.actual[f + ".stall_windows"] = std::to_string(shifts.size());
      rep.actual[f + ".stall_us"] = std::to_string(stall);
      rep.actual[f + ".mechanism_us"] = std::to_string(latency);
      cell["transparent"] = transparent && victim_alive;
      cell["stall_us"] = stall;
      cell["mechanism_us"] = latency;
      lines.push_back({f, "on", std::to_string(got.size()) + "/" + std::to_string(want.size()),
                       victim_alive ? "ALIVE" : "DIED", std::to_string(stall), yn(transparent && victim_alive)});
    } else {
      const auto* term = terminated(c, "victim");
      bool prefix = got.size() <= want.size();
      std::size_t after = 0;
      for (std::size_t i = 0; prefix && i < got.size(); ++i) {
        prefix = got[i].req == want[i].req && got[i].pos == want[i].pos && got[i].tok == want[i].tok &&
                 got[i].t == want[i].t;
        if (got[i].t > inject_at) ++after;
      }
      const bool cut = term != nullptr && term->time == inject_at && prefix && after == 0;
      rep.actual[f + ".off_terminated_at_injection"] = yn(cut);
      rep.actual[f + ".off_tokens_after_injection"] = std::to_string(after);
      cell["terminated_at"] = term ? term->time : -1;
      cell["inject_at"] = inject_at;
      lines.push_back({f, "off", std::to_string(got.size()) + "/" + std::to_string(want.size()),
                       term ? "DIED" : "ALIVE", "-", yn(cut)});
    }
    rep.cells.push_back(cell);
  }
  rep.table = table({"fault", "isolation", "tokens", "victim", "stall us", "as expected"}, lines);
}

void render_recovery_sweep(const Parsed& p, Report& rep) {
  const std::int64_t wake = p.param("wake_warmup_us") + p.param("liveness_detect_us");
  const std::int64_t decode = p.param("decode_step_us");
  std::map<std::int64_t, Outputs> baselines;
  for (const auto& c : p.cells) {
    if (c.label("role") == "baseline") baselines[c.num_label("K")] = outputs(c);
  }
  struct Agg {
    std::size_t cells = 0;
    std::int64_t max_replayed = 0;
    bool bounded = true;
    bool equal = true;
    bool exact = true;
    bool complete = true;
    std::int64_t min_outage = INT64_MAX;
    std::int64_t max_outage = 0;
  };
  std::map<std::int64_t, Agg> per_n;
  bool all_bounded = true;
  bool all_equal = true;
  bool all_exact = true;
  bool all_complete = true;
  for (const auto& c : p.cells) {
    if (c.label("role") != "failover") continue;
    const std::int64_t n = c.num_label("N");
    const std::int64_t k = c.num_label("K");
    const Outputs& want = baselines.at(k);
    const Takeover t = takeover(c, want, want.size());
    Agg& a = per_n[n];
    ++a.cells;
    const bool bounded = t.caught_up && t.replayed >= 0 && t.replayed <= n;
    const bool exact = t.caught_up && !t.degraded && t.outage == wake + t.replayed * decode;
    a.max_replayed = std::max(a.max_replayed, t.replayed);
    a.bounded = a.bounded && bounded;
    a.equal = a.equal && t.outputs_equal;
    a.exact = a.exact && exact;
    a.complete = a.complete && t.complete && t.standby == "ALIVE";
    a.min_outage = std::min(a.min_outage, t.outage);
    a.max_outage = std::max(a.max_outage, t.outage);
    rep.cells.push_back({{"cell", c.label("cell")},
                         {"N", n},
                         {"K", k},
                         {"replayed_steps", t.replayed},
                         {"outage_us", t.outage},
                         {"expected_outage_us", wake + t.replayed * decode},
                         {"degraded", t.degraded},
                         {"outputs_equal", t.outputs_equal},
                         {"first_difference", t.first_diff}});
  }
  std::vector<std::vector<std::string>> lines;
  for (const auto& [n, a] : per_n) {
    all_bounded = all_bounded && a.bounded;
    all_equal = all_equal && a.equal;
    all_exact = all_exact && a.exact;
    all_complete = all_complete && a.complete;
    const std::string pre = "N" + std::to_string(n) + ".";
    rep.actual[pre + "max_replayed"] = std::to_string(a.max_replayed);
    rep.actual[pre + "replay_bounded"] = yn(a.bounded);
    rep.actual[pre + "outputs_equal"] = yn(a.equal);
    rep.actual[pre + "outage_exact"] = yn(a.exact);
    rep.actual[pre + "max_outage_us"] = std::to_string(a.max_outage);
    lines.push_back({std::to_string(n), std::to_string(a.cells), std::to_string(a.max_replayed), yn(a.bounded),
                     std::to_string(a.min_outage) + ".." + std::to_string(a.max_outage), yn(a.exact),
                     yn(a.equal)});
  }
  rep.actual["replay_bounded"] = yn(all_bounded);
  rep.actual["outputs_equal"] = yn(all_equal);
  rep.actual["outage_exact"] = yn(all_exact);
  rep.actual["takeover_complete"] = yn(all_complete);
  rep.table = table({"N", "cells", "max replayed", "replayed <= N", "outage us", "outage exact", "outputs equal"},
                    lines);
}

void render_sync_overhead(const Parsed& p, Report& rep) {
  auto finish = [](const CellView& c) {
    Time t = 0;
    for (const auto* r : c.records) {
      if (r->kind == "serve.complete") t = std::max(t, r->time);
    }
    return t;
  };
  const CellView* plain = nullptr;
  for (const auto& c : p.cells) {
    if (c.label("role") == "plain") plain = &c;
  }
  if (plain == nullptr) fail(ErrorCode::parse_error, "sync overhead trace lacks its plain cell");
  const Time base = finish(*plain);
  const Outputs want = outputs(*plain);
  std::vector<std::vector<std::string>> lines;
  std::vector<std::int64_t> overheads;
  bool equal = true;
  for (const auto& c : p.cells) {
    if (c.label("role") != "pair") continue;
    const std::int64_t n = c.num_label("N");
    const Time t = finish(c);
    const std::int64_t ppm = base > 0 ? (t - base) * 1000000 / base : 0;
    std::int64_t publishes = 0;
    for (const auto* r : c.records) publishes += r->kind == "pair.publish" ? 1 : 0;
    const bool eq = recovery::verify_output_equality(outputs(c), want).equal;
    equal = equal && eq;
    overheads.push_back(ppm);
    rep.actual["N" + std::to_string(n) + ".overhead_ppm"] = std::to_string(ppm);
    rep.cells.push_back({{"cell", c.label("cell")},
                         {"N", n},
                         {"finish_us", t},
                         {"baseline_finish_us", base},
                         {"publishes", publishes},
                         {"overhead_ppm", ppm}});
    lines.push_back({std::to_string(n), std::to_string(publishes), std::to_string(t), std::to_string(ppm)});
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < overheads.size(); ++i) decreasing = decreasing && overheads[i] < overheads[i - 1];
  rep.actual["monotone_decreasing"] = yn(decreasing);
  rep.actual["outputs_equal"] = yn(equal);
  rep.table = "baseline finish " + std::to_string(base) + " us\n" +
              table({"N", "publishes", "finish us", "overhead ppm"}, lines);
}

void render_audit(const Parsed& p, Report& rep) {
  std::vector<std::vector<std::string>> lines;
  std::size_t violations = 0;
  std::size_t mismatches = 0;
  for (const auto& c : p.cells) {
    for (const auto* r : c.records) {
      if (r->kind == "audit.summary") {
        rep.actual["sequences"] = r->at("sequences");
        continue;
      }
      if (r->kind != "audit.cell") continue;
      const std::string name = r->at("scenario");
      const auto id = faults::scenario_by_name(name);
      if (!id) fail(ErrorCode::parse_error, "audit trace names unknown scenario " + name);
      const auto& info = faults::info(*id);
      const std::int64_t hits = r->num("hits");
      const std::int64_t user = r->num("user_hits");
      const faults::Reachability derived = user > 0  ? faults::Reachability::user
                                           : hits > 0 ? faults::Reachability::ioctl
                                                      : faults::Reachability::unreachable;
      std::string verdict = "ok";
      if (!faults::is_parse_time(*id)) {
        if (info.reach == faults::Reachability::unreachable && derived != info.reach) {
          verdict = "VIOLATION";
          ++violations;
        } else if (info.reach != faults::Reachability::unreachable && derived != info.reach) {
          verdict = "MISMATCH";
          ++mismatches;
        }
      } else {
        verdict = "privileged";
      }
      rep.actual[name + ".derived"] = std::string(faults::to_string(derived));
      rep.actual[name + ".hits"] = std::to_string(hits);
      rep.cells.push_back({{"scenario", name},
                           {"number", info.number},
                           {"table", std::string(faults::to_string(info.reach))},
                           {"derived", std::string(faults::to_string(derived))},
                           {"hits", hits},
                           {"user_hits", user},
                           {"witness", r->at("witness")},
                           {"verdict", verdict}});
      lines.push_back({info.number > 0 ? "#" + std::to_string(info.number) : "-", name,
                       std::string(faults::to_string(info.reach)), std::string(faults::to_string(derived)),
                       std::to_string(hits), verdict, r->at("witness")});
    }
  }
  rep.actual["violations"] = std::to_string(violations);
  rep.actual["label_mismatches"] = std::to_string(mismatches);
  rep.table = table({"#", "scenario", "table", "derived", "hits", "verdict", "witness"}, lines);
}

void render_run(const Parsed& p, Report& rep) {
  std::vector<std::vector<std::string>> lines;
  for (const auto& c : p.cells) {
    const sim::Record* roles = c.find("harness.roles");
    if (roles == nullptr) continue;
    for (const auto& [name, pid] : roles->fields) {
      const std::string e = "client:" + pid;
      std::string verdict = "ALIVE";
      std::string reason = "-";
      if (const auto* t = c.find("client.terminated", e)) {
        verdict = "DIED";
        reason = t->at("reason");
      }
      for (const auto* r : c.records) {
        if (r->entity != e) continue;
        if (r->kind == "victim.done") verdict = "ALIVE";
        if (r->kind == "victim.died" || r->kind == "victim.error") verdict = "DIED";
      }
      rep.actual[name + ".verdict"] = verdict;
      rep.actual[name + ".reason"] = reason;
      rep.cells.push_back({{"client", name}, {"pid", to_int(pid)}, {"verdict", verdict}, {"reason", reason}});
      lines.push_back({name, pid, verdict, reason});
    }
    if (const auto* cu = c.find("pair.caught_up")) {
      rep.actual["pair.outage_us"] = cu->at("outage");
      rep.actual["pair.replayed_steps"] = cu->at("replayed_steps");
    }
    std::size_t completed = 0;
    for (const auto* r : c.records) completed += r->kind == "serve.complete" ? 1 : 0;
    rep.actual["requests_completed"] = std::to_string(completed);
  }
  rep.table = table({"client", "pid", "verdict", "reason"}, lines);
}

}  // namespace

bool Report::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

Json Report::to_json() const {
  Json j;
  j["scenario"] = scenario;
  j["kind"] = std::string(to_string(kind));
  j["cells"] = cells;
  j["actual"] = actual;
  j["checks"] = Json::array();
  for (const auto& c : checks) {
    j["checks"].push_back({{"key", c.key}, {"expected", c.expected}, {"actual", c.actual}, {"pass", c.pass}});
  }
  j["pass"] = pass();
  return j;
}

std::string Report::to_json_lines() const {
  std::string out;
  for (const auto& c : cells) {
    Json line = {{"scenario", scenario}, {"type", "cell"}};
    for (auto it = c.begin(); it != c.end(); ++it) line[it.key()] = it.value();
    out += line.dump() + "\n";
  }
  Json summary = {{"scenario", scenario}, {"type", "summary"}, {"actual", actual}, {"pass", pass()}};
  out += summary.dump() + "\n";
  return out;
}

std::string Report::to_text() const {
  std::string out = "scenario " + scenario + " (" + std::string(to_string(kind)) + ")\n\n" + table + "\n";
  if (checks.empty()) return out + "no expectations\n";
  std::size_t failed = 0;
  for (const auto& c : checks) {
    if (c.pass) continue;
    ++failed;
    out += "FAIL " + c.key + ": expected " + c.expected + ", got " + c.actual + "\n";
  }
  out += std::to_string(checks.size() - failed) + "/" + std::to_string(checks.size()) + " expectations met: " +
         (failed == 0 ? "PASS" : "FAIL") + "\n";
  return out;
}

Report render(const sim::Trace& trace) {
  const Parsed p = parse(trace);
  Report rep;
  rep.scenario = p.name;
  rep.kind = p.kind;
  switch (p.kind) {
    case Kind::run: render_run(p, rep); break;
    case Kind::containment: render_containment(p, rep); break;
    case Kind::recovery: render_recovery(p, rep); break;
    case Kind::isolation_throughput: render_isolation_throughput(p, rep); break;
    case Kind::recovery_sweep: render_recovery_sweep(p, rep); break;
    case Kind::sync_overhead: render_sync_overhead(p, rep); break;
    case Kind::audit: render_audit(p, rep); break;
  }
  for (const auto& [key, want] : p.expect) {
    auto it = rep.actual.find(key);
    Check c{key, want, it == rep.actual.end() ? "<missing>" : it->second, false};
    c.pass = it != rep.actual.end() && it->second == want;
    rep.checks.push_back(c);
  }
  return rep;
}

}  // namespace mpssim::harness
