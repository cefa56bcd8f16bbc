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

#include "mpssim/harness/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "mpssim/faults/inject.hpp"
#include "mpssim/faults/taxonomy.hpp"
#include "mpssim/sim/kernel.hpp"
#include "mpssim/sim/params.hpp"

namespace mpssim::harness {

namespace {

constexpr std::pair<Kind, std::string_view> kKinds[] = {
    {Kind::run, "run"},
    {Kind::containment, "containment"},
    {Kind::recovery, "recovery"},
    {Kind::isolation_throughput, "isolation_throughput"},
    {Kind::recovery_sweep, "recovery_sweep"},
    {Kind::sync_overhead, "sync_overhead"},
    {Kind::audit, "audit"},
};

class Parser {
 public:
  explicit Parser(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void error(const YAML::Node& n, const std::string& what) const {
    const int line = n.Mark().line >= 0 ? n.Mark().line + 1 : 0;
    fail(ErrorCode::parse_error, origin_ + ":" + std::to_string(line) + ": " + what);
  }

  void only_keys(const YAML::Node& map, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!map.IsMap()) error(map, where + " must be a mapping");
    for (const auto& kv : map) {
      const std::string key = kv.first.as<std::string>();
      bool ok = false;
      for (auto a : allowed) ok = ok || a == key;
      if (!ok) error(kv.first, "unknown key '" + key + "' in " + where);
    }
  }

  std::string str(const YAML::Node& n, const std::string& what) {
    if (!n.IsScalar()) error(n, what + " must be a scalar");
    return n.Scalar();
  }

  template <typename T>
  T num(const YAML::Node& n, const std::string& what) {
    if (!n.IsScalar()) error(n, what + " must be a number");
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      error(n, what + " must be a number, got '" + n.Scalar() + "'");
    }
  }

  bool boolean(const YAML::Node& n, const std::string& what) {
    if (!n.IsScalar()) error(n, what + " must be true or false");
    try {
      return n.as<bool>();
    } catch (const YAML::Exception&) {
      error(n, what + " must be true or false, got '" + n.Scalar() + "'");
    }
  }

  /// Integers, inclusive ranges "a..b", or doubling ranges "a..b*2".
  std::vector<std::uint64_t> int_list(const YAML::Node& n, const std::string& what) {
    if (!n.IsSequence()) error(n, what + " must be a list");
    std::vector<std::uint64_t> out;
    for (const auto& item : n) {
      const std::string s = str(item, what + " entry");
      const auto dots = s.find("..");
      if (dots == std::string::npos) {
        out.push_back(num<std::uint64_t>(item, what + " entry"));
        continue;
      }
      std::uint64_t lo = 0;
      std::uint64_t hi = 0;
      std::uint64_t factor = 0;
      std::string rest = s.substr(dots + 2);
      const auto star = rest.find('*');
      try {
        lo = std::stoull(s.substr(0, dots));
        hi = std::stoull(rest.substr(0, star));
        if (star != std::string::npos) factor = std::stoull(rest.substr(star + 1));
      } catch (const std::exception&) {
        error(item, "bad range '" + s + "' in " + what);
      }
      if (lo == 0 || hi < lo || (star != std::string::npos && factor < 2)) {
        error(item, "bad range '" + s + "' in " + what);
      }
      for (std::uint64_t v = lo; v <= hi; v = factor ? v * factor : v + 1) out.push_back(v);
    }
    return out;
  }

  void flatten(const YAML::Node& n, const std::string& prefix, std::map<std::string, std::string>& out) {
    if (n.IsMap()) {
      for (const auto& kv : n) {
        const std::string key = kv.first.as<std::string>();
        flatten(kv.second, prefix.empty() ? key : prefix + "." + key, out);
      }
    } else if (n.IsScalar()) {
      if (prefix.empty()) error(n, "expect must be a mapping");
      out[prefix] = n.Scalar();
    } else {
      error(n, "expect values must be scalars or mappings");
    }
  }

  workload::ServeSpec serve(const YAML::Node& n) {
    only_keys(n, {"weight_pages", "kv_blocks", "requests"}, "serve");
    workload::ServeSpec s;
    if (n["weight_pages"]) s.weight_pages = num<std::uint64_t>(n["weight_pages"], "weight_pages");
    if (n["kv_blocks"]) s.kv_blocks = num<std::uint32_t>(n["kv_blocks"], "kv_blocks");
    if (!n["requests"]) error(n, "serve needs requests");
    const YAML::Node reqs = n["requests"];
    if (!reqs.IsSequence() || reqs.size() == 0) error(reqs, "requests must be a non-empty list");
    std::set<workload::RequestId> ids;
    for (const auto& r : reqs) {
      only_keys(r, {"id", "arrival", "prompt", "max_new_tokens"}, "request");
      workload::RequestSpec q;
      q.id = r["id"] ? num<workload::RequestId>(r["id"], "id") : s.requests.size() + 1;
      if (!ids.insert(q.id).second) error(r, "duplicate request id " + std::to_string(q.id));
      q.arrival = r["arrival"] ? num<Time>(r["arrival"], "arrival") : 0;
      if (q.arrival < 0) error(r, "arrival must be >= 0");
      if (!r["prompt"]) error(r, "request needs prompt (token count)");
      const auto len = num<std::uint32_t>(r["prompt"], "prompt");
      if (len == 0) error(r["prompt"], "prompt must be >= 1 token");
      q.prompt = synth_prompt(q.id, len);
      if (!r["max_new_tokens"]) error(r, "request needs max_new_tokens");
      q.max_new_tokens = num<std::uint32_t>(r["max_new_tokens"], "max_new_tokens");
      if (q.max_new_tokens == 0) error(r["max_new_tokens"], "max_new_tokens must be >= 1");
      s.requests.push_back(std::move(q));
    }
    return s;
  }

  void trigger_name(const YAML::Node& n, const std::string& name, bool privileged = false) {
    const auto id = faults::scenario_by_name(name);
    if (!id) error(n, "unknown fault trigger '" + name + "'");
    try {
      faults::trigger_script(*id, privileged);
    } catch (const Error& e) {
      error(n, e.what());
    }
  }

  Scenario parse(const YAML::Node& root) {
    if (!root.IsMap()) error(root, "scenario must be a mapping");
    only_keys(root,
              {"schema", "name", "kind", "seed", "params", "isolation", "serve", "tail_tokens", "clients",
               "injections", "faults", "iterations", "kernel_us", "inject_at", "crash_at_tokens", "ks", "ns",
               "kv_sharing", "depth", "broken_gates", "expect"},
              "scenario");
    if (!root["schema"]) error(root, "missing schema version");
    if (num<int>(root["schema"], "schema") != kSchemaVersion) {
      error(root["schema"], "unsupported schema version (want " + std::to_string(kSchemaVersion) + ")");
    }
    Scenario sc;
    if (!root["name"]) error(root, "missing name");
    sc.name = str(root["name"], "name");
    if (!root["kind"]) error(root, "missing kind");
    const std::string kind = str(root["kind"], "kind");
    auto k = kind_by_name(kind);
    if (!k) error(root["kind"], "unknown kind '" + kind + "'");
    sc.kind = *k;
    if (root["seed"]) sc.seed = num<std::uint64_t>(root["seed"], "seed");
    if (root["params"]) {
      const YAML::Node p = root["params"];
      if (!p.IsMap()) error(p, "params must be a mapping");
      sim::SimParams probe;
      for (const auto& kv : p) {
        const std::string key = kv.first.as<std::string>();
        const std::string val = str(kv.second, "param " + key);
        try {
          probe.set(key, val);
        } catch (const Error& e) {
          error(kv.first, e.what());
        }
        sc.params.emplace_back(key, val);
      }
    }
    if (root["isolation"]) sc.isolation = boolean(root["isolation"], "isolation");
    if (root["serve"]) sc.serve = serve(root["serve"]);
    if (root["tail_tokens"]) sc.tail_tokens = num<std::uint32_t>(root["tail_tokens"], "tail_tokens");
    if (root["faults"]) {
      const YAML::Node f = root["faults"];
      if (!f.IsSequence()) error(f, "faults must be a list");
      for (const auto& item : f) {
        const std::string name = str(item, "fault");
        trigger_name(item, name);
        sc.faults.push_back(name);
      }
    }
    if (root["iterations"]) sc.iterations = num<int>(root["iterations"], "iterations");
    if (root["kernel_us"]) sc.kernel_us = num<Duration>(root["kernel_us"], "kernel_us");
    if (root["inject_at"]) sc.inject_at = num<Time>(root["inject_at"], "inject_at");
    if (sc.inject_at < 0) error(root["inject_at"], "inject_at must be >= 0");
    if (root["crash_at_tokens"]) sc.crash_at_tokens = num<std::uint64_t>(root["crash_at_tokens"], "crash_at_tokens");
    if (root["ks"]) sc.ks = int_list(root["ks"], "ks");
    if (root["ns"]) {
      for (auto v : int_list(root["ns"], "ns")) sc.ns.push_back(static_cast<std::int64_t>(v));
    }
    if (root["kv_sharing"]) sc.kv_sharing = boolean(root["kv_sharing"], "kv_sharing");
    if (root["depth"]) sc.depth = num<int>(root["depth"], "depth");
    if (root["broken_gates"]) sc.broken_gates = boolean(root["broken_gates"], "broken_gates");
    if (root["clients"]) clients(root["clients"], sc);
    if (root["injections"]) injections(root["injections"], sc);
    if (root["expect"]) flatten(root["expect"], "", sc.expect);
    check_kind(root, sc);
    return sc;
  }

  void clients(const YAML::Node& n, Scenario& sc) {
    if (!n.IsSequence()) error(n, "clients must be a list");
    std::set<std::string> names;
    for (const auto& c : n) {
      only_keys(c, {"name", "mode", "workload", "iterations", "kernel_us", "kv_sharing"}, "client");
      ClientDecl d;
      d.line = c.Mark().line + 1;
      if (!c["name"]) error(c, "client needs a name");
      d.name = str(c["name"], "client name");
      if (!names.insert(d.name).second) error(c["name"], "duplicate client '" + d.name + "'");
      if (c["mode"]) {
        const std::string m = str(c["mode"], "mode");
        if (m == "mps") d.mode = exec::ClientMode::mps;
        else if (m == "standalone") d.mode = exec::ClientMode::standalone;
        else error(c["mode"], "mode must be mps or standalone");
      }
      if (c["workload"]) {
        const std::string w = str(c["workload"], "workload");
        if (w == "none") d.workload = WorkloadKind::none;
        else if (w == "victim") d.workload = WorkloadKind::victim;
        else if (w == "serve") d.workload = WorkloadKind::serve;
        else if (w == "pair") d.workload = WorkloadKind::pair;
        else error(c["workload"], "workload must be none, victim, serve, or pair");
      }
      if (d.workload == WorkloadKind::pair && d.mode != exec::ClientMode::mps) {
        error(c, "a recovery pair's active instance runs under MPS");
      }
      if ((d.workload == WorkloadKind::serve || d.workload == WorkloadKind::pair) && sc.serve.requests.empty()) {
        error(c, "serving client '" + d.name + "' needs a serve section");
      }
      if (c["iterations"]) d.iterations = num<int>(c["iterations"], "iterations");
      if (c["kernel_us"]) d.kernel_us = num<Duration>(c["kernel_us"], "kernel_us");
      if (c["kv_sharing"]) d.kv_sharing = boolean(c["kv_sharing"], "kv_sharing");
      sc.clients.push_back(d);
    }
  }

  void injections(const YAML::Node& n, Scenario& sc) {
    if (!n.IsSequence()) error(n, "injections must be a list");
    for (const auto& i : n) {
      only_keys(i, {"client", "trigger", "time", "at_tokens", "service", "privileged"}, "injection");
      InjectionDecl d;
      d.line = i.Mark().line + 1;
      if (!i["client"]) error(i, "injection needs a client");
      d.client = str(i["client"], "client");
      const ClientDecl* c = find(sc, d.client);
      if (c == nullptr) error(i["client"], "injection references undeclared client '" + d.client + "'");
      if (!i["trigger"]) error(i, "injection needs a trigger");
      d.trigger = str(i["trigger"], "trigger");
      if (i["privileged"]) d.privileged = boolean(i["privileged"], "privileged");
      trigger_name(i["trigger"], d.trigger, d.privileged);
      if (i["time"]) {
        d.time = num<Time>(i["time"], "time");
        if (*d.time < 0) error(i["time"], "injection time must be >= 0");
      }
      if (i["at_tokens"]) {
        d.at_tokens = num<std::uint64_t>(i["at_tokens"], "at_tokens");
        if (*d.at_tokens == 0) error(i["at_tokens"], "at_tokens must be >= 1");
        if (!i["service"]) error(i, "at_tokens needs the service whose tokens it counts");
        d.service = str(i["service"], "service");
        const ClientDecl* s = find(sc, d.service);
        if (s == nullptr) error(i["service"], "injection references undeclared client '" + d.service + "'");
        if (s->workload != WorkloadKind::serve && s->workload != WorkloadKind::pair) {
          error(i["service"], "'" + d.service + "' does not serve tokens");
        }
      } else if (i["service"]) {
        error(i["service"], "service is only meaningful with at_tokens");
      }
      if (d.time.has_value() == d.at_tokens.has_value()) error(i, "injection needs exactly one of time or at_tokens");
      sc.injections.push_back(d);
    }
  }

  static const ClientDecl* find(const Scenario& sc, const std::string& name) {
    for (const auto& c : sc.clients) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  void check_kind(const YAML::Node& root, Scenario& sc) {
    const bool serving = sc.kind == Kind::recovery || sc.kind == Kind::isolation_throughput ||
                         sc.kind == Kind::recovery_sweep || sc.kind == Kind::sync_overhead;
    if (serving && sc.serve.requests.empty()) error(root, std::string(to_string(sc.kind)) + " needs a serve section");
    if (sc.kind != Kind::run && (!sc.clients.empty() || !sc.injections.empty())) {
      error(root, "clients and injections belong to kind run");
    }
    if ((sc.kind == Kind::containment || sc.kind == Kind::recovery || sc.kind == Kind::isolation_throughput) &&
        sc.faults.empty()) {
      error(root, std::string(to_string(sc.kind)) + " needs a faults list");
    }
    if (sc.kind == Kind::recovery_sweep && (sc.ks.empty() || sc.ns.empty())) {
      error(root, "recovery_sweep needs ks and ns");
    }
    if (sc.kind == Kind::sync_overhead && sc.ns.empty()) error(root, "sync_overhead needs ns");
    if (sc.kind == Kind::recovery_sweep && sc.serve.requests.size() != 1) {
      error(root, "recovery_sweep serves exactly one request");
    }
    if (sc.iterations < 1) error(root, "iterations must be >= 1");
    if (sc.kernel_us < 1) error(root, "kernel_us must be >= 1");
    if (sc.depth < 0) error(root, "depth must be >= 0");
    for (auto n : sc.ns) {
      if (n < 1) error(root["ns"], "every N must be >= 1");
    }
  }

 private:
  std::string origin_;
};

}  // namespace

std::string_view to_string(Kind k) {
  for (const auto& [kind, name] : kKinds) {
    if (kind == k) return name;
  }
  return "?";
}

std::optional<Kind> kind_by_name(std::string_view name) {
  for (const auto& [kind, n] : kKinds) {
    if (n == name) return kind;
  }
  return std::nullopt;
}

std::vector<workload::Token> synth_prompt(workload::RequestId id, std::uint32_t length) {
  std::vector<workload::Token> out;
  out.reserve(length);
  for (std::uint32_t i = 0; i < length; ++i) {
    out.push_back(static_cast<workload::Token>(sim::mix64(id << 32 | i) % 32768));
  }
  return out;
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  Parser p(origin);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    fail(ErrorCode::parse_error, origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  try {
    return p.parse(root);
  } catch (const YAML::Exception& e) {
    fail(ErrorCode::parse_error, origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::parse_error, path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

}  // namespace mpssim::harness
