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

#include "mpssim/sim/trace.hpp"

#include <charconv>
#include <ostream>
#include <sstream>

namespace mpssim::sim {
namespace {

std::string_view kind_name(EntityKind k) {
  switch (k) {
    case EntityKind::world: return "world";
    case EntityKind::gpu: return "gpu";
    case EntityKind::scheduler: return "sched";
    case EntityKind::memory: return "mem";
    case EntityKind::uvm: return "uvm";
    case EntityKind::rmgsp: return "rmgsp";
    case EntityKind::client: return "client";
    case EntityKind::channel: return "channel";
    case EntityKind::tsg: return "tsg";
    case EntityKind::range: return "range";
    case EntityKind::alloc: return "alloc";
    case EntityKind::frontend: return "frontend";
    case EntityKind::pair: return "pair";
    case EntityKind::audit: return "audit";
  }
  return "?";
}

// Values may not contain the separators of the line format.
std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '%': out += "%25"; break;
      case ' ': out += "%20"; break;
      case '\n': out += "%0A"; break;
      case '\t': out += "%09"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%') {
      if (i + 2 >= s.size()) fail(ErrorCode::parse_error, "truncated escape in trace value");
      std::string_view code = s.substr(i + 1, 2);
      if (code == "25") out += '%';
      else if (code == "20") out += ' ';
      else if (code == "0A") out += '\n';
      else if (code == "09") out += '\t';
      else fail(ErrorCode::parse_error, "bad escape in trace value: " + std::string(s));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

}  // namespace

std::string EntityRef::str() const {
  std::string out(kind_name(kind));
  if (id != 0) {
    out += ':';
    out += std::to_string(id);
  }
  return out;
}

std::optional<std::string_view> Record::get(std::string_view key) const {
  for (const auto& [k, v] : fields) {
    if (k == key) return std::string_view(v);
  }
  return std::nullopt;
}

std::string Record::at(std::string_view key) const {
  auto v = get(key);
  if (!v) fail(ErrorCode::parse_error, "trace record " + kind + " lacks field " + std::string(key));
  return std::string(*v);
}

std::int64_t Record::num(std::string_view key) const {
  std::string v = at(key);
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    fail(ErrorCode::parse_error, "trace field " + std::string(key) + " is not a number: " + v);
  }
  return out;
}

std::string Record::serialize() const {
  std::string out = "t=" + std::to_string(time) + " e=" + escape(entity) + " k=" + escape(kind);
  for (const auto& [k, v] : fields) {
    out += ' ';
    out += k;
    out += '=';
    out += escape(v);
  }
  return out;
}

Record Record::parse(std::string_view line) {
  Record r;
  std::size_t pos = 0;
  int index = 0;
  while (pos < line.size()) {
    std::size_t end = line.find(' ', pos);
    if (end == std::string_view::npos) end = line.size();
    std::string_view tok = line.substr(pos, end - pos);
    pos = end + 1;
    if (tok.empty()) continue;
    std::size_t eq = tok.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::parse_error, "trace token without '=': " + std::string(tok));
    }
    std::string_view key = tok.substr(0, eq);
    std::string value = unescape(tok.substr(eq + 1));
    if (index == 0) {
      if (key != "t") fail(ErrorCode::parse_error, "trace line must start with t=");
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), r.time);
      if (ec != std::errc{}) fail(ErrorCode::parse_error, "bad trace time: " + value);
    } else if (index == 1) {
      if (key != "e") fail(ErrorCode::parse_error, "trace line lacks e=");
      r.entity = value;
    } else if (index == 2) {
      if (key != "k") fail(ErrorCode::parse_error, "trace line lacks k=");
      r.kind = value;
    } else {
      r.fields.emplace_back(std::string(key), std::move(value));
    }
    ++index;
  }
  if (index < 3) fail(ErrorCode::parse_error, "truncated trace line: " + std::string(line));
  return r;
}

void Trace::emit(Time t, EntityRef who, std::string_view kind,
                 std::initializer_list<std::pair<std::string_view, FieldValue>> fields) {
  Record r;
  r.time = t;
  r.entity = who.str();
  r.kind = std::string(kind);
  r.fields.reserve(fields.size());
  for (const auto& [k, v] : fields) r.fields.emplace_back(std::string(k), v.text());
  records_.push_back(std::move(r));
}

std::string Trace::serialize() const {
  std::ostringstream os;
  write(os);
  return os.str();
}

void Trace::write(std::ostream& os) const {
  for (const auto& r : records_) os << r.serialize() << '\n';
}

Trace Trace::parse(std::string_view text) {
  Trace t;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;
    t.records_.push_back(Record::parse(line));
  }
  return t;
}

}  // namespace mpssim::sim
