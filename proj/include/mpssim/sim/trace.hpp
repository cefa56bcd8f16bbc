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

#pragma once

#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mpssim/common.hpp"

namespace mpssim::sim {

enum class EntityKind : std::uint8_t {
  world,
  gpu,
  scheduler,
  memory,
  uvm,
  rmgsp,
  client,
  channel,
  tsg,
  range,
  alloc,
  frontend,
  pair,
  audit,
};

/// Names the simulated entity an event targets or a trace record describes.
struct EntityRef {
  EntityKind kind = EntityKind::world;
  std::uint64_t id = 0;

  static EntityRef of(EntityKind k, std::uint64_t i = 0) { return {k, i}; }
  static EntityRef client(Pid p) { return {EntityKind::client, p.value}; }
  static EntityRef channel(ChannelId c) { return {EntityKind::channel, c.value}; }
  static EntityRef tsg(TsgId t) { return {EntityKind::tsg, t.value}; }

  std::string str() const;
  auto operator<=>(const EntityRef&) const = default;
};

/// A field value is always stored in its rendered form so that a parsed
/// record compares equal to the one that produced it.
class FieldValue {
 public:
  FieldValue(std::string_view s) : text_(s) {}
  FieldValue(const std::string& s) : text_(s) {}
  FieldValue(const char* s) : text_(s) {}
  FieldValue(bool b) : text_(b ? "yes" : "no") {}
  FieldValue(int v) : text_(std::to_string(v)) {}
  FieldValue(long v) : text_(std::to_string(v)) {}
  FieldValue(long long v) : text_(std::to_string(v)) {}
  FieldValue(unsigned v) : text_(std::to_string(v)) {}
  FieldValue(unsigned long v) : text_(std::to_string(v)) {}
  FieldValue(unsigned long long v) : text_(std::to_string(v)) {}
  template <typename Tag>
  FieldValue(Id<Tag> id) : text_(std::to_string(id.value)) {}

  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

struct Record {
  Time time = 0;
  std::string entity;
  std::string kind;
  std::vector<std::pair<std::string, std::string>> fields;

  /// Value of a field, or nullopt.
  std::optional<std::string_view> get(std::string_view key) const;
  std::string at(std::string_view key) const;
  std::int64_t num(std::string_view key) const;

  /// One line, no trailing newline: `t=<time> e=<entity> k=<kind> key=value...`.
  std::string serialize() const;
  static Record parse(std::string_view line);

  bool operator==(const Record&) const = default;
};

/// Append-only event log. Every state mutation in the simulator emits
/// exactly one record here.
class Trace {
 public:
  void emit(Time t, EntityRef who, std::string_view kind,
            std::initializer_list<std::pair<std::string_view, FieldValue>> fields = {});
  void append(Record r) { records_.push_back(std::move(r)); }

  const std::vector<Record>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  std::string serialize() const;
  void write(std::ostream& os) const;
  static Trace parse(std::string_view text);

  bool operator==(const Trace&) const = default;

 private:
  std::vector<Record> records_;
};

}  // namespace mpssim::sim
