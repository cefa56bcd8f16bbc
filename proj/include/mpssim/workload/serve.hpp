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
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "mpssim/common.hpp"
#include "mpssim/recovery/snapshot.hpp"
#include "mpssim/world.hpp"

namespace mpssim::workload {

using recovery::BlockId;
using recovery::RequestId;
using recovery::Token;

struct RequestSpec {
  RequestId id = 0;
  Time arrival = 0;
  std::vector<Token> prompt;
  std::uint32_t max_new_tokens = 1;
};

/// Model weights, KV pool size, and the request trace of one service.
struct ServeSpec {
  std::uint64_t weight_pages = 1024;
  std::uint32_t kv_blocks = 256;
  std::vector<RequestSpec> requests;
};

/// Deterministic stand-in for a language model: the token at a position is a
/// pure function of the seed, the request, the position, and the prompt.
class ToyGenerator {
 public:
  ToyGenerator(std::uint64_t seed, std::uint64_t vocab_size);
  Token next(RequestId request, std::uint64_t position, std::uint64_t prompt_hash) const;
  static std::uint64_t hash_prompt(const std::vector<Token>& prompt);

 private:
  std::uint64_t seed_;
  std::uint64_t vocab_;
};

/// Weights and KV pool of a serving instance. Both are VMM allocations so
/// another process can alias them.
struct ServeMemory {
  AllocHandle weights;
  AllocHandle kv;
  RangeId weights_range;
  RangeId kv_range;
};

ServeMemory create_serve_memory(World& w, Pid pid, const ServeSpec& spec);
/// Maps an existing instance's handles into `pid`'s address space.
ServeMemory map_serve_memory(World& w, Pid pid, const ServeMemory& from);
/// Creates a private KV pool for `pid` next to an already mapped weight range.
ServeMemory with_private_kv(World& w, Pid pid, ServeMemory m, const ServeSpec& spec);

class ServeEngine;

/// Client-facing side of a service. Outlives any one engine: it keeps the
/// request log, the tokens already streamed to users, and finished outputs.
class Frontend {
 public:
  Frontend(World& w, ServeSpec spec);
  Frontend(const Frontend&) = delete;
  Frontend& operator=(const Frontend&) = delete;

  /// Schedules every arrival of the trace.
  void start();
  void attach(ServeEngine* engine);
  ServeEngine* engine() const { return engine_; }

  void on_token(Pid from, RequestId id, std::uint64_t pos, Token tok);
  void on_complete(RequestId id, const std::vector<Token>& output);

  /// Calls `fn` once, when the service has streamed `total` tokens.
  void at_tokens(std::uint64_t total, std::function<void()> fn);

  const ServeSpec& spec() const { return spec_; }
  const RequestSpec& request(RequestId id) const;
  bool arrived(RequestId id) const { return arrived_.count(id) != 0; }
  std::vector<RequestId> arrived_unfinished() const;
  const std::vector<Token>& delivered(RequestId id) const;
  std::uint64_t delivered_total() const { return delivered_total_; }
  std::uint64_t replayed_tokens() const { return replayed_; }
  std::uint64_t replay_mismatches() const { return mismatches_; }
  bool complete(RequestId id) const { return outputs_.count(id) != 0; }
  bool all_complete() const { return outputs_.size() == spec_.requests.size(); }
  const std::map<RequestId, std::vector<Token>>& outputs() const { return outputs_; }

 private:
  sim::EntityRef ref() const { return sim::EntityRef::of(sim::EntityKind::frontend); }

  World& w_;
  ServeSpec spec_;
  std::map<RequestId, std::size_t> index_;
  std::set<RequestId> arrived_;
  std::map<RequestId, std::vector<Token>> delivered_;
  std::map<RequestId, std::vector<Token>> outputs_;
  std::uint64_t delivered_total_ = 0;
  std::uint64_t replayed_ = 0;
  std::uint64_t mismatches_ = 0;
  std::multimap<std::uint64_t, std::function<void()>> triggers_;
  ServeEngine* engine_ = nullptr;
};

/// Receives the engine's forward-state deltas.
class SnapshotSink {
 public:
  virtual ~SnapshotSink() = default;
  virtual void publish(Pid from, std::vector<recovery::ForwardSnapshot> deltas) = 0;
};

/// Toy autoregressive serving engine: one process, a paged KV pool, and a
/// batched step loop. Each step takes one prefill chunk from every prefilling
/// request and one token from every decoding request.
class ServeEngine {
 public:
  ServeEngine(World& w, Pid pid, const ServeMemory& mem, const ServeSpec& spec, Frontend& frontend,
              SnapshotSink* sink = nullptr);
  ServeEngine(const ServeEngine&) = delete;
  ServeEngine& operator=(const ServeEngine&) = delete;

  void enqueue(const RequestSpec& r);
  /// Takes over a request from folded snapshot state: its KV blocks are
  /// reused as-is and decoding resumes at `state.progress`.
  void adopt(const RequestSpec& r, const recovery::RequestState& state);

  using StepListener = std::function<void(std::uint64_t step)>;
  void on_step(StepListener l) { step_listeners_.push_back(std::move(l)); }

  Pid pid() const { return pid_; }
  std::uint64_t steps() const { return steps_; }
  std::uint64_t decode_steps() const { return decode_steps_; }
  std::uint64_t publishes() const { return publishes_; }
  bool has(RequestId id) const { return reqs_.count(id) != 0; }
  std::uint64_t progress(RequestId id) const;
  std::size_t live_blocks() const;
  std::size_t free_blocks() const { return free_.size(); }
  /// Block table of an in-flight request.
  const std::vector<BlockId>& blocks(RequestId id) const;

 private:
  enum class Phase : std::uint8_t { queued, prefilling, decoding, done };
  struct Req {
    RequestSpec spec;
    std::uint64_t prompt_hash = 0;
    Phase phase = Phase::queued;
    std::uint64_t prefilled = 0;
    std::vector<BlockId> blocks;
    std::vector<Token> tokens;
    std::size_t published_blocks = 0;
    std::size_t published_tokens = 0;
    bool in_snapshot = false;
  };

  void kick();
  void step();
  void finish_step(bool had_prefill, bool had_decode);
  void grow_blocks(Req& r);
  BlockId take_block();
  VirtAddr slot_va(const Req& r, std::uint64_t pos) const;
  void publish();

  World& w_;
  Pid pid_;
  VirtAddr kv_base_ = 0;
  const ServeSpec& spec_;
  Frontend& frontend_;
  SnapshotSink* sink_;
  ToyGenerator gen_;
  std::map<RequestId, Req> reqs_;
  std::set<BlockId> free_;
  bool running_ = false;
  std::uint64_t steps_ = 0;
  std::uint64_t decode_steps_ = 0;
  std::uint64_t publishes_ = 0;
  std::vector<StepListener> step_listeners_;
};

}  // namespace mpssim::workload
