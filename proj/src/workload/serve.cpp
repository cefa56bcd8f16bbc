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

#include "mpssim/workload/serve.hpp"

#include <algorithm>
#include <string>

namespace mpssim::workload {

namespace {

std::uint64_t blocks_needed(std::uint64_t tokens, std::uint64_t block_size) {
  return (tokens + block_size - 1) / block_size;
}

}  // namespace

ToyGenerator::ToyGenerator(std::uint64_t seed, std::uint64_t vocab_size) : seed_(seed), vocab_(vocab_size) {
  if (vocab_size == 0) fail(ErrorCode::invalid_argument, "vocab_size must be positive");
}

Token ToyGenerator::next(RequestId request, std::uint64_t position, std::uint64_t prompt_hash) const {
  std::uint64_t h = sim::mix64(seed_ ^ 0x746f6b656eull);
  h = sim::mix64(h ^ request);
  h = sim::mix64(h ^ position);
  h = sim::mix64(h ^ prompt_hash);
  return static_cast<Token>(h % vocab_);
}

std::uint64_t ToyGenerator::hash_prompt(const std::vector<Token>& prompt) {
  std::uint64_t h = prompt.size();
  for (Token t : prompt) h = sim::mix64(h ^ t);
  return h;
}

ServeMemory create_serve_memory(World& w, Pid pid, const ServeSpec& spec) {
  if (spec.weight_pages == 0 || spec.kv_blocks == 0) fail(ErrorCode::invalid_size, "empty weights or KV pool");
  const ContextId ctx = w.context_of(pid);
  ServeMemory m;
  std::tie(m.weights, m.weights_range) = w.memory().vmm_create_map(pid, ctx, spec.weight_pages * kPageSize);
  const auto kv_pages = static_cast<std::uint64_t>(spec.kv_blocks) *
                        static_cast<std::uint64_t>(w.params().kv_block_pages);
  std::tie(m.kv, m.kv_range) = w.memory().vmm_create_map(pid, ctx, kv_pages * kPageSize);
  w.memory().host_write(m.weights_range, 0, sim::mix64(w.params().seed ^ spec.weight_pages));
  return m;
}

ServeMemory map_serve_memory(World& w, Pid pid, const ServeMemory& from) {
  const ContextId ctx = w.context_of(pid);
  ServeMemory m = from;
  m.weights_range = w.memory().vmm_map(pid, ctx, from.weights);
  m.kv_range = w.memory().vmm_map(pid, ctx, from.kv);
  return m;
}

ServeMemory with_private_kv(World& w, Pid pid, ServeMemory m, const ServeSpec& spec) {
  const auto kv_pages = static_cast<std::uint64_t>(spec.kv_blocks) *
                        static_cast<std::uint64_t>(w.params().kv_block_pages);
  std::tie(m.kv, m.kv_range) = w.memory().vmm_create_map(pid, w.context_of(pid), kv_pages * kPageSize);
  return m;
}

Frontend::Frontend(World& w, ServeSpec spec) : w_(w), spec_(std::move(spec)) {
  for (std::size_t i = 0; i < spec_.requests.size(); ++i) {
    const RequestSpec& r = spec_.requests[i];
    if (r.max_new_tokens == 0) fail(ErrorCode::invalid_argument, "request needs max_new_tokens >= 1");
    if (r.prompt.empty()) fail(ErrorCode::invalid_argument, "request needs a non-empty prompt");
    if (r.arrival < 0) fail(ErrorCode::invalid_argument, "negative arrival time");
    if (!index_.emplace(r.id, i).second) {
      fail(ErrorCode::invalid_argument, "duplicate request id " + std::to_string(r.id));
    }
    delivered_[r.id];
  }
}

void Frontend::start() {
  for (const RequestSpec& r : spec_.requests) {
    const RequestId id = r.id;
    w_.kernel().schedule(r.arrival - w_.now(), ref(), "serve.arrive", [this, id] {
      arrived_.insert(id);
      const RequestSpec& spec = request(id);
      w_.kernel().emit(ref(), "serve.arrive",
                       {{"req", id}, {"prompt", spec.prompt.size()}, {"max_new", spec.max_new_tokens}});
      if (engine_ != nullptr) engine_->enqueue(spec);
    });
  }
}

void Frontend::attach(ServeEngine* engine) { engine_ = engine; }

const RequestSpec& Frontend::request(RequestId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) fail(ErrorCode::invalid_argument, "unknown request " + std::to_string(id));
  return spec_.requests[it->second];
}

std::vector<RequestId> Frontend::arrived_unfinished() const {
  std::vector<RequestId> out;
  for (RequestId id : arrived_) {
    if (!complete(id)) out.push_back(id);
  }
  return out;
}

const std::vector<Token>& Frontend::delivered(RequestId id) const {
  auto it = delivered_.find(id);
  if (it == delivered_.end()) fail(ErrorCode::invalid_argument, "unknown request " + std::to_string(id));
  return it->second;
}

void Frontend::on_token(Pid from, RequestId id, std::uint64_t pos, Token tok) {
  std::vector<Token>& d = delivered_.at(id);
  if (pos < d.size()) {
    ++replayed_;
    const bool match = d[pos] == tok;
    if (!match) ++mismatches_;
    w_.kernel().emit(sim::EntityRef::client(from), "serve.replay",
                     {{"req", id}, {"pos", pos}, {"tok", tok}, {"match", match}});
    return;
  }
  MPSSIM_ASSERT(pos == d.size(), "token stream skipped a position");
  d.push_back(tok);
  ++delivered_total_;
  w_.kernel().emit(sim::EntityRef::client(from), "serve.token", {{"req", id}, {"pos", pos}, {"tok", tok}});
  auto [lo, hi] = triggers_.equal_range(delivered_total_);
  std::vector<std::function<void()>> fire;
  for (auto it = lo; it != hi; ++it) fire.push_back(std::move(it->second));
  triggers_.erase(lo, hi);
  for (auto& f : fire) f();
}

void Frontend::on_complete(RequestId id, const std::vector<Token>& output) {
  if (outputs_.count(id) != 0) return;
  outputs_.emplace(id, output);
  std::string out;
  for (Token t : output) {
    if (!out.empty()) out += ',';
    out += std::to_string(t);
  }
  w_.kernel().emit(ref(), "serve.complete", {{"req", id}, {"tokens", output.size()}, {"out", out}});
}

void Frontend::at_tokens(std::uint64_t total, std::function<void()> fn) {
  if (total == 0) fail(ErrorCode::invalid_argument, "token trigger must be positive");
  triggers_.emplace(total, std::move(fn));
}

ServeEngine::ServeEngine(World& w, Pid pid, const ServeMemory& mem, const ServeSpec& spec, Frontend& frontend,
                         SnapshotSink* sink)
    : w_(w),
      pid_(pid),
      spec_(spec),
      frontend_(frontend),
      sink_(sink),
      gen_(w.params().seed, static_cast<std::uint64_t>(w.params().vocab_size)) {
  const mem::VaRange& kv = w.memory().range(mem.kv_range);
  const auto block_bytes = static_cast<std::uint64_t>(w.params().kv_block_pages) * kPageSize;
  if (kv.length < static_cast<std::uint64_t>(spec.kv_blocks) * block_bytes) {
    fail(ErrorCode::invalid_size, "KV range smaller than the configured pool");
  }
  kv_base_ = kv.base;
  for (BlockId b = 0; b < spec.kv_blocks; ++b) free_.insert(b);
}

std::uint64_t ServeEngine::progress(RequestId id) const {
  auto it = reqs_.find(id);
  return it == reqs_.end() ? 0 : it->second.tokens.size();
}

std::size_t ServeEngine::live_blocks() const {
  std::size_t n = 0;
  for (const auto& [id, r] : reqs_) {
    if (r.phase != Phase::done) n += r.blocks.size();
  }
  return n;
}

const std::vector<BlockId>& ServeEngine::blocks(RequestId id) const {
  auto it = reqs_.find(id);
  if (it == reqs_.end()) fail(ErrorCode::invalid_argument, "request not in flight: " + std::to_string(id));
  return it->second.blocks;
}

void ServeEngine::enqueue(const RequestSpec& r) {
  Req q;
  q.spec = r;
  q.prompt_hash = ToyGenerator::hash_prompt(r.prompt);
  if (!reqs_.emplace(r.id, std::move(q)).second) return;
  w_.kernel().emit(sim::EntityRef::client(pid_), "serve.enqueue", {{"req", r.id}});
  kick();
}

void ServeEngine::adopt(const RequestSpec& r, const recovery::RequestState& state) {
  Req q;
  q.spec = r;
  q.prompt_hash = ToyGenerator::hash_prompt(r.prompt);
  q.phase = Phase::decoding;
  q.prefilled = r.prompt.size();
  q.blocks = state.blocks;
  q.tokens = state.tokens;
  q.published_blocks = q.blocks.size();
  q.published_tokens = q.tokens.size();
  q.in_snapshot = true;
  for (BlockId b : q.blocks) {
    if (free_.erase(b) == 0) fail(ErrorCode::invalid_argument, "adopted block " + std::to_string(b) + " not free");
  }
  if (!reqs_.emplace(r.id, std::move(q)).second) {
    fail(ErrorCode::invalid_argument, "request adopted twice: " + std::to_string(r.id));
  }
  w_.kernel().emit(sim::EntityRef::client(pid_), "serve.adopt",
                   {{"req", r.id}, {"progress", state.progress}, {"blocks", state.blocks.size()}});
  kick();
}

void ServeEngine::kick() {
  if (running_) return;
  running_ = true;
  w_.kernel().schedule(0, sim::EntityRef::client(pid_), "serve.step", [this] { step(); });
}

VirtAddr ServeEngine::slot_va(const Req& r, std::uint64_t pos) const {
  const auto bs = static_cast<std::uint64_t>(w_.params().kv_block_size);
  const auto block_bytes = static_cast<std::uint64_t>(w_.params().kv_block_pages) * kPageSize;
  const BlockId b = r.blocks[pos / bs];
  return kv_base_ + b * block_bytes + (pos % bs) * 8;
}

void ServeEngine::step() {
  bool prefill = false;
  bool decode = false;
  for (auto& [id, r] : reqs_) {
    if (r.phase == Phase::queued) r.phase = Phase::prefilling;
    prefill = prefill || r.phase == Phase::prefilling;
    decode = decode || r.phase == Phase::decoding;
  }
  if (!prefill && !decode) {
    running_ = false;
    return;
  }
  ++steps_;
  // KV stores go out ahead of the step's compute: the store for a decoding
  // request lands in the slot of its newest cached token.
  for (auto& [id, r] : reqs_) {
    if (r.phase != Phase::decoding || r.blocks.empty()) continue;
    const std::uint64_t pos = r.spec.prompt.size() + r.tokens.size() - 1;
    const std::uint64_t value = sim::mix64(id ^ (pos << 20) ^ (r.tokens.empty() ? 0 : r.tokens.back()));
    w_.kernel_access(pid_, slot_va(r, pos), AccessType::write, value, {});
  }
  const Duration d = prefill ? w_.params().prefill_step_us : w_.params().decode_step_us;
  w_.launch(pid_, d, "serve.step", [this, prefill, decode] { finish_step(prefill, decode); });
}

BlockId ServeEngine::take_block() {
  if (free_.empty()) fail(ErrorCode::kv_pool_exhausted, "pid " + std::to_string(pid_.value));
  const BlockId b = *free_.begin();
  free_.erase(free_.begin());
  return b;
}

void ServeEngine::grow_blocks(Req& r) {
  const auto bs = static_cast<std::uint64_t>(w_.params().kv_block_size);
  const std::uint64_t need = blocks_needed(r.spec.prompt.size() + r.tokens.size(), bs);
  while (r.blocks.size() < need) r.blocks.push_back(take_block());
}

void ServeEngine::finish_step(bool had_prefill, bool had_decode) {
  const auto chunk = static_cast<std::uint64_t>(w_.params().prefill_chunk_tokens);
  bool prefill_completed = false;
  std::vector<RequestId> finished;
  for (auto& [id, r] : reqs_) {
    if (r.phase == Phase::prefilling) {
      r.prefilled = std::min<std::uint64_t>(r.prefilled + chunk, r.spec.prompt.size());
      if (r.prefilled == r.spec.prompt.size()) {
        r.phase = Phase::decoding;
        r.in_snapshot = true;
        grow_blocks(r);
        prefill_completed = true;
      }
    } else if (r.phase == Phase::decoding) {
      const std::uint64_t pos = r.tokens.size();
      const Token tok = gen_.next(id, pos, r.prompt_hash);
      r.tokens.push_back(tok);
      grow_blocks(r);
      frontend_.on_token(pid_, id, pos, tok);
      if (r.tokens.size() == r.spec.max_new_tokens) {
        r.phase = Phase::done;
        finished.push_back(id);
      }
    }
  }
  if (had_decode) ++decode_steps_;
  for (RequestId id : finished) {
    Req& r = reqs_.at(id);
    for (BlockId b : r.blocks) free_.insert(b);
    frontend_.on_complete(id, r.tokens);
  }
  w_.kernel().emit(sim::EntityRef::client(pid_), "serve.step",
                   {{"step", steps_}, {"prefill", had_prefill}, {"decode", had_decode}});

  bool published = false;
  const auto n = static_cast<std::uint64_t>(w_.params().sync_interval_N);
  if (sink_ != nullptr && (prefill_completed || (had_decode && decode_steps_ % n == 0))) {
    publish();
    published = true;
  }
  // Finished requests leave the engine once a snapshot has carried their
  // final delta, or at once when nothing is published.
  if (sink_ == nullptr || published) {
    std::erase_if(reqs_, [](const auto& kv) { return kv.second.phase == Phase::done; });
  }
  for (const auto& l : step_listeners_) l(steps_);
  const Duration delay = published ? w_.params().sync_latency_us : 0;
  w_.kernel().schedule(delay, sim::EntityRef::client(pid_), "serve.step", [this] { step(); });
}

void ServeEngine::publish() {
  std::vector<recovery::ForwardSnapshot> deltas;
  for (auto& [id, r] : reqs_) {
    if (!r.in_snapshot) continue;
    recovery::ForwardSnapshot s;
    s.request_id = id;
    s.kv_block_ids_delta.assign(r.blocks.begin() + static_cast<std::ptrdiff_t>(r.published_blocks), r.blocks.end());
    s.token_delta.assign(r.tokens.begin() + static_cast<std::ptrdiff_t>(r.published_tokens), r.tokens.end());
    s.progress = r.tokens.size();
    s.done = r.phase == Phase::done;
    r.published_blocks = r.blocks.size();
    r.published_tokens = r.tokens.size();
    deltas.push_back(std::move(s));
  }
  ++publishes_;
  sink_->publish(pid_, std::move(deltas));
}

}  // namespace mpssim::workload
