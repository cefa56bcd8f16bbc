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

#include "mpssim/mem/gpu_mem.hpp"

#include <algorithm>

namespace mpssim::mem {
namespace {

constexpr std::uint64_t align_up(std::uint64_t v, std::uint64_t a) { return (v + a - 1) / a * a; }

std::uint64_t pages_for(std::uint64_t bytes) {
  if (bytes == 0) fail(ErrorCode::invalid_size, "zero-byte allocation");
  return (bytes + kPageSize - 1) / kPageSize;
}

std::uint64_t fold_write(std::uint64_t tag, std::uint64_t offset, std::uint64_t value) {
  return sim::mix64(tag ^ sim::mix64(offset * 0x100000001b3ull ^ value));
}

std::uint64_t page_at(const std::vector<PageExtent>& extents, std::uint64_t index) {
  for (const auto& e : extents) {
    if (index < e.count) return e.first + index;
    index -= e.count;
  }
  MPSSIM_ASSERT(false, "page index beyond extents");
  return 0;
}

sim::EntityRef range_ref(RangeId r) { return sim::EntityRef::of(sim::EntityKind::range, r.value); }
sim::EntityRef alloc_ref(AllocHandle h) { return sim::EntityRef::of(sim::EntityKind::alloc, h.value); }

}  // namespace

std::string_view to_string(RangeKind k) { return k == RangeKind::managed ? "managed" : "external"; }

std::string_view to_string(Residency r) {
  switch (r) {
    case Residency::unpopulated: return "unpopulated";
    case Residency::cpu: return "cpu";
    case Residency::gpu: return "gpu";
  }
  return "?";
}

std::string_view to_string(Protection p) { return p == Protection::read_only ? "ro" : "rw"; }

PagePool::PagePool(std::uint64_t total_pages) : total_(total_pages) {
  if (total_pages > 0) free_.emplace(0, total_pages);
}

std::optional<std::vector<PageExtent>> PagePool::allocate(std::uint64_t pages) {
  if (pages > free_pages()) return std::nullopt;
  std::vector<PageExtent> out;
  std::uint64_t need = pages;
  while (need > 0) {
    auto it = free_.begin();
    const std::uint64_t take = std::min(need, it->second);
    out.push_back({it->first, take});
    if (take == it->second) {
      free_.erase(it);
    } else {
      auto node = free_.extract(it);
      node.key() += take;
      node.mapped() -= take;
      free_.insert(std::move(node));
    }
    need -= take;
  }
  used_ += pages;
  return out;
}

void PagePool::release(const std::vector<PageExtent>& extents) {
  for (const auto& e : extents) {
    MPSSIM_ASSERT(e.count > 0 && e.first + e.count <= total_, "extent outside pool");
    auto [it, inserted] = free_.emplace(e.first, e.count);
    MPSSIM_ASSERT(inserted, "double free of physical pages");
    if (auto next = std::next(it); next != free_.end()) {
      MPSSIM_ASSERT(it->first + it->second <= next->first, "freed extent overlaps free space");
      if (it->first + it->second == next->first) {
        it->second += next->second;
        free_.erase(next);
      }
    }
    if (it != free_.begin()) {
      auto prev = std::prev(it);
      MPSSIM_ASSERT(prev->first + prev->second <= it->first, "freed extent overlaps free space");
      if (prev->first + prev->second == it->first) {
        prev->second += it->second;
        free_.erase(it);
      }
    }
    used_ -= e.count;
  }
}

GpuMemory::GpuMemory(sim::Kernel& k)
    : k_(k), pool_(static_cast<std::uint64_t>(k.params().gpu_pages)) {
  dummy_.page_4k = new_chunk(1, ChunkSource::dummy_pool);
  dummy_.chunk_2m = new_chunk(kPagesPerBigChunk, ChunkSource::dummy_pool);
  k_.emit(mem_ref(), "mem.dummy_pool", {{"page_4k", dummy_.page_4k}, {"chunk_2m", dummy_.chunk_2m}});
}

std::vector<PageExtent> GpuMemory::take_pages(std::uint64_t pages, std::string_view what) {
  auto ext = pool_.allocate(pages);
  if (!ext) {
    fail(ErrorCode::out_of_physical_pages, std::string(what) + " needs " + std::to_string(pages) +
                                               " pages, " + std::to_string(pool_.free_pages()) + " free");
  }
  return std::move(*ext);
}

AllocHandle GpuMemory::new_allocation(Pid pid, std::uint64_t pages) {
  PhysicalAllocation a;
  a.handle = AllocHandle(next_alloc_);
  a.owner = pid;
  a.pages = pages;
  a.extents = take_pages(pages, "allocation");
  ++next_alloc_;
  const AllocHandle h = a.handle;
  allocs_.emplace(h, std::move(a));
  return h;
}

ChunkId GpuMemory::new_chunk(std::uint64_t pages, ChunkSource source) {
  Chunk c;
  c.id = ChunkId(next_chunk_);
  c.pages = pages;
  c.source = source;
  c.extents = take_pages(pages, "chunk");
  ++next_chunk_;
  const ChunkId id = c.id;
  chunks_.emplace(id, std::move(c));
  return id;
}

VaRange& GpuMemory::new_range(Pid pid, ContextId space, std::uint64_t bytes, RangeKind kind, VirtAddr fixed_base) {
  VaRange r;
  r.id = RangeId(next_range_++);
  r.owner = pid;
  r.space = space;
  r.length = pages_for(bytes) * kPageSize;
  r.kind = kind;
  if (fixed_base != 0) {
    r.base = fixed_base;
  } else {
    r.base = align_up(next_va_, kBigChunkSize);
    next_va_ = align_up(r.base + r.length, kBigChunkSize) + kBigChunkSize;  // guard gap
  }
  if (kind == RangeKind::managed) r.pages.resize(r.page_count());
  auto& index = spaces_[space];
  auto [it, inserted] = index.emplace(r.base, r.id);
  MPSSIM_ASSERT(inserted, "VA range base collision");
  const RangeId id = r.id;
  return ranges_.emplace(id, std::move(r)).first->second;
}

RangeId GpuMemory::alloc_device(Pid pid, ContextId space, std::uint64_t bytes) {
  const std::uint64_t pages = pages_for(bytes);
  const AllocHandle h = new_allocation(pid, pages);
  auto& a = allocs_.at(h);
  a.mappings = 1;
  VaRange& r = new_range(pid, space, bytes, RangeKind::external);
  r.backing = h;
  k_.emit(range_ref(r.id), "mem.alloc_device",
          {{"pid", pid}, {"va", r.base}, {"pages", pages}, {"alloc", h}});
  after_mutation();
  return r.id;
}

RangeId GpuMemory::alloc_managed(Pid pid, ContextId space, std::uint64_t bytes, bool driver_internal) {
  VaRange& r = new_range(pid, space, bytes, RangeKind::managed);
  r.driver_internal = driver_internal;
  k_.emit(range_ref(r.id), "mem.alloc_managed",
          {{"pid", pid}, {"va", r.base}, {"pages", r.page_count()}, {"internal", driver_internal}});
  after_mutation();
  return r.id;
}

std::pair<AllocHandle, RangeId> GpuMemory::vmm_create_map(Pid pid, ContextId space, std::uint64_t bytes) {
  const std::uint64_t pages = pages_for(bytes);
  const AllocHandle h = new_allocation(pid, pages);
  allocs_.at(h).mappings = 1;
  VaRange& r = new_range(pid, space, bytes, RangeKind::external);
  r.backing = h;
  k_.emit(range_ref(r.id), "mem.vmm_create_map",
          {{"pid", pid}, {"va", r.base}, {"pages", pages}, {"alloc", h}});
  after_mutation();
  return {h, r.id};
}

RangeId GpuMemory::vmm_map(Pid pid, ContextId space, AllocHandle handle) {
  auto it = allocs_.find(handle);
  if (it == allocs_.end()) fail(ErrorCode::unknown_handle, "handle " + std::to_string(handle.value));
  PhysicalAllocation& a = it->second;
  VaRange& r = new_range(pid, space, a.pages * kPageSize, RangeKind::external);
  r.backing = handle;
  ++a.mappings;
  k_.emit(range_ref(r.id), "mem.vmm_map",
          {{"pid", pid}, {"va", r.base}, {"alloc", handle}, {"refcount", a.refcount()}});
  after_mutation();
  return r.id;
}

AllocHandle GpuMemory::reserve_process(Pid pid, std::uint64_t pages) {
  const AllocHandle h = new_allocation(pid, pages);
  allocs_.at(h).handle_refs = 1;
  k_.emit(alloc_ref(h), "mem.reserve", {{"pid", pid}, {"pages", pages}});
  after_mutation();
  return h;
}

VaRange& GpuMemory::mutable_range(RangeId r) {
  auto it = ranges_.find(r);
  if (it == ranges_.end()) fail(ErrorCode::unknown_range, "range " + std::to_string(r.value));
  return it->second;
}

const VaRange& GpuMemory::range(RangeId r) const {
  auto it = ranges_.find(r);
  if (it == ranges_.end()) fail(ErrorCode::unknown_range, "range " + std::to_string(r.value));
  return it->second;
}

void GpuMemory::set_access(RangeId id, Protection p) {
  VaRange& r = mutable_range(id);
  if (r.lifecycle != Lifecycle::live) fail(ErrorCode::range_not_live, "set_access on zombie range");
  if (r.kind == RangeKind::external) {
    r.protection = p;
  } else {
    for (auto& pg : r.pages) pg.protection = p;
  }
  k_.emit(range_ref(id), "mem.set_access", {{"prot", to_string(p)}});
  after_mutation();
}

void GpuMemory::make_zombie(RangeId id) {
  VaRange& r = mutable_range(id);
  if (r.kind != RangeKind::managed) fail(ErrorCode::kind_mismatch, "make_zombie needs a managed range");
  if (r.lifecycle != Lifecycle::live) fail(ErrorCode::range_not_live, "range is already a zombie");
  for (auto& pg : r.pages) {
    if (pg.chunk.valid()) drop_chunk_user(pg.chunk);
    pg = ManagedPage{Residency::unpopulated, pg.protection, ChunkId{}, 0};
  }
  r.lifecycle = Lifecycle::zombie;
  k_.emit(range_ref(id), "mem.make_zombie");
  after_mutation();
}

void GpuMemory::pin_non_migratable(RangeId id) {
  VaRange& r = mutable_range(id);
  if (r.kind != RangeKind::managed) fail(ErrorCode::kind_mismatch, "pin_non_migratable needs a managed range");
  if (r.lifecycle != Lifecycle::live) fail(ErrorCode::range_not_live, "pin on zombie range");
  for (auto& pg : r.pages) {
    if (pg.chunk.valid()) {
      pg.cpu_tag = chunks_.at(pg.chunk).content_tag;
      drop_chunk_user(pg.chunk);
      pg.chunk = ChunkId{};
    }
    pg.residency = Residency::cpu;
  }
  r.migratable = false;
  k_.emit(range_ref(id), "mem.pin_host");
  after_mutation();
}

void GpuMemory::host_write(RangeId id, std::uint64_t offset, std::uint64_t value) {
  VaRange& r = mutable_range(id);
  if (offset >= r.length) fail(ErrorCode::invalid_argument, "host write beyond range");
  if (r.lifecycle != Lifecycle::live) fail(ErrorCode::range_not_live, "host write to zombie range");
  if (r.kind == RangeKind::external) {
    auto& a = allocs_.at(r.backing);
    a.content_tag = fold_write(a.content_tag, offset, value);
    k_.emit(range_ref(id), "mem.host_write", {{"offset", offset}});
  } else {
    ManagedPage& pg = r.pages[offset / kPageSize];
    if (pg.chunk.valid()) {  // CPU touch migrates the page back to host
      pg.cpu_tag = chunks_.at(pg.chunk).content_tag;
      drop_chunk_user(pg.chunk);
      pg.chunk = ChunkId{};
    }
    pg.residency = Residency::cpu;
    pg.cpu_tag = fold_write(pg.cpu_tag, offset, value);
    k_.emit(range_ref(id), "mem.host_write", {{"offset", offset}, {"residency", "cpu"}});
  }
  after_mutation();
}

const VaRange* GpuMemory::find_range(ContextId space, VirtAddr va) const {
  auto sit = spaces_.find(space);
  if (sit == spaces_.end()) return nullptr;
  auto it = sit->second.upper_bound(va);
  if (it == sit->second.begin()) return nullptr;
  const VaRange& r = ranges_.at(std::prev(it)->second);
  return r.contains(va) ? &r : nullptr;
}

TranslationResult GpuMemory::resolve_va(ContextId space, VirtAddr va, AccessType access, EngineClass engine,
                                        std::optional<ChannelId> channel) const {
  const Miss miss{FaultSeed{va, access, engine, space, channel, std::nullopt}};
  const VaRange* r = find_range(space, va);
  if (r == nullptr) return miss;
  const bool write = access == AccessType::write;
  const std::uint64_t idx = r->page_index(va);
  if (r->kind == RangeKind::external) {
    if (write && r->protection == Protection::read_only) return miss;
    return Hit{page_at(allocs_.at(r->backing).extents, idx)};
  }
  const ManagedPage& pg = r->pages[idx];
  if (pg.residency != Residency::gpu || !pg.chunk.valid()) return miss;
  if (write && pg.protection == Protection::read_only) return miss;
  const Chunk& c = chunks_.at(pg.chunk);
  return Hit{page_at(c.extents, c.pages == 1 ? 0 : (va / kPageSize) % c.pages)};
}

void GpuMemory::gpu_write(ContextId space, VirtAddr va, std::uint64_t value) {
  const VaRange* r = find_range(space, va);
  MPSSIM_ASSERT(r != nullptr, "gpu_write without a translation");
  const std::uint64_t offset = va - r->base;
  if (r->kind == RangeKind::external) {
    auto& a = allocs_.at(r->backing);
    a.content_tag = fold_write(a.content_tag, offset, value);
    k_.emit(range_ref(r->id), "mem.gpu_write", {{"offset", offset}});
    return;
  }
  const ManagedPage& pg = r->pages[r->page_index(va)];
  MPSSIM_ASSERT(pg.residency == Residency::gpu && pg.chunk.valid(), "gpu_write to non-resident page");
  Chunk& c = chunks_.at(pg.chunk);
  if (c.source == ChunkSource::dummy_pool) return;  // dummy pages stay zero
  c.content_tag = fold_write(c.content_tag, offset, value);
  k_.emit(range_ref(r->id), "mem.gpu_write", {{"offset", offset}});
}

std::uint64_t GpuMemory::gpu_read_tag(ContextId space, VirtAddr va) const {
  const VaRange* r = find_range(space, va);
  if (r == nullptr) fail(ErrorCode::unknown_range, "no range at address");
  if (r->kind == RangeKind::external) return allocs_.at(r->backing).content_tag;
  if (r->lifecycle == Lifecycle::zombie && !r->pages[r->page_index(va)].chunk.valid()) {
    fail(ErrorCode::range_not_live, "read of zombie range outside the fault path");
  }
  const ManagedPage& pg = r->pages[r->page_index(va)];
  if (!pg.chunk.valid()) return pg.cpu_tag;
  return chunks_.at(pg.chunk).content_tag;
}

void GpuMemory::service_fault(ContextId space, VirtAddr va) {
  const VaRange* found = find_range(space, va);
  if (found == nullptr) fail(ErrorCode::unknown_range, "service_fault with no range");
  if (found->kind == RangeKind::external) fail(ErrorCode::kind_mismatch, "external ranges are not demand paged");
  VaRange& r = ranges_.at(found->id);
  const std::uint64_t idx = r.page_index(va);
  ManagedPage& pg = r.pages[idx];
  if (pg.chunk.valid()) {
    pg.residency = Residency::gpu;
    k_.emit(range_ref(r.id), "mem.populate", {{"page", idx}, {"chunk", pg.chunk}, {"via", "redirect"}});
    after_mutation();
    return;
  }
  MPSSIM_ASSERT(r.lifecycle == Lifecycle::live && r.migratable, "service_fault on a non-serviceable page");
  const bool migrate = pg.residency == Residency::cpu;
  const ChunkId c = new_chunk(1, ChunkSource::normal_pool);
  Chunk& ch = chunks_.at(c);
  ch.users = 1;
  ch.content_tag = migrate ? pg.cpu_tag : 0;
  pg.chunk = c;
  pg.residency = Residency::gpu;
  k_.emit(range_ref(r.id), migrate ? "mem.migrate" : "mem.populate",
          {{"page", idx}, {"chunk", c}, {"via", "demand"}});
  after_mutation();
}

RangeId GpuMemory::redirect_unmapped(Pid owner, ContextId space, VirtAddr va) {
  MPSSIM_ASSERT(find_range(space, va) == nullptr, "M1 on a mapped address");
  const VirtAddr base = va / kPageSize * kPageSize;
  VaRange& r = new_range(owner, space, kPageSize, RangeKind::managed, base);
  r.pages[0].chunk = dummy_.page_4k;
  ++chunks_.at(dummy_.page_4k).users;
  k_.emit(range_ref(r.id), "mem.redirect", {{"mech", "M1"}, {"va", base}, {"pid", owner}});
  after_mutation();
  return r.id;
}

RangeId GpuMemory::redirect_managed(ContextId space, VirtAddr va) {
  const VaRange* found = find_range(space, va);
  MPSSIM_ASSERT(found != nullptr && found->kind == RangeKind::managed, "M2 needs a managed range");
  VaRange& r = ranges_.at(found->id);
  const std::uint64_t idx = r.page_index(va);
  ManagedPage& pg = r.pages[idx];
  if (pg.chunk.valid()) drop_chunk_user(pg.chunk);  // original chunk freed in the same pass
  pg.chunk = dummy_.page_4k;
  pg.protection = Protection::read_write;
  ++chunks_.at(dummy_.page_4k).users;
  k_.emit(range_ref(r.id), "mem.redirect", {{"mech", "M2"}, {"page", idx}});
  after_mutation();
  return r.id;
}

RangeId GpuMemory::redirect_external(ContextId space, VirtAddr va) {
  const VaRange* found = find_range(space, va);
  MPSSIM_ASSERT(found != nullptr && found->kind == RangeKind::external, "M3 needs an external range");
  const Pid owner = found->owner;
  const VirtAddr base = found->base;
  const std::uint64_t length = found->length;
  const RangeId old = found->id;
  release_range(old);
  VaRange& r = new_range(owner, space, length, RangeKind::managed, base);
  const VirtAddr block = va / kBigChunkSize * kBigChunkSize;
  std::uint64_t installed = 0;
  for (std::uint64_t i = 0; i < r.page_count(); ++i) {
    const VirtAddr pva = base + i * kPageSize;
    if (pva >= block && pva < block + kBigChunkSize) {
      r.pages[i].chunk = dummy_.chunk_2m;
      ++installed;
    }
  }
  chunks_.at(dummy_.chunk_2m).users += static_cast<std::uint32_t>(installed);
  k_.emit(range_ref(r.id), "mem.redirect", {{"mech", "M3"}, {"replaces", old}, {"pages", installed}});
  after_mutation();
  return r.id;
}

void GpuMemory::drop_chunk_user(ChunkId id) {
  Chunk& c = chunks_.at(id);
  MPSSIM_ASSERT(c.users > 0, "chunk user underflow");
  --c.users;
  if (c.users == 0 && c.source == ChunkSource::normal_pool) {
    pool_.release(c.extents);
    chunks_.erase(id);
  }
}

void GpuMemory::free_allocation_if_unreferenced(AllocHandle h) {
  auto it = allocs_.find(h);
  if (it->second.refcount() > 0) return;
  pool_.release(it->second.extents);
  k_.emit(alloc_ref(h), "mem.free", {{"pages", it->second.pages}});
  allocs_.erase(it);
}

void GpuMemory::drop_mapping(AllocHandle h) {
  auto& a = allocs_.at(h);
  MPSSIM_ASSERT(a.mappings > 0, "mapping underflow");
  --a.mappings;
  free_allocation_if_unreferenced(h);
}

void GpuMemory::release_range(RangeId id) {
  VaRange& r = mutable_range(id);
  if (r.kind == RangeKind::external) {
    const AllocHandle h = r.backing;
    k_.emit(range_ref(id), "mem.release_range",
            {{"alloc", h}, {"refcount", allocs_.at(h).refcount() - 1}});
    spaces_.at(r.space).erase(r.base);
    ranges_.erase(id);
    drop_mapping(h);
  } else {
    for (auto& pg : r.pages) {
      if (pg.chunk.valid()) drop_chunk_user(pg.chunk);
    }
    k_.emit(range_ref(id), "mem.release_range");
    spaces_.at(r.space).erase(r.base);
    ranges_.erase(id);
  }
  after_mutation();
}

void GpuMemory::release_handle(AllocHandle h) {
  auto it = allocs_.find(h);
  if (it == allocs_.end() || it->second.handle_refs == 0) {
    fail(ErrorCode::unknown_handle, "handle " + std::to_string(h.value));
  }
  --it->second.handle_refs;
  k_.emit(alloc_ref(h), "mem.release_handle", {{"refcount", it->second.refcount()}});
  free_allocation_if_unreferenced(h);
  after_mutation();
}

void GpuMemory::release_process(Pid pid) {
  for (RangeId r : ranges_of(pid)) release_range(r);
  std::vector<AllocHandle> held;
  for (const auto& [h, a] : allocs_) {
    if (a.owner == pid && a.handle_refs > 0) held.push_back(h);
  }
  for (AllocHandle h : held) {
    while (allocs_.count(h) != 0 && allocs_.at(h).handle_refs > 0) release_handle(h);
  }
}

std::uint64_t GpuMemory::footprint_pages() const {
  return pool_.used() - chunk(dummy_.page_4k).pages - chunk(dummy_.chunk_2m).pages;
}

std::vector<RangeId> GpuMemory::ranges_of(Pid pid) const {
  std::vector<RangeId> out;
  for (const auto& [id, r] : ranges_) {
    if (r.owner == pid) out.push_back(id);
  }
  return out;
}

const PhysicalAllocation* GpuMemory::allocation(AllocHandle h) const {
  auto it = allocs_.find(h);
  return it == allocs_.end() ? nullptr : &it->second;
}

const Chunk& GpuMemory::chunk(ChunkId c) const {
  auto it = chunks_.find(c);
  MPSSIM_ASSERT(it != chunks_.end(), "unknown chunk");
  return it->second;
}

void GpuMemory::after_mutation() const {
  if (k_.params().check_invariants) check_invariants();
}

void GpuMemory::check_invariants() const {
  std::uint64_t counted = 0;
  std::map<AllocHandle, std::uint32_t> mappings;
  std::map<ChunkId, std::uint32_t> users;
  for (const auto& [id, r] : ranges_) {
    MPSSIM_ASSERT(r.length > 0 && r.length % kPageSize == 0, "range length not page granular");
    if (r.kind == RangeKind::external) {
      MPSSIM_ASSERT(r.pages.empty(), "external range carries page records");
      MPSSIM_ASSERT(allocs_.count(r.backing) != 0, "external range without backing");
      ++mappings[r.backing];
      continue;
    }
    MPSSIM_ASSERT(r.pages.size() == r.page_count(), "managed page table size");
    for (const auto& pg : r.pages) {
      if (pg.residency == Residency::gpu) MPSSIM_ASSERT(pg.chunk.valid(), "gpu-resident page without chunk");
      if (pg.chunk.valid()) {
        MPSSIM_ASSERT(chunks_.count(pg.chunk) != 0, "page references a freed chunk");
        MPSSIM_ASSERT(pg.residency == Residency::gpu || chunks_.at(pg.chunk).source == ChunkSource::dummy_pool,
                      "non-resident page holds a normal chunk");
        ++users[pg.chunk];
      }
    }
  }
  for (const auto& [h, a] : allocs_) {
    MPSSIM_ASSERT(a.refcount() > 0, "live allocation with zero refcount");
    auto it = mappings.find(h);
    MPSSIM_ASSERT(a.mappings == (it == mappings.end() ? 0u : it->second), "allocation mapping count drift");
    std::uint64_t n = 0;
    for (const auto& e : a.extents) n += e.count;
    MPSSIM_ASSERT(n == a.pages, "allocation extents disagree with size");
    counted += a.pages;
  }
  for (const auto& [id, c] : chunks_) {
    auto it = users.find(id);
    MPSSIM_ASSERT(c.users == (it == users.end() ? 0u : it->second), "chunk user count drift");
    if (c.source == ChunkSource::dummy_pool) {
      MPSSIM_ASSERT(c.content_tag == 0, "dummy chunk holds data");
    } else {
      MPSSIM_ASSERT(c.users > 0, "orphan normal chunk");
    }
    counted += c.pages;
  }
  MPSSIM_ASSERT(counted == pool_.used(), "physical page conservation broken");
}

}  // namespace mpssim::mem
