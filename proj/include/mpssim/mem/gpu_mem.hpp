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
#include <map>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "mpssim/common.hpp"
#include "mpssim/fault_seed.hpp"
#include "mpssim/sim/kernel.hpp"

namespace mpssim::mem {

/// A run of contiguous physical pages.
struct PageExtent {
  std::uint64_t first = 0;
  std::uint64_t count = 0;
  bool operator==(const PageExtent&) const = default;
};

/// First-fit allocator over the GPU's physical pages. Freed extents coalesce
/// with their neighbours.
class PagePool {
 public:
  explicit PagePool(std::uint64_t total_pages);

  /// nullopt when fewer than `pages` pages are free; the pool is unchanged.
  std::optional<std::vector<PageExtent>> allocate(std::uint64_t pages);
  void release(const std::vector<PageExtent>& extents);

  std::uint64_t total() const { return total_; }
  std::uint64_t used() const { return used_; }
  std::uint64_t free_pages() const { return total_ - used_; }

 private:
  std::map<std::uint64_t, std::uint64_t> free_;  // first page -> count
  std::uint64_t total_;
  std::uint64_t used_ = 0;
};

enum class RangeKind : std::uint8_t { managed, external };
enum class Residency : std::uint8_t { unpopulated, cpu, gpu };
enum class Protection : std::uint8_t { read_only, read_write };
enum class Lifecycle : std::uint8_t { live, zombie };
enum class ChunkSource : std::uint8_t { normal_pool, dummy_pool };

std::string_view to_string(RangeKind k);
std::string_view to_string(Residency r);
std::string_view to_string(Protection p);

struct PhysicalAllocation {
  AllocHandle handle;
  Pid owner;
  std::uint64_t pages = 0;
  std::vector<PageExtent> extents;
  std::uint32_t handle_refs = 0;
  std::uint32_t mappings = 0;
  std::uint64_t content_tag = 0;

  std::uint32_t refcount() const { return handle_refs + mappings; }
};

struct Chunk {
  ChunkId id;
  std::uint64_t pages = 0;
  ChunkSource source = ChunkSource::normal_pool;
  std::vector<PageExtent> extents;
  std::uint64_t content_tag = 0;
  std::uint32_t users = 0;  // managed page slots backed by this chunk
};

struct ManagedPage {
  Residency residency = Residency::unpopulated;
  Protection protection = Protection::read_write;
  ChunkId chunk;  // GPU backing, valid iff residency == gpu
  std::uint64_t cpu_tag = 0;
};

struct VaRange {
  RangeId id;
  Pid owner;
  ContextId space;
  VirtAddr base = 0;
  std::uint64_t length = 0;
  RangeKind kind = RangeKind::managed;
  Lifecycle lifecycle = Lifecycle::live;
  bool migratable = true;
  bool driver_internal = false;

  // external ranges
  Protection protection = Protection::read_write;
  AllocHandle backing;

  // managed ranges
  std::vector<ManagedPage> pages;

  std::uint64_t page_count() const { return length / kPageSize; }
  bool contains(VirtAddr va) const { return va >= base && va - base < length; }
  std::uint64_t page_index(VirtAddr va) const { return (va - base) / kPageSize; }
};

struct DummyPool {
  ChunkId page_4k;
  ChunkId chunk_2m;
};

struct Hit {
  std::uint64_t physical_page = 0;
};
struct Miss {
  FaultSeed seed;
};
using TranslationResult = std::variant<Hit, Miss>;

/// Physical pages, VA ranges, and the driver-global dummy pool of one GPU.
/// Address spaces are keyed by context id; every client of an MPS session
/// shares the server's context and therefore its address space.
class GpuMemory {
 public:
  explicit GpuMemory(sim::Kernel& k);

  // cudaMalloc: external range, fully populated, read-write.
  RangeId alloc_device(Pid pid, ContextId space, std::uint64_t bytes);
  // cudaMallocManaged: managed range, all pages unpopulated.
  RangeId alloc_managed(Pid pid, ContextId space, std::uint64_t bytes, bool driver_internal = false);
  // cuMemCreate + cuMemMap. The creation handle is released once mapped.
  std::pair<AllocHandle, RangeId> vmm_create_map(Pid pid, ContextId space, std::uint64_t bytes);
  // cuMemMap of an existing (possibly foreign) handle.
  RangeId vmm_map(Pid pid, ContextId space, AllocHandle handle);
  // Per-process driver reservation; held by handle, never mapped.
  AllocHandle reserve_process(Pid pid, std::uint64_t pages);

  void set_access(RangeId r, Protection p);
  void advise_read_only(RangeId r) { set_access(r, Protection::read_only); }
  void make_zombie(RangeId r);
  void pin_non_migratable(RangeId r);

  /// CPU store into a managed page, or into an external range's allocation.
  void host_write(RangeId r, std::uint64_t offset, std::uint64_t value);

  /// Pure lookup; never mutates.
  TranslationResult resolve_va(ContextId space, VirtAddr va, AccessType access, EngineClass engine,
                               std::optional<ChannelId> channel) const;

  /// Applies a GPU store that resolve_va reported as a Hit. Stores to
  /// dummy-pool backing are discarded.
  void gpu_write(ContextId space, VirtAddr va, std::uint64_t value);

  /// Demand paging: populate or migrate the page containing `va`. Pages that
  /// already carry a chunk (a redirected dummy) only flip residency. Throws
  /// KindMismatch on external ranges and OutOfPhysicalPages when the pool is
  /// dry.
  void service_fault(ContextId space, VirtAddr va);

  // Isolation redirection. Each returns the range that now covers `va`.
  RangeId redirect_unmapped(Pid owner, ContextId space, VirtAddr va);  // M1
  RangeId redirect_managed(ContextId space, VirtAddr va);              // M2
  RangeId redirect_external(ContextId space, VirtAddr va);             // M3

  void release_range(RangeId r);
  void release_handle(AllocHandle h);
  /// Releases every range and handle owned by pid.
  void release_process(Pid pid);

  const VaRange* find_range(ContextId space, VirtAddr va) const;
  const VaRange& range(RangeId r) const;
  bool has_range(RangeId r) const { return ranges_.count(r) != 0; }
  const PhysicalAllocation* allocation(AllocHandle h) const;
  const Chunk& chunk(ChunkId c) const;
  const DummyPool& dummy_pool() const { return dummy_; }
  const PagePool& pool() const { return pool_; }
  std::vector<RangeId> ranges_of(Pid pid) const;
  /// Physical pages in use, not counting the driver's dummy pool.
  std::uint64_t footprint_pages() const;

  /// Content checksum visible at `va` from the GPU: 0 on dummy-pool backing.
  std::uint64_t gpu_read_tag(ContextId space, VirtAddr va) const;

  /// Throws std::logic_error when the page accounting disagrees with the
  /// allocation and chunk tables.
  void check_invariants() const;

 private:
  VaRange& mutable_range(RangeId r);
  VaRange& new_range(Pid pid, ContextId space, std::uint64_t bytes, RangeKind kind, VirtAddr fixed_base = 0);
  std::vector<PageExtent> take_pages(std::uint64_t pages, std::string_view what);
  AllocHandle new_allocation(Pid pid, std::uint64_t pages);
  ChunkId new_chunk(std::uint64_t pages, ChunkSource source);
  void drop_chunk_user(ChunkId c);
  void drop_mapping(AllocHandle h);
  void free_allocation_if_unreferenced(AllocHandle h);
  void after_mutation() const;
  sim::EntityRef mem_ref() const { return sim::EntityRef::of(sim::EntityKind::memory); }

  sim::Kernel& k_;
  PagePool pool_;
  DummyPool dummy_;
  std::map<AllocHandle, PhysicalAllocation> allocs_;
  std::map<ChunkId, Chunk> chunks_;
  std::map<RangeId, VaRange> ranges_;
  std::map<ContextId, std::map<VirtAddr, RangeId>> spaces_;  // base -> range
  VirtAddr next_va_ = 0x100000000ull;
  std::uint64_t next_alloc_ = 1;
  std::uint64_t next_chunk_ = 1;
  std::uint64_t next_range_ = 1;
};

}  // namespace mpssim::mem
