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

#include "doctest.h"

#include <random>

#include "mpssim/mem/gpu_mem.hpp"
#include "mpssim/sim/kernel.hpp"

using namespace mpssim;
using mem::GpuMemory;

namespace {

struct Fixture {
  sim::Kernel k{sim::SimParams{}};
  GpuMemory m{k};
  const Pid pid{1};
  const ContextId space{1};

  bool hit(VirtAddr va, AccessType a = AccessType::read, EngineClass e = EngineClass::sm) const {
    return std::holds_alternative<mem::Hit>(m.resolve_va(space, va, a, e, std::nullopt));
  }
};

}  // namespace

TEST_CASE("page pool accounting matches a running total") {
  mem::PagePool pool(1000);
  std::mt19937_64 rng(3);
  std::vector<std::pair<std::uint64_t, std::vector<mem::PageExtent>>> live;
  std::uint64_t used = 0;
  for (int i = 0; i < 2000; ++i) {
    if (live.empty() || rng() % 2 == 0) {
      const std::uint64_t n = 1 + rng() % 64;
      auto got = pool.allocate(n);
      if (used + n > 1000) {
        CHECK_FALSE(got.has_value());
        continue;
      }
      REQUIRE(got.has_value());
      std::uint64_t sum = 0;
      for (const auto& e : *got) sum += e.count;
      CHECK(sum == n);
      used += n;
      live.emplace_back(n, *got);
    } else {
      const std::size_t idx = rng() % live.size();
      pool.release(live[idx].second);
      used -= live[idx].first;
      live.erase(live.begin() + static_cast<std::ptrdiff_t>(idx));
    }
    CHECK(pool.used() == used);
  }
}

TEST_CASE("device allocations are populated and honour protection") {
  Fixture f;
  const RangeId r = f.m.alloc_device(f.pid, f.space, 3 * kPageSize);
  const VirtAddr base = f.m.range(r).base;
  CHECK(f.hit(base));
  CHECK(f.hit(base + 2 * kPageSize + 8, AccessType::write));
  CHECK_FALSE(f.hit(base + 3 * kPageSize));
  f.m.set_access(r, mem::Protection::read_only);
  CHECK(f.hit(base));
  CHECK_FALSE(f.hit(base, AccessType::write));
}

TEST_CASE("managed pages fault until serviced, then migrate on host writes") {
  Fixture f;
  const RangeId r = f.m.alloc_managed(f.pid, f.space, 2 * kPageSize);
  const VirtAddr base = f.m.range(r).base;
  CHECK_FALSE(f.hit(base));
  const auto before = f.m.pool().used();
  f.m.service_fault(f.space, base);
  CHECK(f.hit(base));
  CHECK(f.m.pool().used() == before + 1);
  f.m.gpu_write(f.space, base, 99);
  const auto tag = f.m.gpu_read_tag(f.space, base);
  f.m.host_write(r, 8, 5);
  CHECK_FALSE(f.hit(base));
  CHECK(f.m.pool().used() == before);
  f.m.service_fault(f.space, base);
  CHECK(f.hit(base));
  CHECK(f.m.gpu_read_tag(f.space, base) != tag);
}

TEST_CASE("zombie ranges cannot be serviced or written by the host") {
  Fixture f;
  const RangeId r = f.m.alloc_managed(f.pid, f.space, kPageSize);
  f.m.service_fault(f.space, f.m.range(r).base);
  f.m.make_zombie(r);
  CHECK_FALSE(f.hit(f.m.range(r).base));
  CHECK_THROWS_AS(f.m.host_write(r, 0, 1), Error);
  CHECK_THROWS_AS(f.m.make_zombie(r), Error);
  const RangeId d = f.m.alloc_device(f.pid, f.space, kPageSize);
  CHECK_THROWS_AS(f.m.make_zombie(d), Error);
}

TEST_CASE("aliased VMM allocations live until the last mapping goes") {
  Fixture f;
  const ContextId other{2};
  const auto [h, r1] = f.m.vmm_create_map(f.pid, f.space, 4 * kPageSize);
  const auto* a = f.m.allocation(h);
  REQUIRE(a != nullptr);
  CHECK(a->handle_refs == 0);
  CHECK(a->refcount() == 1);
  const auto used = f.m.pool().used();
  const RangeId r2 = f.m.vmm_map(Pid(2), other, h);
  CHECK(f.m.allocation(h)->refcount() == 2);
  CHECK(f.m.pool().used() == used);

  f.m.host_write(r1, 0, 1234);
  const auto tag = f.m.gpu_read_tag(f.space, f.m.range(r1).base);
  CHECK(f.m.gpu_read_tag(other, f.m.range(r2).base) == tag);

  f.m.release_process(f.pid);
  REQUIRE(f.m.allocation(h) != nullptr);
  CHECK(f.m.allocation(h)->refcount() == 1);
  CHECK(f.m.gpu_read_tag(other, f.m.range(r2).base) == tag);

  f.m.release_range(r2);
  CHECK(f.m.allocation(h) == nullptr);
  CHECK(f.m.pool().used() == used - 4);
}

TEST_CASE("process reservations count once and are released with the process") {
  Fixture f;
  const auto base = f.m.footprint_pages();
  f.m.reserve_process(f.pid, 100);
  CHECK(f.m.footprint_pages() == base + 100);
  f.m.release_process(f.pid);
  CHECK(f.m.footprint_pages() == base);
}

TEST_CASE("M1 backs an unmapped page with the shared dummy page") {
  Fixture f;
  const VirtAddr va = 0x7f0000000000ull + 123;
  CHECK_FALSE(f.hit(va));
  const auto used = f.m.pool().used();
  f.m.redirect_unmapped(f.pid, f.space, va);
  f.m.service_fault(f.space, va);
  CHECK(f.hit(va));
  CHECK(f.hit(va, AccessType::write));
  CHECK(f.m.pool().used() == used);
  CHECK(f.m.range(f.m.find_range(f.space, va)->id).page_count() == 1);
}

TEST_CASE("M2 swaps a managed page onto the dummy page read-write") {
  Fixture f;
  const RangeId r = f.m.alloc_managed(f.pid, f.space, 2 * kPageSize);
  const VirtAddr base = f.m.range(r).base;
  f.m.service_fault(f.space, base);
  f.m.advise_read_only(r);
  CHECK_FALSE(f.hit(base, AccessType::write));
  const auto used = f.m.pool().used();
  f.m.redirect_managed(f.space, base);
  f.m.service_fault(f.space, base);
  CHECK(f.hit(base, AccessType::write));
  CHECK(f.m.pool().used() == used - 1);
  CHECK(f.m.chunk(f.m.dummy_pool().page_4k).users == 1);
}

TEST_CASE("M3 replaces an external range and maps the faulting 2 MiB block to dummy pages") {
  Fixture f;
  const auto [h, r] = f.m.vmm_create_map(f.pid, f.space, kBigChunkSize + 4 * kPageSize);
  const VirtAddr base = f.m.range(r).base;
  f.m.set_access(r, mem::Protection::read_only);
  CHECK_FALSE(f.hit(base + 8, AccessType::write));
  const auto before = f.m.footprint_pages();
  const RangeId nr = f.m.redirect_external(f.space, base + 8);
  CHECK(f.m.range(nr).kind == mem::RangeKind::managed);
  CHECK(f.m.allocation(h) == nullptr);
  CHECK(f.m.footprint_pages() == before - f.m.range(nr).page_count());
  f.m.service_fault(f.space, base + 8);
  CHECK(f.hit(base + 8, AccessType::write));
  CHECK(f.m.chunk(f.m.dummy_pool().chunk_2m).users == kPagesPerBigChunk);
}

TEST_CASE("running out of physical pages is an error, not a partial allocation") {
  sim::SimParams p;
  p.gpu_pages = 600;
  sim::Kernel k(p);
  GpuMemory m(k);
  const auto used = m.pool().used();
  try {
    m.alloc_device(Pid(1), ContextId(1), 200 * kPageSize);
    FAIL("expected out of pages");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::out_of_physical_pages);
  }
  CHECK(m.pool().used() == used);
}
