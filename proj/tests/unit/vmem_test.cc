/*
 *    Copyright 2026 The tracesim Contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <catch_amalgamated.hpp>

#include <random>
#include <set>

#include "test_support.h"
#include "tracesim/vmem.h"

using namespace tracesim;
using namespace tracesim::test;

TEST_CASE("frame permutation is a bijection", "[vmem][property]")
{
  for (uint64_t seed : {0ULL, 1ULL, 0xDEADBEEFULL}) {
    for (unsigned bits : {1u, 5u, 12u}) {
      FramePermutation perm{bits, seed};
      std::set<uint64_t> image;
      for (uint64_t x = 0; x < (uint64_t{1} << bits); ++x) {
        auto y = perm(x);
        CHECK(y < (uint64_t{1} << bits));
        image.insert(y);
      }
      CHECK(image.size() == (uint64_t{1} << bits));
    }
  }
}

TEST_CASE("first touch mapping is injective and stable", "[vmem]")
{
  PageTable pt{1000, 4096, 4, 7};
  std::mt19937_64 rng{1};
  std::map<std::pair<uint32_t, uint64_t>, uint64_t> seen;
  std::set<uint64_t> frames;
  while (seen.size() < 1000) {
    uint32_t cpu = rng() % 2;
    uint64_t vpage = rng() % 5000;
    auto frame = pt.frame_of(cpu, vpage);
    CHECK(frame < 1000);
    auto [it, fresh] = seen.try_emplace({cpu, vpage}, frame);
    if (fresh)
      CHECK(frames.insert(frame).second);
    else
      CHECK(it->second == frame);
  }
  CHECK(pt.mapped_pages() == 1000);
  CHECK_THROWS_AS(pt.frame_of(0, 999999), SimulationError);
}

TEST_CASE("translation keeps the page offset", "[vmem]")
{
  PageTable pt{1 << 16, 4096, 4, 3};
  auto pa = pt.translate(0, 0x12345678);
  CHECK(pa % 4096 == 0x678);
  CHECK(pa / 4096 == pt.frame_of(0, 0x12345));
}

TEST_CASE("mapping depends on the seed and nothing else", "[vmem]")
{
  auto mapping = [](uint64_t seed) {
    PageTable pt{1 << 20, 4096, 4, seed};
    std::vector<uint64_t> frames;
    for (uint64_t v = 0; v < 100; ++v)
      frames.push_back(pt.frame_of(0, v * 17));
    return frames;
  };
  CHECK(mapping(1) == mapping(1));
  CHECK(mapping(1) != mapping(2));
}

TEST_CASE("neighbouring pages share upper page table entries", "[vmem]")
{
  PageTable pt{1 << 20, 4096, 4, 0};
  const uint64_t a = 0x12345, b = 0x12346;
  for (unsigned level = 1; level <= 3; ++level)
    CHECK(pt.pte_address(0, a, level) == pt.pte_address(0, b, level));
  CHECK(pt.pte_address(0, b, 4) == pt.pte_address(0, a, 4) + 8);
  CHECK(pt.pte_address(0, a, 4) / 64 == pt.pte_address(0, b, 4) / 64);
  // Level 1 entry index is the top 9 bits of the 36-bit vpn.
  CHECK(pt.pte_address(0, uint64_t{1} << 27, 1) == pt.pte_address(0, 0, 1) + 8);
  // Levels and cpus live in separate regions.
  CHECK(pt.pte_address(0, a, 1) != pt.pte_address(0, a, 2));
  CHECK(pt.pte_address(0, a, 1) != pt.pte_address(1, a, 1));
  // Outside the data frames.
  CHECK(pt.pte_address(0, a, 1) >= pt.num_frames() * pt.page_size());
}

TEST_CASE("walker issues one read per level and answers with the frame", "[vmem][ptw]")
{
  PageTable pt{1 << 16, 4096, 4, 5};
  FakeLower l1d;
  Recorder tlb;
  PageTableWalker walker{0, 250, 16, 4, pt};
  walker.set_l1d(&l1d);

  auto request = read_packet(0x7000, &tlb, AccessType::TRANSLATION, 9);
  REQUIRE(walker.add_rq(request));
  auto same_page = read_packet(0x7008, &tlb, AccessType::TRANSLATION, 10);

  for (unsigned level = 1; level <= 4; ++level) {
    walker.tick();
    if (level == 1)
      REQUIRE(walker.add_rq(same_page));
    REQUIRE(l1d.rq.size() == level);
    const auto& read = l1d.rq.back();
    CHECK(read.address == pt.pte_address(0, 7, level));
    CHECK(read.is_page_walk);
    CHECK(read.type == AccessType::READ);
    walker.tick();
    CHECK(l1d.rq.size() == level);
    l1d.respond(walker.now());
  }
  walker.tick();
  REQUIRE(tlb.received.size() == 2);
  CHECK(tlb.received[0].token == 9);
  CHECK(tlb.received[1].token == 10);
  CHECK(tlb.received[0].data == pt.frame_of(0, 7));
  CHECK(walker.walks_completed() == 1);
  CHECK(walker.reads_issued() == 4);
  CHECK(walker.idle());
}

TEST_CASE("walker rejects other cpus and writes", "[vmem][ptw]")
{
  PageTable pt{1 << 16, 4096, 4, 5};
  PageTableWalker walker{1, 250, 2, 1, pt};
  auto p = read_packet(0x1000, nullptr, AccessType::TRANSLATION);
  CHECK_THROWS_AS(walker.add_rq(p), SimulationError);
  p.cpu = 1;
  CHECK_FALSE(walker.add_wq(p));
  CHECK_FALSE(walker.can_accept(p, QueueKind::WQ));
  CHECK(walker.add_rq(p));
  p.address = 0x2000;
  CHECK(walker.add_rq(p));
  p.address = 0x3000;
  CHECK_FALSE(walker.add_rq(p));
}
