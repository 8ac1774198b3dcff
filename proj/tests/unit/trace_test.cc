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

#include <fstream>
#include <random>

#include "test_support.h"
#include "tracesim/trace.h"

using namespace tracesim;
using namespace tracesim::test;

namespace
{
TraceInstruction random_record(std::mt19937_64& rng)
{
  TraceInstruction r;
  r.ip = rng();
  r.is_branch = rng() & 1;
  r.branch_taken = r.is_branch && (rng() & 1);
  for (auto& reg : r.dest_regs)
    reg = static_cast<uint8_t>(rng());
  for (auto& reg : r.src_regs)
    reg = static_cast<uint8_t>(rng());
  for (auto& m : r.dest_mem)
    m = rng() & 1 ? rng() : 0;
  for (auto& m : r.src_mem)
    m = rng() & 1 ? rng() : 0;
  return r;
}

void write_raw(const std::filesystem::path& path, const std::vector<uint8_t>& bytes)
{
  std::ofstream out{path, std::ios::binary};
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}
} // namespace

TEST_CASE("record layout is little-endian at fixed offsets", "[trace]")
{
  TraceInstruction r;
  r.ip = 0x0102030405060708;
  r.is_branch = true;
  r.branch_taken = true;
  r.dest_regs = {26, 6};
  r.src_regs = {25, 6, 3, 4};
  r.dest_mem = {0x1122334455667788, 0};
  r.src_mem = {0, 0, 0, 0xAABBCCDDEEFF0011};

  auto bytes = encode_record(r);
  REQUIRE(bytes.size() == 64);
  CHECK(bytes[0] == 0x08);
  CHECK(bytes[7] == 0x01);
  CHECK(bytes[8] == 1);
  CHECK(bytes[9] == 1);
  CHECK(bytes[10] == 26);
  CHECK(bytes[11] == 6);
  CHECK(bytes[12] == 25);
  CHECK(bytes[15] == 4);
  CHECK(bytes[16] == 0x88);
  CHECK(bytes[23] == 0x11);
  CHECK(bytes[56] == 0x11);
  CHECK(bytes[63] == 0xAA);
}

TEST_CASE("decoding a plain record", "[trace]")
{
  TraceRecordBytes bytes{};
  bytes[0] = 0x00;
  bytes[1] = 0x00;
  bytes[2] = 0x40;
  auto r = decode_record(bytes);
  CHECK(r.ip == 0x400000);
  CHECK_FALSE(r.is_branch);
  CHECK(classify_branch(r) == BranchClass::NOT_BRANCH);
  CHECK(r == TraceInstruction{.ip = 0x400000});
}

TEST_CASE("decode rejects flag invariants", "[trace]")
{
  TraceRecordBytes bytes{};
  bytes[9] = 1; // taken without branch
  CHECK_THROWS_AS(decode_record(bytes), TraceError);
  bytes[9] = 0;
  bytes[8] = 2;
  CHECK_THROWS_AS(decode_record(bytes), TraceError);
}

TEST_CASE("encode/decode round trip over random records", "[trace][property]")
{
  std::mt19937_64 rng{42};
  for (int i = 0; i < 10000; ++i) {
    auto r = random_record(rng);
    CHECK(decode_record(encode_record(r)) == r);
  }
}

TEST_CASE("file round trip in every container", "[trace]")
{
  TempDir dir;
  std::mt19937_64 rng{7};
  std::vector<TraceInstruction> records;
  for (int i = 0; i < 5000; ++i)
    records.push_back(random_record(rng));

  for (auto name : {"t.trace", "t.trace.gz", "t.trace.xz"}) {
    auto path = dir / name;
    {
      TraceWriter writer{path};
      for (const auto& r : records)
        writer.write(r);
      writer.close();
    }
    TraceReader reader{path};
    CHECK(read_all(reader) == records);
    CHECK(reader.records_read() == records.size());
    reader.rewind();
    CHECK(reader.next() == records.front());
  }
  CHECK(std::filesystem::file_size(dir / "t.trace") == 64 * records.size());
}

TEST_CASE("compression is detected from content, not the file name", "[trace]")
{
  TempDir dir;
  std::vector<TraceInstruction> records{TraceInstruction{.ip = 1}, TraceInstruction{.ip = 2}};
  {
    TraceWriter writer{dir / "a", Compression::gzip};
    for (auto& r : records)
      writer.write(r);
  }
  {
    TraceWriter writer{dir / "b", Compression::xz};
    for (auto& r : records)
      writer.write(r);
  }
  TraceReader a{dir / "a"};
  TraceReader b{dir / "b"};
  CHECK(read_all(a) == records);
  CHECK(read_all(b) == records);

  std::array<uint8_t, 3> gz{0x1f, 0x8b, 0x08};
  std::array<uint8_t, 6> xz{0xFD, '7', 'z', 'X', 'Z', 0x00};
  std::array<uint8_t, 2> raw{0x00, 0x40};
  CHECK(detect_compression(gz) == Compression::gzip);
  CHECK(detect_compression(xz) == Compression::xz);
  CHECK(detect_compression(raw) == Compression::none);
  CHECK(compression_for_path("x.gz") == Compression::gzip);
  CHECK(compression_for_path("x.xz") == Compression::xz);
  CHECK(compression_for_path("x.trace") == Compression::none);
}

TEST_CASE("record counting at stream boundaries", "[trace]")
{
  TempDir dir;
  SECTION("128 bytes give two records")
  {
    write_raw(dir / "t", std::vector<uint8_t>(128, 0));
    TraceReader reader{dir / "t"};
    CHECK(reader.next());
    CHECK(reader.next());
    CHECK_FALSE(reader.next());
  }
  SECTION("100 bytes give one record then an error")
  {
    write_raw(dir / "t", std::vector<uint8_t>(100, 0));
    TraceReader reader{dir / "t"};
    CHECK(reader.next());
    CHECK_THROWS_AS(reader.next(), TraceError);
  }
  SECTION("empty file is an empty trace")
  {
    write_raw(dir / "t", {});
    TraceReader reader{dir / "t"};
    CHECK_FALSE(reader.next());
  }
  SECTION("missing file")
  {
    CHECK_THROWS_AS(TraceReader{dir / "absent"}, TraceError);
  }
}

TEST_CASE("corrupt compressed streams are trace errors", "[trace]")
{
  TempDir dir;
  {
    TraceWriter writer{dir / "t.gz"};
    for (int i = 0; i < 1000; ++i)
      writer.write(TraceInstruction{.ip = static_cast<uint64_t>(i) * 4});
  }
  auto size = std::filesystem::file_size(dir / "t.gz");
  std::filesystem::resize_file(dir / "t.gz", size / 2);
  TraceReader reader{dir / "t.gz"};
  CHECK_THROWS_AS(read_all(reader), TraceError);

  std::vector<uint8_t> garbage{0xFD, '7', 'z', 'X', 'Z', 0x00, 1, 2, 3, 4, 5, 6, 7, 8};
  write_raw(dir / "bad.xz", garbage);
  TraceReader bad{dir / "bad.xz"};
  CHECK_THROWS_AS(bad.next(), TraceError);
}

TEST_CASE("branch classification table", "[trace]")
{
  auto branch = [](std::array<uint8_t, 2> dest, std::array<uint8_t, 4> src) {
    TraceInstruction r;
    r.is_branch = true;
    r.dest_regs = dest;
    r.src_regs = src;
    return classify_branch(r);
  };
  constexpr uint8_t IP = REG_INSTRUCTION_POINTER, SP = REG_STACK_POINTER, FL = REG_FLAGS;
  CHECK(branch({IP, 0}, {FL, 0, 0, 0}) == BranchClass::CONDITIONAL);
  CHECK(branch({IP, 0}, {IP, FL, 0, 0}) == BranchClass::CONDITIONAL);
  CHECK(branch({IP, 0}, {0, 0, 0, 0}) == BranchClass::DIRECT_JUMP);
  CHECK(branch({IP, 0}, {3, 0, 0, 0}) == BranchClass::INDIRECT_JUMP);
  CHECK(branch({IP, SP}, {IP, SP, 0, 0}) == BranchClass::DIRECT_CALL);
  CHECK(branch({IP, SP}, {SP, 5, 0, 0}) == BranchClass::INDIRECT_CALL);
  CHECK(branch({IP, SP}, {SP, 0, 0, 0}) == BranchClass::RETURN);
  // no IP destination
  CHECK(branch({3, 0}, {0, 0, 0, 0}) == BranchClass::INDIRECT_JUMP);

  TraceInstruction plain;
  plain.dest_regs = {IP, 0};
  CHECK(classify_branch(plain) == BranchClass::NOT_BRANCH);
}

TEST_CASE("classification is total over random register sets", "[trace][property]")
{
  std::mt19937_64 rng{3};
  std::uniform_int_distribution<int> pick{0, 5};
  constexpr std::array<uint8_t, 6> regs{0, 1, 7, REG_STACK_POINTER, REG_FLAGS, REG_INSTRUCTION_POINTER};
  for (int i = 0; i < 20000; ++i) {
    TraceInstruction r;
    r.is_branch = rng() & 1;
    for (auto& reg : r.dest_regs)
      reg = regs[pick(rng)];
    for (auto& reg : r.src_regs)
      reg = regs[pick(rng)];
    auto cls = classify_branch(r);
    CHECK((cls == BranchClass::NOT_BRANCH) == !r.is_branch);
    CHECK(classify_branch(r) == cls);
  }
}

TEST_CASE("reading memory stays flat as traces grow", "[trace][memory]")
{
  TempDir dir;
  auto make = [&](uint64_t n, const std::string& name) {
    SyntheticSpec spec;
    spec.pattern = SyntheticPattern::random_load;
    spec.length = n;
    spec.body_length = 4;
    write_synthetic_trace(spec, dir / name);
    return dir / name;
  };
  auto small = make(1'000'000, "small.gz");
  auto large = make(10'000'000, "large.gz");

  auto drain = [](const std::filesystem::path& path) {
    TraceReader reader{path};
    uint64_t n = 0;
    while (reader.next())
      ++n;
    return n;
  };
  CHECK(drain(small) == 1'000'000);
  auto after_small = peak_rss_kib();
  CHECK(drain(large) == 10'000'000);
  auto after_large = peak_rss_kib();
  // 10^7 records are 640 MB decompressed.
  CHECK(after_large - after_small < 8 * 1024);
}
