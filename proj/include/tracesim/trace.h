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

#ifndef TRACESIM_TRACE_H
#define TRACESIM_TRACE_H

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "tracesim/types.h"

namespace tracesim
{
/*
 * On-disk record layout, little-endian, 64 bytes:
 *
 *   offset  size  field
 *        0     8  ip
 *        8     1  is_branch
 *        9     1  branch_taken
 *       10     2  dest_regs[2]
 *       12     4  src_regs[4]
 *       16    16  dest_mem[2]
 *       32    32  src_mem[4]
 *
 * Register id 0 and memory address 0 mean "no operand".
 */
inline constexpr std::size_t trace_record_size = 64;
inline constexpr std::size_t num_dest_regs = 2;
inline constexpr std::size_t num_src_regs = 4;
inline constexpr std::size_t num_dest_mem = 2;
inline constexpr std::size_t num_src_mem = 4;

inline constexpr uint8_t REG_STACK_POINTER = 6;
inline constexpr uint8_t REG_FLAGS = 25;
inline constexpr uint8_t REG_INSTRUCTION_POINTER = 26;

struct TraceInstruction {
  uint64_t ip = 0;
  bool is_branch = false;
  bool branch_taken = false;
  std::array<uint8_t, num_dest_regs> dest_regs{};
  std::array<uint8_t, num_src_regs> src_regs{};
  std::array<uint64_t, num_dest_mem> dest_mem{};
  std::array<uint64_t, num_src_mem> src_mem{};

  bool operator==(const TraceInstruction&) const = default;
};

using TraceRecordBytes = std::array<uint8_t, trace_record_size>;

TraceRecordBytes encode_record(const TraceInstruction& instr);

/// Throws TraceError if the record violates a format invariant.
TraceInstruction decode_record(std::span<const uint8_t, trace_record_size> bytes);

BranchClass classify_branch(const TraceInstruction& instr);

enum class Compression { none, gzip, xz };

/// Identifies a container from its leading bytes; anything unrecognized is raw.
Compression detect_compression(std::span<const uint8_t> leading_bytes);
Compression compression_for_path(const std::filesystem::path& path);

class ByteSource
{
public:
  virtual ~ByteSource() = default;
  /// Fills as much of buf as possible; a short count means end of stream.
  virtual std::size_t read(std::span<uint8_t> buf) = 0;
};

std::unique_ptr<ByteSource> open_byte_source(const std::filesystem::path& path);

/// Anything that yields trace records in order and can start over.
class InstructionSource
{
public:
  virtual ~InstructionSource() = default;
  virtual std::optional<TraceInstruction> next() = 0;
  virtual void rewind() = 0;
  virtual std::string name() const = 0;
};

class TraceReader final : public InstructionSource
{
  std::filesystem::path path_;
  std::unique_ptr<ByteSource> source_;
  uint64_t records_read_ = 0;

public:
  explicit TraceReader(std::filesystem::path path);

  std::optional<TraceInstruction> next() override;
  void rewind() override;
  std::string name() const override { return path_.string(); }
  uint64_t records_read() const { return records_read_; }
};

class VectorSource final : public InstructionSource
{
  std::vector<TraceInstruction> records_;
  std::size_t position_ = 0;

public:
  explicit VectorSource(std::vector<TraceInstruction> records) : records_(std::move(records)) {}

  std::optional<TraceInstruction> next() override;
  void rewind() override { position_ = 0; }
  std::string name() const override { return "<memory>"; }
};

class TraceWriter
{
public:
  struct Sink;

private:
  std::unique_ptr<Sink> sink_;

public:
  TraceWriter(const std::filesystem::path& path, Compression compression);
  explicit TraceWriter(const std::filesystem::path& path) : TraceWriter(path, compression_for_path(path)) {}
  ~TraceWriter();
  TraceWriter(TraceWriter&&) noexcept;
  TraceWriter& operator=(TraceWriter&&) noexcept;

  void write(const TraceInstruction& instr);
  void write_bytes(std::span<const uint8_t> bytes);
  void close();
};

std::vector<TraceInstruction> read_all(InstructionSource& source);
} // namespace tracesim

#endif
