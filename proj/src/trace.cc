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

#include "tracesim/trace.h"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fmt/core.h>
#include <lzma.h>
#include <zlib.h>

namespace tracesim
{
namespace
{
void put_le64(uint8_t* out, uint64_t value)
{
  for (int i = 0; i < 8; ++i)
    out[i] = static_cast<uint8_t>(value >> (8 * i));
}

uint64_t get_le64(const uint8_t* in)
{
  uint64_t value = 0;
  for (int i = 7; i >= 0; --i)
    value = (value << 8) | in[i];
  return value;
}

constexpr std::size_t ip_offset = 0;
constexpr std::size_t is_branch_offset = 8;
constexpr std::size_t taken_offset = 9;
constexpr std::size_t dest_regs_offset = 10;
constexpr std::size_t src_regs_offset = dest_regs_offset + num_dest_regs;
constexpr std::size_t dest_mem_offset = src_regs_offset + num_src_regs;
constexpr std::size_t src_mem_offset = dest_mem_offset + 8 * num_dest_mem;
static_assert(src_mem_offset + 8 * num_src_mem == trace_record_size);

struct FileCloser {
  void operator()(std::FILE* f) const
  {
    if (f != nullptr)
      std::fclose(f);
  }
};
using unique_file = std::unique_ptr<std::FILE, FileCloser>;

class RawSource final : public ByteSource
{
  unique_file file_;

public:
  explicit RawSource(unique_file file) : file_(std::move(file)) {}

  std::size_t read(std::span<uint8_t> buf) override
  {
    auto count = std::fread(buf.data(), 1, buf.size(), file_.get());
    if (count < buf.size() && std::ferror(file_.get()))
      throw TraceError("I/O error while reading trace");
    return count;
  }
};

class GzipSource final : public ByteSource
{
  gzFile file_;

public:
  explicit GzipSource(const std::filesystem::path& path) : file_(gzopen(path.c_str(), "rb"))
  {
    if (file_ == nullptr)
      throw TraceError(fmt::format("cannot open trace {}", path.string()));
    gzbuffer(file_, 1 << 17);
  }
  ~GzipSource() override { gzclose(file_); }
  GzipSource(const GzipSource&) = delete;
  GzipSource& operator=(const GzipSource&) = delete;

  std::size_t read(std::span<uint8_t> buf) override
  {
    std::size_t total = 0;
    while (total < buf.size()) {
      auto chunk = static_cast<unsigned>(std::min<std::size_t>(buf.size() - total, 1u << 30));
      int got = gzread(file_, buf.data() + total, chunk);
      if (got < 0) {
        int errnum = 0;
        const char* msg = gzerror(file_, &errnum);
        throw TraceError(fmt::format("gzip decompression failed: {}", msg));
      }
      if (got == 0)
        break;
      total += static_cast<std::size_t>(got);
    }
    // zlib reports a truncated member only as a short read
    if (total < buf.size()) {
      int errnum = 0;
      gzerror(file_, &errnum);
      if (errnum != Z_OK && errnum != Z_STREAM_END)
        throw TraceError("gzip decompression failed: truncated stream");
    }
    return total;
  }
};

class XzSource final : public ByteSource
{
  unique_file file_;
  lzma_stream stream_ = LZMA_STREAM_INIT;
  std::vector<uint8_t> inbuf_ = std::vector<uint8_t>(1 << 16);
  bool finished_ = false;

public:
  explicit XzSource(unique_file file) : file_(std::move(file))
  {
    if (lzma_stream_decoder(&stream_, UINT64_MAX, LZMA_CONCATENATED) != LZMA_OK)
      throw TraceError("cannot initialize xz decoder");
  }
  ~XzSource() override { lzma_end(&stream_); }
  XzSource(const XzSource&) = delete;
  XzSource& operator=(const XzSource&) = delete;

  std::size_t read(std::span<uint8_t> buf) override
  {
    if (finished_)
      return 0;
    stream_.next_out = buf.data();
    stream_.avail_out = buf.size();
    while (stream_.avail_out > 0) {
      lzma_action action = LZMA_RUN;
      if (stream_.avail_in == 0) {
        auto count = std::fread(inbuf_.data(), 1, inbuf_.size(), file_.get());
        if (std::ferror(file_.get()))
          throw TraceError("I/O error while reading trace");
        stream_.next_in = inbuf_.data();
        stream_.avail_in = count;
        if (count == 0)
          action = LZMA_FINISH;
      }
      auto ret = lzma_code(&stream_, action);
      if (ret == LZMA_STREAM_END) {
        finished_ = true;
        break;
      }
      if (ret != LZMA_OK)
        throw TraceError(fmt::format("xz decompression failed (code {})", static_cast<int>(ret)));
    }
    return buf.size() - stream_.avail_out;
  }
};
} // namespace

TraceRecordBytes encode_record(const TraceInstruction& instr)
{
  TraceRecordBytes out{};
  put_le64(out.data() + ip_offset, instr.ip);
  out[is_branch_offset] = instr.is_branch ? 1 : 0;
  out[taken_offset] = instr.branch_taken ? 1 : 0;
  std::copy(instr.dest_regs.begin(), instr.dest_regs.end(), out.begin() + dest_regs_offset);
  std::copy(instr.src_regs.begin(), instr.src_regs.end(), out.begin() + src_regs_offset);
  for (std::size_t i = 0; i < num_dest_mem; ++i)
    put_le64(out.data() + dest_mem_offset + 8 * i, instr.dest_mem[i]);
  for (std::size_t i = 0; i < num_src_mem; ++i)
    put_le64(out.data() + src_mem_offset + 8 * i, instr.src_mem[i]);
  return out;
}

TraceInstruction decode_record(std::span<const uint8_t, trace_record_size> bytes)
{
  TraceInstruction instr;
  instr.ip = get_le64(bytes.data() + ip_offset);
  if (bytes[is_branch_offset] > 1 || bytes[taken_offset] > 1)
    throw TraceError("corrupt trace record: branch flags must be 0 or 1");
  instr.is_branch = bytes[is_branch_offset] != 0;
  instr.branch_taken = bytes[taken_offset] != 0;
  if (instr.branch_taken && !instr.is_branch)
    throw TraceError("corrupt trace record: taken flag set on a non-branch");
  std::copy_n(bytes.begin() + dest_regs_offset, num_dest_regs, instr.dest_regs.begin());
  std::copy_n(bytes.begin() + src_regs_offset, num_src_regs, instr.src_regs.begin());
  for (std::size_t i = 0; i < num_dest_mem; ++i)
    instr.dest_mem[i] = get_le64(bytes.data() + dest_mem_offset + 8 * i);
  for (std::size_t i = 0; i < num_src_mem; ++i)
    instr.src_mem[i] = get_le64(bytes.data() + src_mem_offset + 8 * i);
  return instr;
}

BranchClass classify_branch(const TraceInstruction& instr)
{
  if (!instr.is_branch)
    return BranchClass::NOT_BRANCH;

  auto writes = [&](uint8_t reg) { return std::find(instr.dest_regs.begin(), instr.dest_regs.end(), reg) != instr.dest_regs.end(); };
  auto reads = [&](uint8_t reg) { return std::find(instr.src_regs.begin(), instr.src_regs.end(), reg) != instr.src_regs.end(); };
  bool reads_other = std::any_of(instr.src_regs.begin(), instr.src_regs.end(), [](uint8_t reg) {
    return reg != 0 && reg != REG_STACK_POINTER && reg != REG_FLAGS && reg != REG_INSTRUCTION_POINTER;
  });

  bool writes_ip = writes(REG_INSTRUCTION_POINTER);
  bool writes_sp = writes(REG_STACK_POINTER);
  bool reads_ip = reads(REG_INSTRUCTION_POINTER);
  bool reads_sp = reads(REG_STACK_POINTER);
  bool reads_flags = reads(REG_FLAGS);

  if (!writes_ip)
    return BranchClass::INDIRECT_JUMP;
  if (reads_flags)
    return BranchClass::CONDITIONAL;
  if (!reads_sp && !writes_sp && !reads_other)
    return BranchClass::DIRECT_JUMP;
  if (!reads_sp && !writes_sp && reads_other)
    return BranchClass::INDIRECT_JUMP;
  if (writes_sp && reads_ip && !reads_other)
    return BranchClass::DIRECT_CALL;
  if (writes_sp && reads_other)
    return BranchClass::INDIRECT_CALL;
  if (reads_sp && !reads_ip)
    return BranchClass::RETURN;
  return BranchClass::INDIRECT_JUMP;
}

Compression detect_compression(std::span<const uint8_t> leading_bytes)
{
  constexpr std::array<uint8_t, 2> gzip_magic{0x1f, 0x8b};
  constexpr std::array<uint8_t, 6> xz_magic{0xfd, '7', 'z', 'X', 'Z', 0x00};
  if (leading_bytes.size() >= gzip_magic.size() && std::equal(gzip_magic.begin(), gzip_magic.end(), leading_bytes.begin()))
    return Compression::gzip;
  if (leading_bytes.size() >= xz_magic.size() && std::equal(xz_magic.begin(), xz_magic.end(), leading_bytes.begin()))
    return Compression::xz;
  return Compression::none;
}

Compression compression_for_path(const std::filesystem::path& path)
{
  auto ext = path.extension();
  if (ext == ".gz")
    return Compression::gzip;
  if (ext == ".xz")
    return Compression::xz;
  return Compression::none;
}

std::unique_ptr<ByteSource> open_byte_source(const std::filesystem::path& path)
{
  unique_file file{std::fopen(path.c_str(), "rb")};
  if (!file)
    throw TraceError(fmt::format("cannot open trace {}", path.string()));

  std::array<uint8_t, 6> magic{};
  auto got = std::fread(magic.data(), 1, magic.size(), file.get());
  auto kind = detect_compression(std::span{magic.data(), got});

  if (kind == Compression::gzip) {
    file.reset();
    return std::make_unique<GzipSource>(path);
  }
  std::rewind(file.get());
  if (kind == Compression::xz)
    return std::make_unique<XzSource>(std::move(file));
  std::setvbuf(file.get(), nullptr, _IOFBF, 1 << 17);
  return std::make_unique<RawSource>(std::move(file));
}

TraceReader::TraceReader(std::filesystem::path path) : path_(std::move(path)), source_(open_byte_source(path_)) {}

std::optional<TraceInstruction> TraceReader::next()
{
  TraceRecordBytes bytes{};
  auto got = source_->read(bytes);
  if (got == 0)
    return std::nullopt;
  if (got < trace_record_size)
    throw TraceError(fmt::format("corrupt trace {}: truncated record after {} records ({} trailing bytes)", path_.string(), records_read_, got));
  ++records_read_;
  return decode_record(bytes);
}

void TraceReader::rewind()
{
  source_ = open_byte_source(path_);
  records_read_ = 0;
}

std::optional<TraceInstruction> VectorSource::next()
{
  if (position_ >= records_.size())
    return std::nullopt;
  return records_[position_++];
}

struct TraceWriter::Sink {
  virtual ~Sink() = default;
  virtual void write(std::span<const uint8_t> bytes) = 0;
  virtual void close() = 0;
};

namespace
{
struct RawSink final : TraceWriter::Sink {
  unique_file file;
  explicit RawSink(const std::filesystem::path& path) : file(std::fopen(path.c_str(), "wb"))
  {
    if (!file)
      throw TraceError(fmt::format("cannot create {}", path.string()));
  }
  void write(std::span<const uint8_t> bytes) override
  {
    if (std::fwrite(bytes.data(), 1, bytes.size(), file.get()) != bytes.size())
      throw TraceError("write failed");
  }
  void close() override
  {
    if (file && std::fclose(file.release()) != 0)
      throw TraceError("close failed");
  }
};

struct GzipSink final : TraceWriter::Sink {
  gzFile file;
  explicit GzipSink(const std::filesystem::path& path) : file(gzopen(path.c_str(), "wb6"))
  {
    if (file == nullptr)
      throw TraceError(fmt::format("cannot create {}", path.string()));
  }
  ~GzipSink() override
  {
    if (file != nullptr)
      gzclose(file);
  }
  void write(std::span<const uint8_t> bytes) override
  {
    if (!bytes.empty() && gzwrite(file, bytes.data(), static_cast<unsigned>(bytes.size())) == 0)
      throw TraceError("gzip write failed");
  }
  void close() override
  {
    if (file != nullptr && gzclose(std::exchange(file, nullptr)) != Z_OK)
      throw TraceError("gzip close failed");
  }
};

struct XzSink final : TraceWriter::Sink {
  unique_file file;
  lzma_stream stream = LZMA_STREAM_INIT;
  std::vector<uint8_t> outbuf = std::vector<uint8_t>(1 << 16);

  explicit XzSink(const std::filesystem::path& path) : file(std::fopen(path.c_str(), "wb"))
  {
    if (!file)
      throw TraceError(fmt::format("cannot create {}", path.string()));
    if (lzma_easy_encoder(&stream, 6, LZMA_CHECK_CRC64) != LZMA_OK)
      throw TraceError("cannot initialize xz encoder");
  }
  ~XzSink() override { lzma_end(&stream); }

  void pump(lzma_action action)
  {
    for (;;) {
      stream.next_out = outbuf.data();
      stream.avail_out = outbuf.size();
      auto ret = lzma_code(&stream, action);
      auto produced = outbuf.size() - stream.avail_out;
      if (produced > 0 && std::fwrite(outbuf.data(), 1, produced, file.get()) != produced)
        throw TraceError("write failed");
      if (ret == LZMA_STREAM_END)
        return;
      if (ret != LZMA_OK)
        throw TraceError("xz compression failed");
      if (action == LZMA_RUN && stream.avail_in == 0)
        return;
    }
  }
  void write(std::span<const uint8_t> bytes) override
  {
    stream.next_in = bytes.data();
    stream.avail_in = bytes.size();
    pump(LZMA_RUN);
  }
  void close() override
  {
    if (!file)
      return;
    stream.avail_in = 0;
    pump(LZMA_FINISH);
    if (std::fclose(file.release()) != 0)
      throw TraceError("close failed");
  }
};
} // namespace

TraceWriter::TraceWriter(const std::filesystem::path& path, Compression compression)
{
  switch (compression) {
  case Compression::none:
    sink_ = std::make_unique<RawSink>(path);
    break;
  case Compression::gzip:
    sink_ = std::make_unique<GzipSink>(path);
    break;
  case Compression::xz:
    sink_ = std::make_unique<XzSink>(path);
    break;
  }
}

TraceWriter::~TraceWriter()
{
  if (sink_) {
    try {
      sink_->close();
    } catch (const TraceError&) {
    }
  }
}

TraceWriter::TraceWriter(TraceWriter&&) noexcept = default;
TraceWriter& TraceWriter::operator=(TraceWriter&&) noexcept = default;

void TraceWriter::write(const TraceInstruction& instr)
{
  auto bytes = encode_record(instr);
  sink_->write(bytes);
}

void TraceWriter::write_bytes(std::span<const uint8_t> bytes) { sink_->write(bytes); }

void TraceWriter::close()
{
  if (sink_)
    sink_->close();
}

std::vector<TraceInstruction> read_all(InstructionSource& source)
{
  std::vector<TraceInstruction> result;
  while (auto instr = source.next())
    result.push_back(*instr);
  return result;
}
} // namespace tracesim
