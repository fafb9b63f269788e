#include "zip_reader.hpp"

#include <zlib.h>

#include "euc/error.hpp"

namespace euc::detail {

namespace {

constexpr std::uint32_t kEndOfCentralDir = 0x06054b50;
constexpr std::uint32_t kCentralHeader = 0x02014b50;
constexpr std::uint32_t kLocalHeader = 0x04034b50;

[[noreturn]] void corrupt(const std::string& what) { throw Error("corrupt-zip", what); }

std::uint16_t u16(std::span<const std::uint8_t> b, std::size_t at) {
  if (at + 2 > b.size()) corrupt("truncated archive");
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t u32(std::span<const std::uint8_t> b, std::size_t at) {
  if (at + 4 > b.size()) corrupt("truncated archive");
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

}  // namespace

ZipArchive::ZipArchive(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
  if (bytes.size() < 22) corrupt("archive too small");
  // The end record sits in the last 22 + 65535 (max comment) bytes.
  std::size_t eocd = std::string::npos;
  const std::size_t lowest = bytes.size() > 22 + 65535 ? bytes.size() - 22 - 65535 : 0;
  for (std::size_t at = bytes.size() - 22 + 1; at-- > lowest;) {
    if (u32(bytes, at) == kEndOfCentralDir) {
      eocd = at;
      break;
    }
  }
  if (eocd == std::string::npos) corrupt("no end-of-central-directory record");
  const std::uint16_t count = u16(bytes, eocd + 10);
  const std::uint32_t dir_size = u32(bytes, eocd + 12);
  const std::uint32_t dir_offset = u32(bytes, eocd + 16);
  if (dir_offset == 0xFFFFFFFFu || count == 0xFFFF) corrupt("ZIP64 archives are not supported");
  if (static_cast<std::uint64_t>(dir_offset) + dir_size > bytes.size()) corrupt("central directory out of bounds");

  std::size_t at = dir_offset;
  for (std::uint16_t i = 0; i < count; ++i) {
    if (u32(bytes, at) != kCentralHeader) corrupt("bad central directory entry");
    Entry e;
    e.flags = u16(bytes, at + 8);
    e.method = u16(bytes, at + 10);
    e.crc = u32(bytes, at + 16);
    e.compressed_size = u32(bytes, at + 20);
    e.size = u32(bytes, at + 24);
    const std::uint16_t name_len = u16(bytes, at + 28);
    const std::uint16_t extra_len = u16(bytes, at + 30);
    const std::uint16_t comment_len = u16(bytes, at + 32);
    e.local_offset = u32(bytes, at + 42);
    if (at + 46 + name_len > bytes.size()) corrupt("truncated entry name");
    std::string name(reinterpret_cast<const char*>(bytes.data() + at + 46), name_len);
    entries_[name] = e;
    at += 46 + name_len + extra_len + comment_len;
  }
}

std::vector<std::string> ZipArchive::names() const {
  std::vector<std::string> out;
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

std::string ZipArchive::read(const std::string& name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) throw Error("missing-required-part", "archive has no part " + name);
  const Entry& e = it->second;
  if (e.flags & 0x1) corrupt(name + ": encrypted entry");
  if (u32(bytes_, e.local_offset) != kLocalHeader) corrupt(name + ": bad local header");
  const std::size_t data = e.local_offset + 30 + u16(bytes_, e.local_offset + 26) + u16(bytes_, e.local_offset + 28);
  if (data + e.compressed_size > bytes_.size()) corrupt(name + ": entry data out of bounds");

  std::string out;
  if (e.method == 0) {
    out.assign(reinterpret_cast<const char*>(bytes_.data() + data), e.compressed_size);
  } else if (e.method == 8) {
    out.resize(e.size);
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) corrupt(name + ": inflate init failed");
    zs.next_in = const_cast<Bytef*>(bytes_.data() + data);
    zs.avail_in = e.compressed_size;
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    const auto produced = zs.total_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || produced != e.size) corrupt(name + ": deflate stream damaged");
  } else {
    corrupt(name + ": unsupported compression method " + std::to_string(e.method));
  }
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(out.data()), static_cast<uInt>(out.size()));
  if (crc != e.crc) corrupt(name + ": CRC mismatch");
  return out;
}

}  // namespace euc::detail
