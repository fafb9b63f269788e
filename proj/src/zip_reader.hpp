#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace euc::detail {

/// Read-only view of a zip archive held in memory. Supports stored and
/// deflated entries; ZIP64 and encrypted entries raise corrupt-zip.
class ZipArchive {
 public:
  explicit ZipArchive(std::span<const std::uint8_t> bytes);

  bool contains(const std::string& name) const { return entries_.count(name) > 0; }
  std::vector<std::string> names() const;
  /// Inflates and CRC-checks one entry.
  std::string read(const std::string& name) const;

 private:
  struct Entry {
    std::uint16_t method = 0;
    std::uint16_t flags = 0;
    std::uint32_t crc = 0;
    std::uint32_t compressed_size = 0;
    std::uint32_t size = 0;
    std::uint32_t local_offset = 0;
  };

  std::span<const std::uint8_t> bytes_;
  std::map<std::string, Entry> entries_;
};

}  // namespace euc::detail
