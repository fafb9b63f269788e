#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "euc/workbook.hpp"

namespace euc {

enum class SniffedFormat { xlsx_zip, cfb_encrypted, unknown };
std::string_view to_string(SniffedFormat f) noexcept;

/// Magic bytes only: 50 4B 03 04 (zip) or D0 CF 11 E0 A1 B1 1A E1 (OLE/CFB).
SniffedFormat sniff_format(std::span<const std::uint8_t> bytes) noexcept;

struct IngestWarning {
  std::string code;
  std::string location;  // part path or "Sheet!A1"
  std::string message;
  friend bool operator==(const IngestWarning&, const IngestWarning&) = default;
};

struct IngestReport {
  Workbook workbook;
  std::vector<IngestWarning> warnings;
};

/// Imports the supported subset of an .xlsx package, or returns an opaque
/// encrypted workbook for CFB containers. `name` becomes Workbook::name.
/// Errors: not-a-spreadsheet, corrupt-zip, missing-required-part.
IngestReport import_xlsx(std::span<const std::uint8_t> bytes, const std::string& name = "workbook");

/// Canonical JSON (first non-space byte '{') or anything import_xlsx accepts.
IngestReport load_workbook(std::span<const std::uint8_t> bytes, const std::string& name);
IngestReport load_workbook_file(const std::string& path);

/// Reads a whole file; throws io-error.
std::vector<std::uint8_t> read_file_bytes(const std::string& path);

/// Workbook name for a path: file name without directories or extension.
std::string workbook_name_from_path(const std::string& path);

}  // namespace euc
