#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace euc {

inline constexpr int kMaxCol = 16384;
inline constexpr int kMaxRow = 1048576;

/// 1-based grid coordinate. Ordering is row-major: (row, col).
struct CellAddr {
  int col = 1;
  int row = 1;

  friend bool operator==(const CellAddr&, const CellAddr&) = default;
  friend std::strong_ordering operator<=>(const CellAddr& a, const CellAddr& b) {
    if (auto c = a.row <=> b.row; c != 0) return c;
    return a.col <=> b.col;
  }
};

bool in_grid(const CellAddr& addr) noexcept;

std::string column_to_letters(int col);
/// Inverse of column_to_letters; throws malformed-address / address-out-of-range.
int letters_to_column(std::string_view letters);

std::string addr_to_a1(const CellAddr& addr);
/// Accepts `[A-Z]+[1-9][0-9]*` with optional `$` markers (ignored here).
CellAddr a1_to_addr(std::string_view text);

struct Blank {
  friend bool operator==(const Blank&, const Blank&) = default;
};

struct ErrorValue {
  std::string code;  // one of kErrorCodes
  friend bool operator==(const ErrorValue&, const ErrorValue&) = default;
};

inline constexpr std::string_view kErrorCodes[] = {"#DIV/0!", "#N/A",  "#NAME?", "#NULL!",
                                                   "#NUM!",   "#REF!", "#VALUE!"};
bool is_error_code(std::string_view text) noexcept;

using CellValue = std::variant<Blank, double, std::string, bool, ErrorValue>;

struct Cell {
  CellValue value = Blank{};
  std::optional<std::string> formula;  // A1 grammar, no leading '='
  bool locked = true;
  std::optional<std::string> note;

  bool is_empty() const noexcept {
    return std::holds_alternative<Blank>(value) && !formula && !note;
  }
  bool has_formula() const noexcept { return formula.has_value(); }
  const std::string* text() const noexcept { return std::get_if<std::string>(&value); }
  const double* number() const noexcept { return std::get_if<double>(&value); }

  friend bool operator==(const Cell&, const Cell&) = default;
};

enum class SheetPurpose { input, calculation, output, documentation, log, undeclared };

std::string_view to_string(SheetPurpose p) noexcept;
std::optional<SheetPurpose> sheet_purpose_from_string(std::string_view s) noexcept;

struct Sheet {
  std::string name;
  std::map<CellAddr, Cell> cells;
  bool protection_enabled = false;
  SheetPurpose declared_purpose = SheetPurpose::undeclared;
  bool hidden = false;
  std::vector<int> hidden_rows;  // sorted, unique
  std::vector<int> hidden_cols;  // sorted, unique

  const Cell* find(const CellAddr& addr) const {
    auto it = cells.find(addr);
    return it == cells.end() ? nullptr : &it->second;
  }

  friend bool operator==(const Sheet&, const Sheet&) = default;
};

struct RangeRef {
  std::string sheet;
  CellAddr top_left;
  CellAddr bottom_right;

  bool contains(const CellAddr& a) const noexcept {
    return a.col >= top_left.col && a.col <= bottom_right.col && a.row >= top_left.row &&
           a.row <= bottom_right.row;
  }
  std::int64_t area() const noexcept {
    return std::int64_t{bottom_right.col - top_left.col + 1} *
           (bottom_right.row - top_left.row + 1);
  }

  friend bool operator==(const RangeRef&, const RangeRef&) = default;
  friend auto operator<=>(const RangeRef&, const RangeRef&) = default;
};

/// "Sheet!A1:B2", "'My Sheet'!C3" (single cells print without ':').
std::string format_range(const RangeRef& r);
/// Accepts the format_range output plus `$` markers; throws malformed-address.
RangeRef parse_range(std::string_view text);
/// Quotes a sheet name when it is not a plain identifier.
std::string quote_sheet_name(std::string_view name);

struct SecurityInfo {
  bool encrypted = false;
  int sheet_protection_count = 0;
  friend bool operator==(const SecurityInfo&, const SecurityInfo&) = default;
};

enum class SourceFormat { canonical_json, xlsx, encrypted_opaque };
std::string_view to_string(SourceFormat f) noexcept;

struct Workbook {
  std::string name;
  std::vector<Sheet> sheets;
  std::map<std::string, RangeRef> named_ranges;
  SecurityInfo security;
  SourceFormat source_format = SourceFormat::canonical_json;

  /// Case-insensitive sheet lookup; nullptr when absent.
  const Sheet* find_sheet(std::string_view sheet_name) const;

  friend bool operator==(const Workbook&, const Workbook&) = default;
};

/// Throws Error("invariant-violation") naming the first broken invariant.
void validate(const Workbook& wb);

bool iequals(std::string_view a, std::string_view b) noexcept;

/// Throws unknown-sheet when the sheet does not exist; nullopt for blank cells.
std::optional<Cell> cell_at(const Workbook& wb, std::string_view sheet, const CellAddr& addr);

/// Parses the canonical JSON interchange document.
/// Errors: malformed-json, invariant-violation, address-out-of-range.
Workbook parse_canonical(std::string_view json_text);

/// Deterministic: sheets in order, cells by (row, col), fixed key order.
std::string serialize_canonical(const Workbook& wb);

/// One cell in canonical form: {"t","v"?,"f"?,"locked","note"?}.
nlohmann::ordered_json cell_to_json(const Cell& cell);
/// Throws invariant-violation naming `where`.
Cell cell_from_json(const nlohmann::json& j, const std::string& where = "cell");

}  // namespace euc
