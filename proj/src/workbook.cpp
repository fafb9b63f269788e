#include "euc/workbook.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "euc/error.hpp"

namespace euc {

using nlohmann::json;
using nlohmann::ordered_json;

bool in_grid(const CellAddr& addr) noexcept {
  return addr.col >= 1 && addr.col <= kMaxCol && addr.row >= 1 && addr.row <= kMaxRow;
}

std::string column_to_letters(int col) {
  if (col < 1 || col > kMaxCol) {
    throw Error("address-out-of-range", "column " + std::to_string(col) + " outside 1.." +
                                            std::to_string(kMaxCol));
  }
  // Bijective base-26: digits run 1..26 (A..Z), no zero digit.
  std::string out;
  while (col > 0) {
    const int rem = (col - 1) % 26;
    out.push_back(static_cast<char>('A' + rem));
    col = (col - 1) / 26;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

int letters_to_column(std::string_view letters) {
  if (letters.empty()) throw Error("malformed-address", "empty column letters");
  long long col = 0;
  for (char c : letters) {
    if (c < 'A' || c > 'Z') {
      throw Error("malformed-address", "bad column letters: " + std::string(letters));
    }
    col = col * 26 + (c - 'A' + 1);
    if (col > kMaxCol) {
      throw Error("address-out-of-range", "column " + std::string(letters) + " beyond XFD");
    }
  }
  return static_cast<int>(col);
}

std::string addr_to_a1(const CellAddr& addr) {
  if (!in_grid(addr)) {
    throw Error("address-out-of-range", "address (" + std::to_string(addr.col) + "," +
                                            std::to_string(addr.row) + ") outside the grid");
  }
  return column_to_letters(addr.col) + std::to_string(addr.row);
}

CellAddr a1_to_addr(std::string_view text) {
  std::size_t i = 0;
  if (i < text.size() && text[i] == '$') ++i;
  const std::size_t letters_begin = i;
  while (i < text.size() && text[i] >= 'A' && text[i] <= 'Z') ++i;
  const std::string_view letters = text.substr(letters_begin, i - letters_begin);
  if (i < text.size() && text[i] == '$') ++i;
  const std::size_t digits_begin = i;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
  const std::string_view digits = text.substr(digits_begin, i - digits_begin);
  if (letters.empty() || digits.empty() || i != text.size() || digits.front() == '0') {
    throw Error("malformed-address", "malformed cell address: " + std::string(text));
  }
  CellAddr addr;
  addr.col = letters_to_column(letters);
  if (digits.size() > 7) throw Error("address-out-of-range", "row beyond grid: " + std::string(text));
  addr.row = std::stoi(std::string(digits));
  if (addr.row > kMaxRow) throw Error("address-out-of-range", "row beyond grid: " + std::string(text));
  return addr;
}

bool is_error_code(std::string_view text) noexcept {
  return std::find(std::begin(kErrorCodes), std::end(kErrorCodes), text) != std::end(kErrorCodes);
}

std::string_view to_string(SheetPurpose p) noexcept {
  switch (p) {
    case SheetPurpose::input: return "input";
    case SheetPurpose::calculation: return "calculation";
    case SheetPurpose::output: return "output";
    case SheetPurpose::documentation: return "documentation";
    case SheetPurpose::log: return "log";
    case SheetPurpose::undeclared: return "undeclared";
  }
  return "undeclared";
}

std::optional<SheetPurpose> sheet_purpose_from_string(std::string_view s) noexcept {
  for (auto p : {SheetPurpose::input, SheetPurpose::calculation, SheetPurpose::output,
                 SheetPurpose::documentation, SheetPurpose::log, SheetPurpose::undeclared}) {
    if (iequals(to_string(p), s)) return p;
  }
  return std::nullopt;
}

std::string_view to_string(SourceFormat f) noexcept {
  switch (f) {
    case SourceFormat::canonical_json: return "canonical_json";
    case SourceFormat::xlsx: return "xlsx";
    case SourceFormat::encrypted_opaque: return "encrypted_opaque";
  }
  return "canonical_json";
}

bool iequals(std::string_view a, std::string_view b) noexcept {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::string quote_sheet_name(std::string_view name) {
  const bool plain =
      !name.empty() && !std::isdigit(static_cast<unsigned char>(name.front())) &&
      std::all_of(name.begin(), name.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
      });
  if (plain) return std::string(name);
  std::string out = "'";
  for (char c : name) {
    if (c == '\'') out.push_back('\'');
    out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

std::string format_range(const RangeRef& r) {
  std::string out = quote_sheet_name(r.sheet) + "!" + addr_to_a1(r.top_left);
  if (r.bottom_right != r.top_left) out += ":" + addr_to_a1(r.bottom_right);
  return out;
}

RangeRef parse_range(std::string_view text) {
  RangeRef r;
  std::size_t bang;
  if (!text.empty() && text.front() == '\'') {
    std::size_t i = 1;
    for (; i < text.size(); ++i) {
      if (text[i] == '\'') {
        if (i + 1 < text.size() && text[i + 1] == '\'') {
          r.sheet.push_back('\'');
          ++i;
          continue;
        }
        break;
      }
      r.sheet.push_back(text[i]);
    }
    bang = i + 1;
    if (bang >= text.size() || text[bang] != '!') {
      throw Error("malformed-address", "malformed range: " + std::string(text));
    }
  } else {
    bang = text.find('!');
    if (bang == std::string_view::npos) {
      throw Error("malformed-address", "range needs a sheet prefix: " + std::string(text));
    }
    r.sheet = std::string(text.substr(0, bang));
  }
  if (r.sheet.empty()) throw Error("malformed-address", "empty sheet in range: " + std::string(text));
  const std::string_view area = text.substr(bang + 1);
  const auto colon = area.find(':');
  const CellAddr a = a1_to_addr(area.substr(0, colon));
  const CellAddr b = colon == std::string_view::npos ? a : a1_to_addr(area.substr(colon + 1));
  r.top_left = {std::min(a.col, b.col), std::min(a.row, b.row)};
  r.bottom_right = {std::max(a.col, b.col), std::max(a.row, b.row)};
  return r;
}

const Sheet* Workbook::find_sheet(std::string_view sheet_name) const {
  for (const auto& s : sheets) {
    if (iequals(s.name, sheet_name)) return &s;
  }
  return nullptr;
}

namespace {

[[noreturn]] void violation(const std::string& where, const std::string& what) {
  throw Error("invariant-violation", where + ": " + what, where);
}

}  // namespace

void validate(const Workbook& wb) {
  std::set<std::string> seen;
  for (const auto& sheet : wb.sheets) {
    if (sheet.name.empty()) violation("sheets", "sheet name must be non-empty");
    std::string lowered = sheet.name;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (!seen.insert(lowered).second) {
      violation("sheets/" + sheet.name, "duplicate sheet name (case-insensitive)");
    }
    for (const auto& [addr, cell] : sheet.cells) {
      if (!in_grid(addr)) {
        throw Error("address-out-of-range", "cell outside grid on sheet " + sheet.name);
      }
      if (cell.is_empty()) {
        violation("sheets/" + sheet.name + "/" + addr_to_a1(addr), "fully-empty cell stored");
      }
      if (const auto* err = std::get_if<ErrorValue>(&cell.value); err && !is_error_code(err->code)) {
        violation("sheets/" + sheet.name + "/" + addr_to_a1(addr), "unknown error code " + err->code);
      }
      if (const auto* num = cell.number(); num && !std::isfinite(*num)) {
        violation("sheets/" + sheet.name + "/" + addr_to_a1(addr), "non-finite number");
      }
    }
  }
  for (const auto& [name, range] : wb.named_ranges) {
    if (!wb.find_sheet(range.sheet)) {
      violation("named_ranges/" + name, "target sheet '" + range.sheet + "' does not exist");
    }
    if (range.top_left.col > range.bottom_right.col || range.top_left.row > range.bottom_right.row) {
      violation("named_ranges/" + name, "range corners out of order");
    }
  }
  if (wb.security.sheet_protection_count < 0 ||
      wb.security.sheet_protection_count > static_cast<int>(wb.sheets.size())) {
    violation("security", "sheet_protection_count must be within 0..number of sheets");
  }
  if (wb.source_format == SourceFormat::encrypted_opaque &&
      (!wb.sheets.empty() || !wb.security.encrypted)) {
    violation("source_format", "encrypted_opaque requires no sheets and encrypted=true");
  }
}

std::optional<Cell> cell_at(const Workbook& wb, std::string_view sheet, const CellAddr& addr) {
  const Sheet* s = wb.find_sheet(sheet);
  if (!s) throw Error("unknown-sheet", "no sheet named '" + std::string(sheet) + "'");
  if (const Cell* c = s->find(addr)) return *c;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Canonical JSON

namespace {

template <typename T>
T get_field(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    violation(where + "/" + key, "missing or wrongly typed field");
  }
}

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) violation(where, "expected a JSON object");
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known,
                    const std::string& where) {
  for (const auto& item : obj.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      violation(where, "unknown field '" + item.key() + "'");
    }
  }
}

Cell parse_cell(const json& j, const std::string& where) {
  require_object(j, where);
  reject_unknown(j, {"v", "t", "f", "locked", "note"}, where);
  Cell cell;
  const json* v = j.contains("v") && !j.at("v").is_null() ? &j.at("v") : nullptr;
  std::string type;
  if (j.contains("t")) {
    type = get_field<std::string>(j, "t", where);
  } else if (!v) {
    type = "blank";
  } else if (v->is_number()) {
    type = "n";
  } else if (v->is_boolean()) {
    type = "b";
  } else if (v->is_string()) {
    type = is_error_code(v->get<std::string>()) ? "e" : "s";
  } else {
    violation(where + "/v", "unsupported value type");
  }

  if (type == "blank") {
    if (v) violation(where + "/v", "blank cell must not carry a value");
  } else if (!v) {
    violation(where + "/v", "missing value for type '" + type + "'");
  } else if (type == "n") {
    if (!v->is_number()) violation(where + "/v", "expected number");
    cell.value = v->get<double>();
  } else if (type == "s") {
    if (!v->is_string()) violation(where + "/v", "expected string");
    cell.value = v->get<std::string>();
  } else if (type == "b") {
    if (!v->is_boolean()) violation(where + "/v", "expected boolean");
    cell.value = v->get<bool>();
  } else if (type == "e") {
    if (!v->is_string() || !is_error_code(v->get<std::string>())) {
      violation(where + "/v", "expected one of the spreadsheet error codes");
    }
    cell.value = ErrorValue{v->get<std::string>()};
  } else {
    violation(where + "/t", "unknown cell type '" + type + "'");
  }
  if (j.contains("f") && !j.at("f").is_null()) {
    auto f = get_field<std::string>(j, "f", where);
    if (!f.empty() && f.front() == '=') f.erase(0, 1);
    if (f.empty()) violation(where + "/f", "empty formula");
    cell.formula = std::move(f);
  }
  if (j.contains("locked")) cell.locked = get_field<bool>(j, "locked", where);
  if (j.contains("note") && !j.at("note").is_null()) cell.note = get_field<std::string>(j, "note", where);
  if (cell.is_empty()) violation(where, "fully-empty cell stored");
  return cell;
}

std::vector<int> parse_index_list(const json& j, const std::string& where, int limit) {
  if (!j.is_array()) violation(where, "expected an array of indices");
  std::set<int> out;
  for (const auto& item : j) {
    if (!item.is_number_integer()) violation(where, "expected integer index");
    const int i = item.get<int>();
    if (i < 1 || i > limit) throw Error("address-out-of-range", where + ": index out of grid");
    out.insert(i);
  }
  return {out.begin(), out.end()};
}

Sheet parse_sheet(const json& j, const std::string& where) {
  require_object(j, where);
  reject_unknown(j, {"name", "protection_enabled", "hidden", "declared_purpose", "cells",
                     "hidden_rows", "hidden_cols"},
                 where);
  Sheet sheet;
  sheet.name = get_field<std::string>(j, "name", where);
  const std::string here = "sheets/" + sheet.name;
  if (j.contains("protection_enabled")) sheet.protection_enabled = get_field<bool>(j, "protection_enabled", here);
  if (j.contains("hidden")) sheet.hidden = get_field<bool>(j, "hidden", here);
  if (j.contains("declared_purpose")) {
    const auto text = get_field<std::string>(j, "declared_purpose", here);
    auto purpose = sheet_purpose_from_string(text);
    if (!purpose) violation(here + "/declared_purpose", "unknown purpose '" + text + "'");
    sheet.declared_purpose = *purpose;
  }
  if (j.contains("hidden_rows")) sheet.hidden_rows = parse_index_list(j.at("hidden_rows"), here + "/hidden_rows", kMaxRow);
  if (j.contains("hidden_cols")) sheet.hidden_cols = parse_index_list(j.at("hidden_cols"), here + "/hidden_cols", kMaxCol);
  if (j.contains("cells")) {
    const json& cells = j.at("cells");
    require_object(cells, here + "/cells");
    for (const auto& item : cells.items()) {
      const std::string cell_where = here + "/" + item.key();
      CellAddr addr;
      try {
        addr = a1_to_addr(item.key());
      } catch (const Error& e) {
        if (e.code() == "address-out-of-range") throw Error(e.code(), cell_where + ": " + e.what(), cell_where);
        violation(cell_where, "cell key is not a canonical A1 address");
      }
      if (addr_to_a1(addr) != item.key()) violation(cell_where, "cell key is not a canonical A1 address");
      sheet.cells.emplace(addr, parse_cell(item.value(), cell_where));
    }
  }
  return sheet;
}

ordered_json cell_json(const Cell& cell) {
  ordered_json j = ordered_json::object();
  std::visit(
      [&](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, Blank>) {
          j["t"] = "blank";
        } else if constexpr (std::is_same_v<V, double>) {
          j["t"] = "n";
          j["v"] = v;
        } else if constexpr (std::is_same_v<V, std::string>) {
          j["t"] = "s";
          j["v"] = v;
        } else if constexpr (std::is_same_v<V, bool>) {
          j["t"] = "b";
          j["v"] = v;
        } else {
          j["t"] = "e";
          j["v"] = v.code;
        }
      },
      cell.value);
  if (cell.formula) j["f"] = *cell.formula;
  j["locked"] = cell.locked;
  if (cell.note) j["note"] = *cell.note;
  return j;
}

}  // namespace

Workbook parse_canonical(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw Error("malformed-json", e.what());
  }
  require_object(doc, "$");
  reject_unknown(doc, {"name", "sheets", "named_ranges", "security", "source_format", "schema_version"}, "$");
  Workbook wb;
  wb.name = get_field<std::string>(doc, "name", "$");
  if (!doc.contains("sheets") || !doc.at("sheets").is_array()) violation("$/sheets", "expected an array");
  for (const auto& s : doc.at("sheets")) wb.sheets.push_back(parse_sheet(s, "sheets"));

  if (doc.contains("named_ranges")) {
    const json& names = doc.at("named_ranges");
    require_object(names, "named_ranges");
    for (const auto& item : names.items()) {
      if (!item.value().is_string()) violation("named_ranges/" + item.key(), "expected a range string");
      try {
        wb.named_ranges.emplace(item.key(), parse_range(item.value().get<std::string>()));
      } catch (const Error& e) {
        if (e.code() == "address-out-of-range") throw;
        violation("named_ranges/" + item.key(), e.what());
      }
    }
  }
  if (doc.contains("source_format")) {
    const auto f = get_field<std::string>(doc, "source_format", "$");
    if (f == "canonical_json") wb.source_format = SourceFormat::canonical_json;
    else if (f == "xlsx") wb.source_format = SourceFormat::xlsx;
    else if (f == "encrypted_opaque") wb.source_format = SourceFormat::encrypted_opaque;
    else violation("source_format", "unknown source format '" + f + "'");
  }
  if (doc.contains("security")) {
    const json& sec = doc.at("security");
    require_object(sec, "security");
    reject_unknown(sec, {"encrypted", "sheet_protection_count"}, "security");
    if (sec.contains("encrypted")) wb.security.encrypted = get_field<bool>(sec, "encrypted", "security");
    if (sec.contains("sheet_protection_count")) {
      wb.security.sheet_protection_count = get_field<int>(sec, "sheet_protection_count", "security");
    } else {
      wb.security.sheet_protection_count = static_cast<int>(std::count_if(
          wb.sheets.begin(), wb.sheets.end(), [](const Sheet& s) { return s.protection_enabled; }));
    }
  } else {
    wb.security.sheet_protection_count = static_cast<int>(std::count_if(
        wb.sheets.begin(), wb.sheets.end(), [](const Sheet& s) { return s.protection_enabled; }));
  }
  validate(wb);
  return wb;
}

std::string serialize_canonical(const Workbook& wb) {
  ordered_json doc = ordered_json::object();
  doc["name"] = wb.name;
  doc["sheets"] = ordered_json::array();
  for (const auto& sheet : wb.sheets) {
    ordered_json s = ordered_json::object();
    s["name"] = sheet.name;
    s["protection_enabled"] = sheet.protection_enabled;
    s["hidden"] = sheet.hidden;
    s["declared_purpose"] = std::string(to_string(sheet.declared_purpose));
    if (!sheet.hidden_rows.empty()) s["hidden_rows"] = sheet.hidden_rows;
    if (!sheet.hidden_cols.empty()) s["hidden_cols"] = sheet.hidden_cols;
    ordered_json cells = ordered_json::object();
    for (const auto& [addr, cell] : sheet.cells) cells[addr_to_a1(addr)] = cell_to_json(cell);
    s["cells"] = std::move(cells);
    doc["sheets"].push_back(std::move(s));
  }
  ordered_json names = ordered_json::object();
  for (const auto& [name, range] : wb.named_ranges) names[name] = format_range(range);
  doc["named_ranges"] = std::move(names);
  doc["security"] = {{"encrypted", wb.security.encrypted},
                     {"sheet_protection_count", wb.security.sheet_protection_count}};
  doc["source_format"] = std::string(to_string(wb.source_format));
  return doc.dump();
}

ordered_json cell_to_json(const Cell& cell) { return cell_json(cell); }

Cell cell_from_json(const json& j, const std::string& where) { return parse_cell(j, where); }

}  // namespace euc
