#include "euc/documentation.hpp"

#include <algorithm>
#include <cctype>

namespace euc {

namespace {

std::string cell_text(const Sheet& sheet, int col, int row) {
  const Cell* c = sheet.find({col, row});
  if (!c) return "";
  if (const auto* t = c->text()) return *t;
  return "";
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string label_key(std::string label) {
  label = trim(std::move(label));
  if (!label.empty() && label.back() == ':') label.pop_back();
  label = trim(std::move(label));
  std::transform(label.begin(), label.end(), label.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return label;
}

}  // namespace

std::optional<std::string> Documentation::field(const std::string& lowercase_label) const {
  auto it = fields.find(lowercase_label);
  if (it == fields.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

Documentation read_documentation(const Sheet& sheet) {
  Documentation doc;
  int last_row = 0;
  for (const auto& [addr, cell] : sheet.cells) last_row = std::max(last_row, addr.row);
  for (int row = 1; row <= last_row; ++row) {
    const std::string key = label_key(cell_text(sheet, 1, row));
    if (key.empty()) continue;
    std::string value = trim(cell_text(sheet, 2, row));
    if (value.empty()) {
      // Non-text values (a version number, a date serial) still count as filled in.
      if (const Cell* c = sheet.find({2, row}); c && !std::holds_alternative<Blank>(c->value)) value = "<value>";
    }
    if (key == "sheet purpose") {
      doc.sheet_purposes.emplace_back(value, trim(cell_text(sheet, 3, row)));
    } else if (key == "hidden") {
      if (!value.empty()) doc.hidden_sheets.push_back(value);
    } else if (!doc.fields.count(key)) {
      doc.fields[key] = value;
    }
  }
  return doc;
}

std::vector<std::string> apply_documented_purposes(Workbook& wb, const std::string& documentation_sheet) {
  std::vector<std::string> problems;
  const Sheet* doc_sheet = wb.find_sheet(documentation_sheet);
  if (!doc_sheet) return problems;
  const Documentation doc = read_documentation(*doc_sheet);
  for (const auto& [sheet_name, purpose_text] : doc.sheet_purposes) {
    auto purpose = sheet_purpose_from_string(purpose_text);
    auto target = std::find_if(wb.sheets.begin(), wb.sheets.end(),
                               [&](const Sheet& s) { return iequals(s.name, sheet_name); });
    if (target == wb.sheets.end()) {
      problems.push_back("Sheet Purpose row names unknown sheet '" + sheet_name + "'");
    } else if (!purpose) {
      problems.push_back("Sheet Purpose row for '" + sheet_name + "' has unknown purpose '" + purpose_text + "'");
    } else if (target->declared_purpose == SheetPurpose::undeclared) {
      target->declared_purpose = *purpose;
    }
  }
  return problems;
}

}  // namespace euc
