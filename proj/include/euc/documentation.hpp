#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "euc/workbook.hpp"

namespace euc {

/// Contents of the Documentation template sheet. Column A holds a label and
/// column B its value; labels match case-insensitively and may end in ':'.
/// Two labels repeat: "Sheet Purpose" (B = sheet, C = purpose) and
/// "Hidden" (B = sheet whose hidden state, rows or columns are intentional).
struct Documentation {
  std::map<std::string, std::string> fields;  // lowercased label -> value
  std::vector<std::pair<std::string, std::string>> sheet_purposes;
  std::vector<std::string> hidden_sheets;

  std::optional<std::string> field(const std::string& lowercase_label) const;
};

Documentation read_documentation(const Sheet& sheet);

/// Applies "Sheet Purpose" rows to sheets still marked undeclared. Returns
/// one message per row that names an unknown sheet or purpose.
std::vector<std::string> apply_documented_purposes(Workbook& wb, const std::string& documentation_sheet);

}  // namespace euc
