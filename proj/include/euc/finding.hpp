#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "euc/workbook.hpp"

namespace euc {

enum class Severity { info, low, medium, high };

std::string_view to_string(Severity s) noexcept;
std::optional<Severity> severity_from_string(std::string_view s) noexcept;

struct Finding {
  std::string rule_id;
  Severity severity = Severity::info;
  std::string sheet;              // empty for workbook-level findings
  std::optional<CellAddr> addr;
  std::string message;
  std::string evidence;

  friend bool operator==(const Finding&, const Finding&) = default;
};

/// Orders by (sheet, row, col, rule_id); workbook- and sheet-level findings
/// sort ahead of cell findings on the same sheet.
bool finding_less(const Finding& a, const Finding& b);
void sort_findings(std::vector<Finding>& findings);

/// Identity used to decide whether a finding "reproduces" later.
bool same_location(const Finding& a, const Finding& b);

/// {"rule_id","severity","sheet","addr"?,"message","evidence"}
nlohmann::ordered_json finding_to_json(const Finding& f);
/// Throws Error("invalid-document") naming the bad field.
Finding finding_from_json(const nlohmann::json& j);

}  // namespace euc
