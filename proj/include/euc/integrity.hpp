#pragma once

#include <set>
#include <string>
#include <vector>

#include "euc/finding.hpp"
#include "euc/formula.hpp"
#include "euc/workbook.hpp"

namespace euc::integrity {

enum class Orientation { row, column };

struct FormulaRegion {
  std::string sheet;
  std::vector<CellAddr> cells;
  Orientation orientation = Orientation::row;

  friend bool operator==(const FormulaRegion&, const FormulaRegion&) = default;
};

inline constexpr std::size_t kMinRegionLength = 3;

struct Options {
  std::set<double> exempt_constants{0.0, 1.0, -1.0, 100.0};
  std::int64_t max_expanded_edges = formula::kMaxExpandedEdges;
};

/// Maximal horizontal and vertical runs (length >= 3) of contiguous parsable
/// formula cells. Per sheet: row runs first, then column runs.
std::vector<FormulaRegion> detect_regions(const Workbook& wb);

/// INT-01: minority formulas within a region that has a strict-majority form.
std::vector<Finding> check_inconsistent_formulas(const Workbook& wb);
/// INT-02
std::vector<Finding> check_error_values(const Workbook& wb);
/// INT-03
std::vector<Finding> check_hardcoded_constants(const Workbook& wb, const Options& opts = {});
/// INT-04. Range-expansion truncations are appended to `warnings` when given.
std::vector<Finding> check_circular_references(const Workbook& wb, const Options& opts = {},
                                               std::vector<std::string>* warnings = nullptr);
/// INT-05
std::vector<Finding> check_refs_to_blank(const Workbook& wb);

struct Result {
  std::vector<Finding> findings;  // sorted
  std::vector<std::string> warnings;
};

/// Runs every INT check whose id is in `enabled` (all when empty).
Result run_all(const Workbook& wb, const Options& opts = {},
               const std::set<std::string>& enabled = {});

inline const std::vector<std::string>& rule_ids() {
  static const std::vector<std::string> ids{"INT-01", "INT-02", "INT-03", "INT-04", "INT-05"};
  return ids;
}

}  // namespace euc::integrity
