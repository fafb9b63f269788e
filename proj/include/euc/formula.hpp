#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "euc/workbook.hpp"

namespace euc::formula {

/// A single-cell reference exactly as written, `$` markers included.
struct Reference {
  std::optional<std::string> book;   // "[FY22.xlsx]" prefix, without brackets
  std::optional<std::string> sheet;  // sheet prefix, unquoted
  int col = 1;
  int row = 1;
  bool col_absolute = false;
  bool row_absolute = false;

  CellAddr addr() const { return {col, row}; }
  friend bool operator==(const Reference&, const Reference&) = default;
};

enum class NodeKind {
  number,
  text,
  boolean,
  error,
  reference,
  range,    // children: none; uses `ref` and `ref_end`
  name,     // defined name, e.g. CHK_TOTAL
  call,     // `text` holds the uppercased function name
  binary,   // `op` holds the operator, two children
  unary,    // `op` is "+", "-" (prefix) or "%" (postfix), one child
  group,    // parenthesized, one child
  opaque,   // array constant or structured reference kept verbatim
};

struct Node {
  NodeKind kind = NodeKind::number;
  double number = 0.0;
  bool boolean = false;
  std::string text;  // text literal, error code, name, function name, opaque text
  std::string op;
  Reference ref;
  Reference ref_end;
  std::vector<Node> children;

  friend bool operator==(const Node&, const Node&) = default;
};

using FormulaAst = Node;

// Builders used by tests and by the parser.
Node make_number(double v);
Node make_text(std::string v);
Node make_bool(bool v);
Node make_error(std::string code);
Node make_ref(Reference r);
Node make_range(Reference a, Reference b);
Node make_name(std::string name);
Node make_call(std::string name, std::vector<Node> args);
Node make_binary(std::string op, Node lhs, Node rhs);
Node make_unary(std::string op, Node operand);
Node make_group(Node inner);

/// Parses A1-grammar formula text (no leading '=').
/// Throws euc::Error with code syntax-error, unbalanced-parens or bad-reference;
/// the message carries the byte offset.
FormulaAst parse_formula(std::string_view text);

/// Prints without whitespace. Round-trips: parse_formula(print_formula(a)) == a
/// for every AST in the parser's image.
std::string print_formula(const FormulaAst& ast);

struct NormalizedFormula {
  std::string canonical_text;
  friend bool operator==(const NormalizedFormula&, const NormalizedFormula&) = default;
};

/// Rewrites relative reference components as R[d]/C[d] offsets from `host` and
/// absolute components as Rn/Cn.
NormalizedFormula normalize_r1c1(const FormulaAst& ast, const CellAddr& host);

/// Moves every relative reference component by (d_col, d_row); absolute
/// components stay. Throws address-out-of-range if a component leaves the grid.
FormulaAst translate(const FormulaAst& ast, int d_col, int d_row);

inline const std::set<std::string, std::less<>>& default_volatile_functions() {
  static const std::set<std::string, std::less<>> names{"NOW",  "TODAY",  "RAND",
                                                        "RANDBETWEEN", "OFFSET", "INDIRECT"};
  return names;
}

struct Precedents {
  std::set<RangeRef> ranges;  // single cells are 1x1 ranges
  std::set<std::string> names;  // defined names used (resolved by workbook-aware callers)
  bool has_external_ref = false;
  bool volatile_call = false;
  bool has_opaque = false;
};

/// Unqualified references inherit `host_sheet`; references into other
/// workbooks only set has_external_ref.
Precedents precedents(const FormulaAst& ast, std::string_view host_sheet,
                      const std::set<std::string, std::less<>>& volatile_functions =
                          default_volatile_functions());

/// Sheet-qualified cell key, ordered by (sheet, row, col).
struct CellKey {
  std::string sheet;
  CellAddr addr;
  friend bool operator==(const CellKey&, const CellKey&) = default;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

std::string to_string(const CellKey& key);

struct UnparsableFormula {
  CellKey cell;
  std::string formula;
  std::string error;
};

struct ReferenceIndex {
  std::map<CellKey, std::set<CellKey>> referenced_by;
  std::vector<UnparsableFormula> unparsable;
  std::vector<CellKey> truncated;  // formulas whose range expansion hit the cap
};

inline constexpr std::int64_t kMaxExpandedEdges = 10000;

/// Expands `p` against the workbook (defined names resolved, sheet names
/// matched case-insensitively). Stops after `cap` cells and reports truncation.
std::vector<CellKey> expand_precedents(const Workbook& wb, const Precedents& p,
                                       std::int64_t cap, bool* truncated);

/// Inverse of precedents over the whole workbook, ranges expanded.
ReferenceIndex referenced_by(const Workbook& wb);

/// Parses every formula in the workbook once. Cells whose formula fails to
/// parse are absent from `asts` and listed in `unparsable`.
struct ParsedWorkbook {
  std::map<CellKey, FormulaAst> asts;
  std::vector<UnparsableFormula> unparsable;
};
ParsedWorkbook parse_all(const Workbook& wb);

/// Canonical form of a formula for textual comparison: whitespace outside
/// string literals removed. Falls back to raw text when unparsable.
std::string whitespace_normalized(std::string_view formula);

}  // namespace euc::formula
