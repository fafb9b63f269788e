#include "euc/integrity.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace euc::integrity {

using formula::CellKey;
using formula::FormulaAst;
using formula::Node;
using formula::NodeKind;

namespace {

std::string region_label(const FormulaRegion& r) {
  return addr_to_a1(r.cells.front()) + ":" + addr_to_a1(r.cells.back());
}

std::string_view orientation_name(Orientation o) { return o == Orientation::row ? "row" : "column"; }

std::vector<FormulaRegion> regions_from(const Workbook& wb, const formula::ParsedWorkbook& parsed) {
  std::vector<FormulaRegion> out;
  for (const auto& sheet : wb.sheets) {
    auto parsable = [&](const CellAddr& a) { return parsed.asts.count(CellKey{sheet.name, a}) > 0; };
    std::vector<CellAddr> formula_cells;
    for (const auto& [addr, cell] : sheet.cells) {
      if (cell.formula && parsable(addr)) formula_cells.push_back(addr);
    }
    auto flush = [&](std::vector<CellAddr>& run, Orientation o) {
      if (run.size() >= kMinRegionLength) out.push_back({sheet.name, run, o});
      run.clear();
    };
    // formula_cells is row-major, so row runs fall out of one pass.
    std::vector<CellAddr> run;
    for (const auto& a : formula_cells) {
      if (!run.empty() && !(a.row == run.back().row && a.col == run.back().col + 1)) flush(run, Orientation::row);
      run.push_back(a);
    }
    flush(run, Orientation::row);

    std::vector<CellAddr> by_column = formula_cells;
    std::sort(by_column.begin(), by_column.end(), [](const CellAddr& x, const CellAddr& y) {
      return std::tie(x.col, x.row) < std::tie(y.col, y.row);
    });
    for (const auto& a : by_column) {
      if (!run.empty() && !(a.col == run.back().col && a.row == run.back().row + 1)) flush(run, Orientation::column);
      run.push_back(a);
    }
    flush(run, Orientation::column);
  }
  return out;
}

std::vector<Finding> inconsistent_from(const Workbook& wb, const formula::ParsedWorkbook& parsed) {
  std::vector<Finding> out;
  std::map<CellKey, Finding> cell_findings;  // one per cell; first region wins
  for (const auto& region : regions_from(wb, parsed)) {
    std::vector<std::string> forms;
    std::map<std::string, std::size_t> counts;
    for (const auto& a : region.cells) {
      forms.push_back(formula::normalize_r1c1(parsed.asts.at(CellKey{region.sheet, a}), a).canonical_text);
      ++counts[forms.back()];
    }
    if (counts.size() == 1) continue;
    const auto top = std::max_element(counts.begin(), counts.end(),
                                      [](const auto& x, const auto& y) { return x.second < y.second; });
    const std::size_t n = region.cells.size();
    if (top->second * 2 > n) {
      for (std::size_t i = 0; i < n; ++i) {
        if (forms[i] == top->first) continue;
        CellKey key{region.sheet, region.cells[i]};
        if (cell_findings.count(key)) continue;
        Finding f;
        f.rule_id = "INT-01";
        f.severity = Severity::high;
        f.sheet = region.sheet;
        f.addr = region.cells[i];
        f.message = "formula inconsistent with its " + std::string(orientation_name(region.orientation)) +
                    " region " + region_label(region);
        f.evidence = "majority " + top->first + " (" + std::to_string(top->second) + " of " +
                     std::to_string(n) + "); this cell " + forms[i];
        cell_findings.emplace(std::move(key), std::move(f));
      }
    } else {
      std::ostringstream ev;
      bool first = true;
      for (const auto& [form, count] : counts) {
        ev << (first ? "" : "; ") << form << " x" << count;
        first = false;
      }
      Finding f;
      f.rule_id = "INT-01";
      f.severity = Severity::info;
      f.sheet = region.sheet;
      f.addr = region.cells.front();
      f.message = "heterogeneous " + std::string(orientation_name(region.orientation)) + " region " +
                  region_label(region) + ": no formula holds a strict majority";
      f.evidence = ev.str();
      out.push_back(std::move(f));
    }
  }
  for (auto& [key, f] : cell_findings) out.push_back(std::move(f));
  sort_findings(out);
  return out;
}

// --- INT-03 ---------------------------------------------------------------

bool is_arithmetic_or_comparison(const Node& n) {
  return n.kind == NodeKind::binary && n.op != "&";
}

// Collapses unary/group wrappers around a numeric literal into its value.
std::optional<double> literal_value(const Node& n) {
  switch (n.kind) {
    case NodeKind::number: return n.number;
    case NodeKind::group: return literal_value(n.children[0]);
    case NodeKind::unary: {
      auto inner = literal_value(n.children[0]);
      if (!inner) return std::nullopt;
      if (n.op == "-") return -*inner;
      if (n.op == "%") return *inner / 100.0;
      return inner;
    }
    default: return std::nullopt;
  }
}

bool is_round_family(std::string_view fn) {
  return fn == "ROUND" || fn == "ROUNDUP" || fn == "ROUNDDOWN";
}

void scan_constants(const Node& n, bool arithmetic, const std::set<double>& exempt,
                    std::vector<std::string>& hits) {
  if (auto v = literal_value(n)) {
    if (arithmetic && !exempt.count(*v)) hits.push_back(formula::print_formula(n));
    return;
  }
  if (n.kind == NodeKind::call) {
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      if (is_round_family(n.text) && i == 1 && literal_value(n.children[i])) continue;
      scan_constants(n.children[i], false, exempt, hits);
    }
    return;
  }
  const bool child_arith = is_arithmetic_or_comparison(n) ||
                           ((n.kind == NodeKind::group || n.kind == NodeKind::unary) && arithmetic);
  for (const Node& c : n.children) scan_constants(c, child_arith, exempt, hits);
}

std::vector<Finding> constants_from(const formula::ParsedWorkbook& parsed, const Options& opts) {
  std::vector<Finding> out;
  for (const auto& [key, ast] : parsed.asts) {
    std::vector<std::string> hits;
    // A formula that is nothing but a literal hard-codes that literal.
    scan_constants(ast, true, opts.exempt_constants, hits);
    if (hits.empty()) continue;
    Finding f;
    f.rule_id = "INT-03";
    f.severity = Severity::medium;
    f.sheet = key.sheet;
    f.addr = key.addr;
    f.message = "hard-coded constant in formula; move it to a labelled input cell";
    std::ostringstream ev;
    for (std::size_t i = 0; i < hits.size(); ++i) ev << (i ? ", " : "") << hits[i];
    f.evidence = ev.str();
    out.push_back(std::move(f));
  }
  sort_findings(out);
  return out;
}

// --- INT-04 ---------------------------------------------------------------

std::vector<Finding> cycles_from(const Workbook& wb, const formula::ParsedWorkbook& parsed,
                                 const Options& opts, std::vector<std::string>* warnings) {
  std::vector<CellKey> nodes;
  std::map<CellKey, std::size_t> index;
  for (const auto& [key, ast] : parsed.asts) {
    index.emplace(key, nodes.size());
    nodes.push_back(key);
  }
  std::vector<std::vector<std::size_t>> edges(nodes.size());
  std::vector<bool> self_loop(nodes.size(), false);
  for (const auto& [key, ast] : parsed.asts) {
    bool truncated = false;
    const auto targets = formula::expand_precedents(wb, formula::precedents(ast, key.sheet),
                                                    opts.max_expanded_edges, &truncated);
    if (truncated && warnings) {
      warnings->push_back("INT-04: range expansion capped at " + std::to_string(opts.max_expanded_edges) +
                          " cells for " + formula::to_string(key));
    }
    const std::size_t from = index.at(key);
    for (const auto& t : targets) {
      auto it = index.find(t);
      if (it == index.end()) continue;
      if (it->second == from) self_loop[from] = true;
      edges[from].push_back(it->second);
    }
  }

  // Iterative Tarjan; deep dependency chains must not overflow the stack.
  const std::size_t n = nodes.size();
  constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
  std::vector<std::size_t> order(n, kUnvisited), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> components;
  std::size_t counter = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (order[root] != kUnvisited) continue;
    std::vector<std::pair<std::size_t, std::size_t>> call;  // (node, next edge)
    call.emplace_back(root, 0);
    order[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& [v, next] = call.back();
      if (next < edges[v].size()) {
        const std::size_t w = edges[v][next++];
        if (order[w] == kUnvisited) {
          order[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], order[w]);
        }
        continue;
      }
      if (low[v] == order[v]) {
        std::vector<std::size_t> comp;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != v);
        components.push_back(std::move(comp));
      }
      const std::size_t finished = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[finished]);
    }
  }

  std::vector<Finding> out;
  for (auto& comp : components) {
    if (comp.size() < 2 && !self_loop[comp.front()]) continue;
    std::vector<CellKey> cells;
    for (std::size_t i : comp) cells.push_back(nodes[i]);
    std::sort(cells.begin(), cells.end());
    Finding f;
    f.rule_id = "INT-04";
    f.severity = Severity::high;
    f.sheet = cells.front().sheet;
    f.addr = cells.front().addr;
    f.message = cells.size() == 1 ? "formula refers to itself"
                                  : "circular reference through " + std::to_string(cells.size()) + " cells";
    std::ostringstream ev;
    for (std::size_t i = 0; i < cells.size(); ++i) ev << (i ? ", " : "") << formula::to_string(cells[i]);
    f.evidence = ev.str();
    out.push_back(std::move(f));
  }
  sort_findings(out);
  return out;
}

// --- INT-05 ---------------------------------------------------------------

void single_refs(const Node& n, std::vector<const formula::Reference*>& out) {
  if (n.kind == NodeKind::reference && !n.ref.book) out.push_back(&n.ref);
  for (const Node& c : n.children) single_refs(c, out);
}

std::vector<Finding> blanks_from(const Workbook& wb, const formula::ParsedWorkbook& parsed) {
  std::vector<Finding> out;
  for (const auto& [key, ast] : parsed.asts) {
    std::vector<const formula::Reference*> refs;
    single_refs(ast, refs);
    std::set<std::string> blanks;
    for (const auto* r : refs) {
      const Sheet* target = wb.find_sheet(r->sheet ? *r->sheet : key.sheet);
      if (!target || target->find(r->addr())) continue;
      blanks.insert(formula::to_string(CellKey{target->name, r->addr()}));
    }
    if (blanks.empty()) continue;
    Finding f;
    f.rule_id = "INT-05";
    f.severity = Severity::low;
    f.sheet = key.sheet;
    f.addr = key.addr;
    f.message = "formula refers to a blank cell";
    std::ostringstream ev;
    bool first = true;
    for (const auto& b : blanks) {
      ev << (first ? "" : ", ") << b;
      first = false;
    }
    f.evidence = ev.str();
    out.push_back(std::move(f));
  }
  sort_findings(out);
  return out;
}

std::vector<Finding> errors_in(const Workbook& wb) {
  std::vector<Finding> out;
  for (const auto& sheet : wb.sheets) {
    for (const auto& [addr, cell] : sheet.cells) {
      const auto* err = std::get_if<ErrorValue>(&cell.value);
      if (!err) continue;
      out.push_back({"INT-02", Severity::high, sheet.name, addr, "cell holds an error value",
                     err->code + (cell.formula ? " from " + *cell.formula : std::string())});
    }
  }
  sort_findings(out);
  return out;
}

}  // namespace

std::vector<FormulaRegion> detect_regions(const Workbook& wb) {
  return regions_from(wb, formula::parse_all(wb));
}

std::vector<Finding> check_inconsistent_formulas(const Workbook& wb) {
  return inconsistent_from(wb, formula::parse_all(wb));
}

std::vector<Finding> check_error_values(const Workbook& wb) { return errors_in(wb); }

std::vector<Finding> check_hardcoded_constants(const Workbook& wb, const Options& opts) {
  return constants_from(formula::parse_all(wb), opts);
}

std::vector<Finding> check_circular_references(const Workbook& wb, const Options& opts,
                                               std::vector<std::string>* warnings) {
  return cycles_from(wb, formula::parse_all(wb), opts, warnings);
}

std::vector<Finding> check_refs_to_blank(const Workbook& wb) {
  return blanks_from(wb, formula::parse_all(wb));
}

Result run_all(const Workbook& wb, const Options& opts, const std::set<std::string>& enabled) {
  auto on = [&](const char* id) { return enabled.empty() || enabled.count(id) > 0; };
  const auto parsed = formula::parse_all(wb);
  Result result;
  for (const auto& u : parsed.unparsable) {
    result.warnings.push_back("unparsable formula at " + formula::to_string(u.cell) + ": " + u.error);
  }
  auto append = [&](std::vector<Finding> more) {
    result.findings.insert(result.findings.end(), std::make_move_iterator(more.begin()),
                           std::make_move_iterator(more.end()));
  };
  if (on("INT-01")) append(inconsistent_from(wb, parsed));
  if (on("INT-02")) append(errors_in(wb));
  if (on("INT-03")) append(constants_from(parsed, opts));
  if (on("INT-04")) append(cycles_from(wb, parsed, opts, &result.warnings));
  if (on("INT-05")) append(blanks_from(wb, parsed));
  sort_findings(result.findings);
  return result;
}

}  // namespace euc::integrity
