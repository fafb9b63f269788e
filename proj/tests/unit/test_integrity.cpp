#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "../support/int01_oracle.hpp"
#include "euc/integrity.hpp"

using namespace euc;
using namespace euc::integrity;

namespace {

Workbook one_sheet(std::initializer_list<std::pair<const char*, Cell>> cells) {
  Workbook wb;
  wb.name = "t";
  Sheet s;
  s.name = "Calc";
  for (const auto& [a1, cell] : cells) s.cells[a1_to_addr(a1)] = cell;
  wb.sheets.push_back(std::move(s));
  return wb;
}

Cell f(const char* text) { return Cell{0.0, std::string(text), true, std::nullopt}; }
Cell n(double v) { return Cell{v, std::nullopt, true, std::nullopt}; }

}  // namespace

TEST_CASE("detect_regions") {
  const auto col = detect_regions(one_sheet({{"B2", f("A2*2")}, {"B3", f("A3*2")}, {"B4", f("A4*2")}, {"B5", f("A5*2")}}));
  REQUIRE(col.size() == 1);
  CHECK(col[0].orientation == Orientation::column);
  CHECK(col[0].cells.size() == 4);

  CHECK(detect_regions(one_sheet({{"C3", f("A1")}})).empty());

  Workbook block = one_sheet({});
  for (int r = 1; r <= 3; ++r) {
    for (int c = 2; c <= 4; ++c) block.sheets[0].cells[{c, r}] = f("A1");
  }
  const auto regions = detect_regions(block);
  CHECK(std::count_if(regions.begin(), regions.end(), [](auto& r) { return r.orientation == Orientation::row; }) == 3);
  CHECK(std::count_if(regions.begin(), regions.end(), [](auto& r) { return r.orientation == Orientation::column; }) == 3);

  // An unparsable formula breaks the run.
  CHECK(detect_regions(one_sheet({{"B2", f("A2")}, {"B3", f("SUM(")}, {"B4", f("A4")}, {"B5", f("A5")}})).empty());
}

TEST_CASE("INT-01 inconsistent formulas") {
  const auto found = check_inconsistent_formulas(
      one_sheet({{"B2", f("A2*2")}, {"B3", f("A3*2")}, {"B4", f("A4+2")}, {"B5", f("A5*2")}}));
  REQUIRE(found.size() == 1);
  CHECK(found[0].rule_id == "INT-01");
  CHECK(found[0].severity == Severity::high);
  CHECK(*found[0].addr == a1_to_addr("B4"));
  CHECK(found[0].evidence == "majority RC[-1]*2 (3 of 4); this cell RC[-1]+2");

  CHECK(check_inconsistent_formulas(
            one_sheet({{"B2", f("A2*2")}, {"B3", f("A3*2")}, {"B4", f("A4*2")}, {"B5", f("A5*2")}}))
            .empty());

  const auto split = check_inconsistent_formulas(
      one_sheet({{"B2", f("A2*2")}, {"B3", f("A3*2")}, {"B4", f("A4+2")}, {"B5", f("A5+2")}}));
  REQUIRE(split.size() == 1);
  CHECK(split[0].severity == Severity::info);
  CHECK(split[0].message.find("heterogeneous column region B2:B5") == 0);
}

TEST_CASE("INT-01 matches the brute-force oracle on random grids") {
  std::mt19937 rng(4242);
  for (int i = 0; i < 300; ++i) {
    const auto grid = testing::make_template_grid(rng);
    const auto expected = testing::int01_oracle(grid);
    const auto observed = testing::int01_observed(check_inconsistent_formulas(grid.workbook));
    REQUIRE(observed == expected);
  }
}

TEST_CASE("INT-02 error values") {
  CHECK(check_error_values(one_sheet({{"A1", Cell{ErrorValue{"#REF!"}, std::nullopt, true, std::nullopt}}})).size() == 1);
  CHECK(check_error_values(one_sheet({{"A1", n(1)}})).empty());
  const Cell e{ErrorValue{"#N/A"}, std::nullopt, true, std::nullopt};
  CHECK(check_error_values(one_sheet({{"A1", e}, {"B2", e}, {"C3", e}})).size() == 3);
}

TEST_CASE("INT-03 hard-coded constants") {
  const auto hit = check_hardcoded_constants(one_sheet({{"B1", f("A1*1.05")}}));
  REQUIRE(hit.size() == 1);
  CHECK(hit[0].evidence == "1.05");
  CHECK(check_hardcoded_constants(one_sheet({{"B1", f("A1*B1")}})).empty());
  CHECK(check_hardcoded_constants(one_sheet({{"B1", f("ROUND(A1,2)")}})).empty());
  CHECK(check_hardcoded_constants(one_sheet({{"B1", f("A1*100-1+0")}})).empty());
  CHECK(check_hardcoded_constants(one_sheet({{"B1", f("A1*-1")}})).empty());
  CHECK(check_hardcoded_constants(one_sheet({{"B1", f("ROUND(A1*1.2,2)")}})).size() == 1);
  CHECK(check_hardcoded_constants(one_sheet({{"B1", f("A1*5%")}})).size() == 1);
  CHECK(check_hardcoded_constants(one_sheet({{"B1", f("A1>500")}})).size() == 1);

  Options opts;
  opts.exempt_constants.insert(1.05);
  CHECK(check_hardcoded_constants(one_sheet({{"B1", f("A1*1.05")}}), opts).empty());
}

TEST_CASE("INT-04 circular references") {
  const auto pair = check_circular_references(one_sheet({{"A1", f("B1")}, {"B1", f("A1")}}));
  REQUIRE(pair.size() == 1);
  CHECK(pair[0].evidence == "Calc!A1, Calc!B1");
  const auto self = check_circular_references(one_sheet({{"A1", f("A1")}}));
  REQUIRE(self.size() == 1);
  CHECK(self[0].message == "formula refers to itself");
  CHECK(check_circular_references(one_sheet({{"A1", n(1)}, {"B1", f("A1")}, {"C1", f("B1")}})).empty());
  // Through a range and a defined name.
  Workbook wb = one_sheet({{"A1", f("SUM(A2:A3)")}, {"A3", f("Total")}});
  wb.named_ranges["Total"] = RangeRef{"Calc", {1, 1}, {1, 1}};
  CHECK(check_circular_references(wb).size() == 1);
}

TEST_CASE("INT-04 long chains do not recurse") {
  Workbook wb = one_sheet({});
  for (int r = 2; r <= 50000; ++r) wb.sheets[0].cells[{1, r}] = f(("A" + std::to_string(r - 1)).c_str());
  wb.sheets[0].cells[{1, 1}] = f("A50000");
  const auto found = check_circular_references(wb);
  REQUIRE(found.size() == 1);
  CHECK(found[0].message == "circular reference through 50000 cells");
}

TEST_CASE("INT-04 caps range expansion with a warning") {
  Workbook wb = one_sheet({{"A1", f("SUM(B1:B20000)")}});
  std::vector<std::string> warnings;
  CHECK(check_circular_references(wb, {}, &warnings).empty());
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("capped at 10000") != std::string::npos);
}

TEST_CASE("INT-05 references to blank cells") {
  CHECK(check_refs_to_blank(one_sheet({{"B1", f("A1*2")}})).size() == 1);
  CHECK(check_refs_to_blank(one_sheet({{"B1", f("SUM(A1:A10)")}})).empty());
  CHECK(check_refs_to_blank(one_sheet({{"A1", n(3)}, {"B1", f("A1*2")}})).empty());
}

TEST_CASE("run_all is deterministic and sorted") {
  const Workbook wb = one_sheet({{"A1", f("A1")},
                                 {"B2", f("A2*2")},
                                 {"B3", f("A3*2")},
                                 {"B4", f("A4+2")},
                                 {"C9", Cell{ErrorValue{"#DIV/0!"}, std::string("1/0"), true, std::nullopt}}});
  const auto a = run_all(wb);
  const auto b = run_all(wb);
  CHECK(a.findings == b.findings);
  CHECK(std::is_sorted(a.findings.begin(), a.findings.end(), finding_less));
  CHECK(run_all(wb, {}, {"INT-02"}).findings.size() == 1);
}
