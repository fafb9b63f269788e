#pragma once

#include <random>
#include <string>

#include "euc/workbook.hpp"

namespace euc::testing {

// Random cell contents over a small grid so that pairs overlap often.
inline Cell random_cell(std::mt19937& rng) {
  static const char* formulas[] = {"A1*2", "A1*3", "SUM(A1:A4)", "B2+C3", "IF(A1>0,1,0)", "Other!A1", "[ext.xlsx]S!A1"};
  static const char* texts[] = {"Rate", "Total", "Units", ""};
  Cell c;
  switch (rng() % 5) {
    case 0: c.value = static_cast<double>(rng() % 200) - 50.0; break;
    case 1: c.value = std::string(texts[rng() % 4]); break;
    case 2: c.value = (rng() % 2) == 0; break;
    case 3: c.value = ErrorValue{"#REF!"}; break;
    default:
      c.formula = formulas[rng() % 7];
      c.value = static_cast<double>(rng() % 10);
      break;
  }
  c.locked = (rng() % 4) != 0;
  return c;
}

inline Sheet random_sheet(std::mt19937& rng, const std::string& name) {
  Sheet s;
  s.name = name;
  const int n = static_cast<int>(rng() % 12);
  for (int i = 0; i < n; ++i) s.cells[{1 + static_cast<int>(rng() % 4), 1 + static_cast<int>(rng() % 5)}] = random_cell(rng);
  return s;
}

inline Workbook random_workbook(std::mt19937& rng) {
  static const char* names[] = {"Inputs", "Calc", "Outputs", "Other"};
  Workbook wb;
  wb.name = "gen";
  for (const char* name : names) {
    if (rng() % 3 != 0) wb.sheets.push_back(random_sheet(rng, name));
  }
  return wb;
}

// A variant of `wb`: a few cells edited, added or removed, sometimes a sheet
// added or dropped.
inline Workbook mutate_workbook(const Workbook& wb, std::mt19937& rng) {
  Workbook out = wb;
  for (auto& s : out.sheets) {
    const int edits = static_cast<int>(rng() % 4);
    for (int i = 0; i < edits; ++i) {
      const CellAddr a{1 + static_cast<int>(rng() % 4), 1 + static_cast<int>(rng() % 5)};
      if (rng() % 3 == 0) {
        s.cells.erase(a);
      } else {
        s.cells[a] = random_cell(rng);
      }
    }
  }
  if (!out.sheets.empty() && rng() % 5 == 0) out.sheets.erase(out.sheets.begin() + rng() % out.sheets.size());
  if (rng() % 5 == 0 && !out.find_sheet("Extra")) out.sheets.push_back(random_sheet(rng, "Extra"));
  return out;
}

}  // namespace euc::testing
