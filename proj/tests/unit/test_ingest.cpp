#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <random>
#include <sstream>

#include "euc/documentation.hpp"
#include "euc/error.hpp"
#include "euc/ingest.hpp"

using namespace euc;

namespace {

const std::string kDir = std::string(EUC_FIXTURE_DIR) + "/xlsx/";

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::uint8_t> bytes_of(std::string_view s) { return {s.begin(), s.end()}; }

std::string code_of(std::span<const std::uint8_t> bytes) {
  try {
    import_xlsx(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST_CASE("sniff_format") {
  CHECK(sniff_format(bytes_of("PK\x03\x04rest")) == SniffedFormat::xlsx_zip);
  const std::uint8_t cfb[] = {0xD0, 0xCF, 0x11, 0xE0, 0xA1, 0xB1, 0x1A, 0xE1, 0x00};
  CHECK(sniff_format(cfb) == SniffedFormat::cfb_encrypted);
  CHECK(sniff_format({}) == SniffedFormat::unknown);
  CHECK(sniff_format(bytes_of("PK\x03")) == SniffedFormat::unknown);
  CHECK(sniff_format(bytes_of("{\"name\":1}")) == SniffedFormat::unknown);
}

TEST_CASE("fixtures import to the hand-checked canonical documents") {
  for (const char* stem : {"hello", "hello_shared", "features", "unsupported", "encrypted"}) {
    INFO(stem);
    const IngestReport report = load_workbook_file(kDir + stem + ".xlsx");
    const Workbook expected = parse_canonical(slurp(kDir + stem + ".expected.json"));
    CHECK(report.workbook == expected);
    CHECK(serialize_canonical(report.workbook) == serialize_canonical(load_workbook_file(kDir + stem + ".xlsx").workbook));
  }
}

TEST_CASE("import examples") {
  const auto hello = load_workbook_file(kDir + "hello_shared.xlsx").workbook;
  CHECK(*hello.sheets.at(0).cells.at({1, 1}).text() == "hello");

  const auto features = load_workbook_file(kDir + "features.xlsx");
  CHECK(features.warnings.empty());
  const Cell& b2 = features.workbook.sheets.at(0).cells.at({2, 2});
  CHECK(*b2.formula == "A1*2");
  CHECK(*b2.number() == 10.0);

  const auto enc = load_workbook_file(kDir + "encrypted.xlsx");
  CHECK(enc.workbook.source_format == SourceFormat::encrypted_opaque);
  CHECK(enc.workbook.security.encrypted);
  REQUIRE(enc.warnings.size() == 1);
  CHECK(enc.warnings[0].code == "encrypted-container");
}

TEST_CASE("unsupported constructs degrade to warnings") {
  const auto report = load_workbook_file(kDir + "unsupported.xlsx");
  std::vector<std::pair<std::string, std::string>> seen;
  for (const auto& w : report.warnings) seen.emplace_back(w.code, w.location);
  const std::vector<std::pair<std::string, std::string>> expected = {
      {"unsupported-construct", "Data"},
      {"bad-shared-string", "Data!A1"},
      {"date-cell", "Data!B1"},
      {"bad-cell-value", "Data!C1"},
      {"array-formula", "Data!A2"},
      {"unsupported-construct", "Data!B2"},
      {"defined-name-skipped", "xl/workbook.xml#_xlnm.Print_Area"},
      {"defined-name-skipped", "xl/workbook.xml#Spread"},
      {"defined-name-scope", "xl/workbook.xml#Local"},
      {"unsupported-part", "xl/comments1.xml"},
      {"unsupported-part", "xl/vbaProject.bin"},
  };
  CHECK(seen == expected);
}

TEST_CASE("errors") {
  CHECK(code_of(bytes_of("hello world")) == "not-a-spreadsheet");
  CHECK(code_of({}) == "not-a-spreadsheet");

  const std::string features = slurp(kDir + "features.xlsx");
  CHECK(code_of(bytes_of(features.substr(0, features.size() / 2))) == "corrupt-zip");
  std::string flipped = features;
  // Damage the compressed payload of the first worksheet; the first match is its local header.
  const std::string part = "xl/worksheets/sheet1.xml";
  const auto at = flipped.find(part) + part.size() + 4;
  flipped[at] = static_cast<char>(flipped[at] ^ 0x5A);
  CHECK(code_of(bytes_of(flipped)) == "corrupt-zip");

  CHECK(code_of(bytes_of(slurp(kDir + "missing_sheet.xlsx"))) == "missing-required-part");
}

TEST_CASE("load_workbook accepts canonical JSON") {
  const auto r = load_workbook(bytes_of("  {\"name\":\"w\",\"sheets\":[]}"), "ignored");
  CHECK(r.workbook.name == "w");
  CHECK(r.warnings.empty());
  CHECK(workbook_name_from_path("/tmp/a/model_v2.1_20240131.xlsx") == "model_v2.1_20240131");
}

TEST_CASE("documentation sheet") {
  const Workbook wb = parse_canonical(R"({"name":"w","sheets":[{"name":"Documentation","cells":{
      "A1":{"v":"Purpose:"},"B1":{"v":"Forecast"},
      "A2":{"v":"OWNER"},"B2":{"v":"Ana"},
      "A3":{"v":"Version"},"B3":{"v":2},
      "A4":{"v":"Hidden"},"B4":{"v":"Scratch"},
      "A5":{"v":"Last Updated"}}}]})");
  const Documentation doc = read_documentation(wb.sheets[0]);
  CHECK(*doc.field("purpose") == "Forecast");
  CHECK(*doc.field("owner") == "Ana");
  CHECK(doc.field("version").has_value());
  CHECK_FALSE(doc.field("last updated").has_value());
  CHECK(doc.hidden_sheets == std::vector<std::string>{"Scratch"});
}

TEST_CASE("damaged packages fail with coded errors, never crash") {
  const std::string original = slurp(kDir + "features.xlsx");
  std::mt19937 rng(99);
  std::uniform_int_distribution<std::size_t> pos(0, original.size() - 1);
  std::uniform_int_distribution<int> byte(0, 255);
  int imported = 0, rejected = 0;
  for (int i = 0; i < 400; ++i) {
    std::string damaged = original;
    for (int k = 0; k < 1 + i % 4; ++k) damaged[pos(rng)] = static_cast<char>(byte(rng));
    try {
      import_xlsx(bytes_of(damaged));
      ++imported;
    } catch (const Error& e) {
      const std::string code = e.code();
      CHECK((code == "corrupt-zip" || code == "missing-required-part" || code == "not-a-spreadsheet" ||
             code == "invariant-violation"));
      ++rejected;
    }
  }
  CHECK(imported + rejected == 400);
}
