#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <httplib.h>

#include <random>

#include "../support/files.hpp"
#include "../support/process.hpp"
#include "euc/changes.hpp"
#include "euc/standards.hpp"

using namespace euc;
using euc::testing::fixture_path;
using nlohmann::json;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() / ("euc-cli-" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

testing::RunResult eucctl(const std::vector<std::string>& args, const std::filesystem::path& scratch) {
  std::vector<std::string> full{EUCCTL_PATH};
  full.insert(full.end(), args.begin(), args.end());
  return testing::run(full, scratch);
}

}  // namespace

TEST_CASE("audit exit codes") {
  TempDir tmp;
  auto golden = eucctl({"audit", fixture_path("audit/remediated.wb.json"), "--format", "json"}, tmp.path);
  CHECK(golden.code == 0);
  CHECK(json::parse(golden.out)["compliance_score"] == 1.0);

  CHECK(eucctl({"audit", fixture_path("audit/defect_log01.wb.json"), "--fail-on", "high"}, tmp.path).code == 2);
  // A medium finding passes a high gate and fails the default one.
  CHECK(eucctl({"audit", fixture_path("audit/defect_lab01.wb.json"), "--fail-on", "high"}, tmp.path).code == 0);
  CHECK(eucctl({"audit", fixture_path("audit/defect_lab01.wb.json")}, tmp.path).code == 2);

  const auto missing = eucctl({"audit", (tmp.path / "missing.xlsx").string()}, tmp.path);
  CHECK(missing.code == 1);
  CHECK(missing.err.find("io-error") != std::string::npos);

  std::ofstream(tmp.path / "bad.json") << R"({"bogus_key": 1})";
  CHECK(eucctl({"audit", fixture_path("audit/remediated.wb.json"), "--config", (tmp.path / "bad.json").string()},
               tmp.path)
            .code == 1);
  CHECK(eucctl({"audit", fixture_path("audit/remediated.wb.json"), "--fail-on", "extreme"}, tmp.path).code == 1);
  CHECK(eucctl({"audit", fixture_path("xlsx/encrypted.xlsx"), "--format", "json"}, tmp.path).code == 0);
}

TEST_CASE("audit JSON round-trips through the report parser") {
  TempDir tmp;
  const auto r = eucctl({"audit", fixture_path("audit/typical.wb.json"), "--format", "json", "--at",
                         "2024-01-31T00:00:00Z"},
                        tmp.path);
  REQUIRE(r.code == 2);
  const auto report = standards::parse_report(r.out);
  CHECK(report.compliance_score() == 0.5);
  CHECK(json::parse(r.out)["schema_version"] == standards::kSchemaVersion);

  std::ofstream(tmp.path / "report.json") << r.out;
  const auto plan = eucctl({"plan", (tmp.path / "report.json").string()}, tmp.path);
  CHECK(plan.code == 0);
  const auto parsed = standards::parse_plan(plan.out);
  CHECK(parsed.effort_hundredths == 350);
  CHECK(parsed.items.size() == report.findings.size());

  const auto clean = eucctl({"audit", fixture_path("audit/remediated.wb.json"), "--format", "json"}, tmp.path);
  std::ofstream(tmp.path / "clean.json") << clean.out;
  const auto empty = eucctl({"plan", (tmp.path / "clean.json").string()}, tmp.path);
  CHECK(empty.code == 0);
  CHECK(standards::parse_plan(empty.out).items.empty());
}

TEST_CASE("diff exit codes") {
  TempDir tmp;
  const auto base = fixture_path("diff/base.wb.json");
  CHECK(eucctl({"diff", base, base}, tmp.path).code == 0);
  CHECK(eucctl({"diff", base, fixture_path("diff/value_edit.wb.json")}, tmp.path).code == 3);
  CHECK(eucctl({"diff", base, fixture_path("diff/locked_formula_edit.wb.json")}, tmp.path).code == 3);
  const auto alert = eucctl({"diff", base, fixture_path("diff/locked_formula_edit.wb.json"), "--rules",
                             fixture_path("diff/locked_rules.json"), "--format", "json"},
                            tmp.path);
  CHECK(alert.code == 4);
  const auto j = json::parse(alert.out);
  CHECK(j["schema_version"] == 1);
  CHECK(j["triggered_rules"] == json::array({"formula_change_in_locked"}));
  CHECK(j["changes"][0]["kind"] == "formula_changed");
  CHECK(eucctl({"diff", base, (tmp.path / "nope.json").string()}, tmp.path).code == 1);
}

TEST_CASE("convert prints canonical JSON") {
  TempDir tmp;
  const auto r = eucctl({"convert", fixture_path("xlsx/hello.xlsx")}, tmp.path);
  CHECK(r.code == 0);
  CHECK(json::parse(r.out) == json::parse(testing::slurp(fixture_path("xlsx/hello.expected.json"))));
}

TEST_CASE("seed-demo, serve and the data-dir lock") {
  TempDir tmp;
  const std::string data = (tmp.path / "data").string();
  CHECK(eucctl({"seed-demo", "--data-dir", data}, tmp.path).code == 0);
  const auto again = eucctl({"seed-demo", "--data-dir", data}, tmp.path);
  CHECK(again.code == 1);

  testing::Child server({EUCCTL_PATH, "serve", "--port", "0", "--data-dir", data}, tmp.path);
  const int port = server.wait_for_port(std::chrono::seconds(10));
  REQUIRE(port > 0);
  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/api/summary");
  REQUIRE(res);
  const auto summary = json::parse(res->body);
  CHECK(summary["active_by_category"]["financial"] == 700);
  CHECK(summary["active_by_category"]["operational"] == 200);

  const auto second = eucctl({"serve", "--port", "0", "--data-dir", data}, tmp.path);
  CHECK(second.code == 1);
  CHECK(second.err.find("data-dir-locked") != std::string::npos);

  // Occupied port.
  const auto clash = eucctl({"serve", "--port", std::to_string(port), "--data-dir", (tmp.path / "other").string()},
                            tmp.path);
  CHECK(clash.code == 1);
  CHECK(clash.err.find("port-in-use") != std::string::npos);

  server.signal(SIGTERM);
  CHECK(server.wait() == 0);
}

TEST_CASE("submit records versions") {
  TempDir tmp;
  const std::string data = (tmp.path / "data").string();
  auto first = eucctl({"submit", fixture_path("diff/base.wb.json"), "--file-key", "calc", "--author", "ann",
                       "--data-dir", data},
                      tmp.path);
  CHECK(first.code == 0);
  CHECK(json::parse(first.out)["event"].is_null());
  auto second = eucctl({"submit", fixture_path("diff/locked_formula_edit.wb.json"), "--file-key", "calc", "--author",
                        "ann", "--data-dir", data},
                       tmp.path);
  CHECK(second.code == 0);
  const auto e = json::parse(second.out)["event"];
  CHECK(e["state"] == "pending_review");
  CHECK(e["triggered_rules"] == json::array({"formula_change_any", "formula_change_in_locked"}));
}
