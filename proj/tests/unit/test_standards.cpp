#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <nlohmann/json.hpp>

#include "../support/files.hpp"
#include "euc/error.hpp"
#include "euc/standards.hpp"

using namespace euc;
using namespace euc::standards;
using euc::testing::fixture_path;
using euc::testing::slurp;

namespace {

const Timestamp kWhen = parse_timestamp("2024-03-01T12:00:00Z");

Workbook load(const std::string& file) { return parse_canonical(slurp(fixture_path("audit/" + file))); }

RuleConfig corpus_config() { return load_rule_config_file(fixture_path("audit/config.json")); }

std::set<std::string> fired(const AuditReport& r) {
  std::set<std::string> ids;
  for (const auto& f : r.findings) ids.insert(f.rule_id);
  return ids;
}

std::string code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST_CASE("seeded-defect corpus fires exactly the intended rules") {
  const auto manifest = nlohmann::json::parse(slurp(fixture_path("audit/manifest.json")));
  const RuleConfig cfg = corpus_config();
  REQUIRE(manifest.size() == 11);
  for (const auto& entry : manifest) {
    const std::string file = entry.at("file");
    INFO(file);
    AuditContext ctx{kWhen, std::nullopt};
    if (entry.contains("location")) ctx.path = entry.at("location").get<std::string>();
    const AuditReport r = audit(load(file), cfg, ctx);
    const auto expected = entry.at("expect_rules").get<std::set<std::string>>();
    CHECK(fired(r) == expected);
    CHECK(std::set<std::string>(r.rules_failed.begin(), r.rules_failed.end()) == expected);
    for (const auto& id : r.rules_passed) CHECK(expected.count(id) == 0);
  }
}

TEST_CASE("golden workbook is fully compliant") {
  const AuditReport r = audit(load("remediated.wb.json"), corpus_config(), {kWhen, std::nullopt});
  CHECK(r.findings.empty());
  CHECK(r.compliance_score() == 1.0);
  CHECK(r.warnings.empty());
  // Encrypted, no location: ARC-01 has nothing to judge.
  CHECK(r.rules_not_applicable == std::vector<std::string>{"ARC-01"});
  CHECK(r.rules_passed.size() == 14);
}

TEST_CASE("empty workbook lacks every template") {
  Workbook wb;
  wb.name = "empty";
  const AuditReport r = audit(wb, RuleConfig{}, {kWhen, std::nullopt});
  CHECK(fired(r) == std::set<std::string>{"DS-DOC-01", "DS-LOG-01", "DS-LOG-02", "DS-CHK-01"});
  CHECK(r.findings.size() == 4);
  // SEC-01 and ARC-01 need a location, leaving 13 applicable; 4 fail.
  CHECK(r.applicable() == 13);
  CHECK(r.compliance_score() == doctest::Approx(9.0 / 13.0));
}

TEST_CASE("audit is pure and deterministic") {
  const Workbook wb = load("typical.wb.json");
  const RuleConfig cfg = corpus_config();
  CHECK(audit(wb, cfg, {kWhen, std::nullopt}) == audit(wb, cfg, {kWhen, std::nullopt}));
  CHECK(serialize_report(audit(wb, cfg, {kWhen, std::nullopt})) ==
        serialize_report(audit(wb, cfg, {kWhen, std::nullopt})));
}

TEST_CASE("score arithmetic") {
  const AuditReport r = audit(load("typical.wb.json"), corpus_config(), {kWhen, std::nullopt});
  CHECK(r.rules_failed.size() == 7);
  CHECK(r.rules_passed.size() == 7);
  CHECK(r.compliance_score() == doctest::Approx(0.5));
}

TEST_CASE("encrypted containers only face location-level rules") {
  Workbook wb;
  wb.name = "locked";
  wb.source_format = SourceFormat::encrypted_opaque;
  wb.security.encrypted = true;
  const AuditReport r = audit(wb, RuleConfig{}, {kWhen, std::string("/secure/euc/locked_v1.0_20240131.xlsx")});
  CHECK(r.rules_passed == std::vector<std::string>{"DS-SEC-01", "ARC-01"});
  CHECK(r.rules_failed.empty());
  CHECK(r.rules_not_applicable.size() == 13);
}

TEST_CASE("DS-SEC-01 restricted paths") {
  Workbook wb = load("defect_sec01.wb.json");
  const RuleConfig cfg = corpus_config();
  auto sec = [&](const std::string& path) {
    return fired(audit(wb, cfg, {kWhen, path})).count("DS-SEC-01") == 1;
  };
  CHECK_FALSE(sec("/secure/euc/forecast_v1.2_20240131.xlsx"));
  CHECK_FALSE(sec("/secure/euc/sub/../forecast_v1.2_20240131.xlsx"));
  CHECK(sec("/secure/euc-public/forecast_v1.2_20240131.xlsx"));
  CHECK(sec("/secure/forecast_v1.2_20240131.xlsx"));
}

TEST_CASE("rule details") {
  const RuleConfig cfg;
  SUBCASE("unlocked formula and unprotected sheet are separate findings") {
    Workbook wb = load("remediated.wb.json");
    wb.sheets[2].protection_enabled = false;
    wb.sheets[2].cells.at(a1_to_addr("B2")).locked = false;
    auto r = audit(wb, cfg, {kWhen, std::nullopt});
    CHECK(r.findings.size() == 2);
  }
  SUBCASE("documented hidden sheets pass") {
    Workbook wb = load("remediated.wb.json");
    wb.sheets[3].hidden = true;
    CHECK(fired(audit(wb, cfg, {kWhen, std::nullopt})) == std::set<std::string>{"DS-TRA-01"});
    wb.sheets[0].cells[a1_to_addr("A9")] = Cell{std::string("Hidden"), std::nullopt, true, std::nullopt};
    wb.sheets[0].cells[a1_to_addr("B9")] = Cell{std::string("outputs"), std::nullopt, true, std::nullopt};
    CHECK(audit(wb, cfg, {kWhen, std::nullopt}).findings.empty());
  }
  SUBCASE("output read by another sheet") {
    Workbook wb = load("remediated.wb.json");
    wb.sheets[2].cells[a1_to_addr("B10")] = Cell{0.0, std::string("Outputs!B1-B6"), true, std::nullopt};
    const auto r = audit(wb, cfg, {kWhen, std::nullopt});
    REQUIRE(r.findings.size() == 1);
    CHECK(r.findings[0].rule_id == "DS-SEP-01");
    CHECK(r.findings[0].sheet == "Outputs");
    CHECK(r.findings[0].evidence == "Calc!B10");
  }
  SUBCASE("undeclared sheet") {
    Workbook wb = load("remediated.wb.json");
    Sheet scratch;
    scratch.name = "Scratch";
    wb.sheets.push_back(scratch);
    CHECK(fired(audit(wb, cfg, {kWhen, std::nullopt})) == std::set<std::string>{"DS-SEP-01"});
  }
  SUBCASE("extra change-log column") {
    Workbook wb = load("remediated.wb.json");
    wb.sheets[4].cells[a1_to_addr("G1")] = Cell{std::string("Notes"), std::nullopt, true, std::nullopt};
    const auto r = audit(wb, cfg, {kWhen, std::nullopt});
    REQUIRE(r.findings.size() == 1);
    CHECK(r.findings[0].evidence == "found: Date | Author | Description | Reason | Reviewer | Review Date | Notes");
  }
  SUBCASE("disabled rules are neither passed nor failed") {
    RuleConfig only_doc;
    only_doc.enabled = {"DS-DOC-01"};
    Workbook empty;
    empty.name = "e";
    const auto r = audit(empty, only_doc, {kWhen, std::nullopt});
    CHECK(r.rules_failed == std::vector<std::string>{"DS-DOC-01"});
    CHECK(r.rules_passed.empty());
    CHECK(r.rules_not_applicable.empty());
  }
}

TEST_CASE("classify_cells") {
  const Workbook wb = parse_canonical(R"({"name":"w","sheets":[{"name":"S","cells":{
      "A1":{"v":5},"B1":{"f":"A1*2","v":10},"C1":{"v":"Revenue"},"D1":{"v":7},"E1":{"f":"B1","v":10}}}],
      "named_ranges":{"CHK_TOTAL":"S!E1"}})");
  const auto classes = classify_cells(wb);
  using C = CellClass;
  CHECK(classes.at({"S", a1_to_addr("A1")}) == std::set<C>{C::input});
  CHECK(classes.at({"S", a1_to_addr("B1")}) == std::set<C>{C::calculation});
  CHECK(classes.at({"S", a1_to_addr("C1")}) == std::set<C>{C::label});
  CHECK(classes.at({"S", a1_to_addr("D1")}) == std::set<C>{C::input});
  CHECK(classes.at({"S", a1_to_addr("E1")}) == std::set<C>{C::check});
  CHECK(classes.size() == 5);

  const Workbook simple = parse_canonical(R"({"name":"w","sheets":[{"name":"S","cells":{"A1":{"v":5},"B1":{"f":"A1*2","v":10}}}]})");
  CHECK(classify_cells(simple).at({"S", a1_to_addr("B1")}) == std::set<C>{C::calculation, C::output});
}

TEST_CASE("remediation plan and effort calibration") {
  const AuditReport r = audit(load("typical.wb.json"), corpus_config(), {kWhen, std::nullopt});
  std::map<Severity, int> by_severity;
  for (const auto& f : r.findings) ++by_severity[f.severity];
  CHECK(by_severity[Severity::high] == 2);
  CHECK(by_severity[Severity::medium] == 3);
  CHECK(by_severity[Severity::low] == 2);

  const RemediationPlan plan = build_plan(r, {}, "j.doe");
  CHECK(plan.items.size() == 7);
  CHECK(plan.effort_hundredths == 350);
  CHECK(plan.estimated_effort_days() >= 3.0);
  CHECK(plan.estimated_effort_days() <= 5.0);
  for (const auto& item : plan.items) {
    CHECK(item.status == ItemStatus::open);
    CHECK(item.owner == "j.doe");
  }
  CHECK(plan.items[0].item_id == "item-1");

  const RemediationPlan empty = build_plan(audit(load("remediated.wb.json"), corpus_config(), {kWhen, std::nullopt}));
  CHECK(empty.items.empty());
  CHECK(empty.effort_hundredths == 0);

  EffortConfig clamp;
  clamp.floor_hundredths = 400;
  CHECK(build_plan(r, clamp).effort_hundredths == 400);
  clamp.floor_hundredths.reset();
  clamp.ceiling_hundredths = 100;
  CHECK(build_plan(r, clamp).effort_hundredths == 100);
  CHECK(build_plan(AuditReport{}, clamp).effort_hundredths == 0);
}

TEST_CASE("plan item transitions, exhaustively") {
  using S = ItemStatus;
  const std::vector<S> all = {S::open, S::in_progress, S::done, S::accepted_risk};
  // Expected table written out independently of the rank encoding.
  const std::set<std::pair<S, S>> allowed = {
      {S::open, S::in_progress},        {S::open, S::done},          {S::open, S::accepted_risk},
      {S::in_progress, S::done},        {S::in_progress, S::accepted_risk}, {S::done, S::open}};
  for (S from : all) {
    for (S to : all) {
      PlanItem item{"item-1", {}, "Fix it", from, "o"};
      const bool ok = allowed.count({from, to}) > 0;
      CHECK(transition_allowed(from, to) == ok);
      const std::string code = code_of([&] { transition(item, to, "vendor fix pending"); });
      CHECK(code == (ok ? "" : "invalid-transition"));
      CHECK(item.status == (ok ? to : from));
    }
  }
  PlanItem item{"item-1", {}, "Fix it", S::open, "o"};
  CHECK(code_of([&] { transition(item, S::accepted_risk, "  "); }) == "missing-justification");
  CHECK(item.status == S::open);
  transition(item, S::accepted_risk, "legacy file, retiring in Q3");
  CHECK(item.action_text == "Fix it\nAccepted risk: legacy file, retiring in Q3");
}

TEST_CASE("qa_recheck") {
  const RuleConfig cfg = corpus_config();
  const AuditReport first = audit(load("defect_lock01.wb.json"), cfg, {kWhen, std::nullopt});
  RemediationPlan plan = build_plan(first);
  REQUIRE(plan.items.size() == 1);
  transition(plan.items[0], ItemStatus::done);

  SUBCASE("fixed") {
    const AuditReport qa = qa_recheck(load("remediated.wb.json"), plan, cfg, {kWhen, std::nullopt});
    CHECK(qa.compliance_score() == 1.0);
    CHECK(qa.regressions.empty());
  }
  SUBCASE("claimed done but persists") {
    const AuditReport qa = qa_recheck(load("defect_lock01.wb.json"), plan, cfg, {kWhen, std::nullopt});
    REQUIRE(qa.regressions.size() == 1);
    CHECK(qa.regressions[0].item_id == "item-1");
  }
  SUBCASE("new finding since audit") {
    Workbook wb = load("remediated.wb.json");
    wb.named_ranges.clear();
    const AuditReport qa = qa_recheck(wb, plan, cfg, {kWhen, std::nullopt});
    CHECK(qa.regressions.empty());
    CHECK(fired(qa) == std::set<std::string>{"DS-CHK-01"});
  }
}

TEST_CASE("report and plan JSON round-trip") {
  const AuditReport r = audit(load("typical.wb.json"), corpus_config(), {kWhen, std::nullopt});
  const std::string text = serialize_report(r);
  CHECK(parse_report(text) == r);
  CHECK(nlohmann::json::parse(text).at("schema_version") == 1);
  RemediationPlan plan = build_plan(r, {}, "owner");
  transition(plan.items[1], ItemStatus::accepted_risk, "documented elsewhere");
  CHECK(parse_plan(serialize_plan(plan)) == plan);
  CHECK(code_of([] { parse_report("{\"workbook_name\":1}"); }) == "invalid-document");
}

TEST_CASE("rule config") {
  CHECK(code_of([] { parse_rule_config(R"({"enabled_rules":["DS-XYZ-99"]})"); }) == "invalid-config");
  CHECK(code_of([] { parse_rule_config(R"({"rules":{"DS-BOGUS":{}}})"); }) == "invalid-config");
  CHECK(code_of([] { parse_rule_config(R"({"rules":{"DS-CHK-01":{"prefx":"X_"}}})"); }) == "invalid-config");
  CHECK(code_of([] { parse_rule_config(R"({"colour":"red"})"); }) == "invalid-config");
  CHECK(code_of([] { parse_rule_config("{oops"); }) == "invalid-config");
  CHECK(code_of([] { parse_rule_config(R"({"rules":{"ARC-01":{"pattern":"<name>.xlsx"}}})"); }) == "invalid-config");
  const RuleConfig cfg = parse_rule_config(R"({"disabled_rules":["INT-03"],
      "rules":{"DS-CHK-01":{"prefix":"CTL_"},"INT-03":{"exempt_constants":[12]}},
      "effort":{"weights":{"high":1.5},"ceiling_days":5}})");
  CHECK_FALSE(cfg.on("INT-03"));
  CHECK(cfg.on("INT-01"));
  CHECK(cfg.check_prefix == "CTL_");
  CHECK(cfg.integrity.exempt_constants == std::set<double>{12});
  CHECK(cfg.effort.weight_hundredths.at(Severity::high) == 150);
  CHECK(*cfg.effort.ceiling_hundredths == 500);
}

TEST_CASE("archive names") {
  const std::string pattern = RuleConfig{}.archive_pattern;
  CHECK_FALSE(check_archive_name("model_v2.1_20240131.xlsx", pattern).has_value());
  CHECK(check_archive_name("model_final_FINAL2.xlsx", pattern).has_value());
  const auto bad_date = check_archive_name("model_v2.1_20241301.xlsx", pattern);
  REQUIRE(bad_date.has_value());
  CHECK(bad_date->rule_id == "ARC-01");
  CHECK(bad_date->severity == Severity::low);
  CHECK(check_archive_name("model_v2.1_20230229.xlsx", pattern).has_value());
  CHECK_FALSE(check_archive_name("model_v2.1_20240229.xlsx", pattern).has_value());
  CHECK_FALSE(check_archive_name("my model_v10.02_20240131.xlsm", pattern).has_value());
}
