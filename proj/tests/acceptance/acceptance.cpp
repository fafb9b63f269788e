// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <httplib.h>
#include <signal.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <random>
#include <set>
#include <string>

#include "../support/files.hpp"
#include "../support/formula_gen.hpp"
#include "../support/int01_oracle.hpp"
#include "../support/process.hpp"
#include "../support/workbook_gen.hpp"
#include "euc/changes.hpp"
#include "euc/error.hpp"
#include "euc/formula.hpp"
#include "euc/ingest.hpp"
#include "euc/integrity.hpp"
#include "euc/inventory.hpp"
#include "euc/standards.hpp"

using namespace euc;
using euc::testing::fixture_path;
using euc::testing::slurp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Pinned limits.
constexpr int kRoundTripCases = 1000;
constexpr double kRoundTripSeconds = 30.0;
constexpr int kShiftCases = 500;
constexpr int kInt01Grids = 300;
constexpr int kReplayPairs = 300;
constexpr int kReplayNonEmptyMin = 100;
constexpr double kEffortMinDays = 3.0;
constexpr double kEffortMaxDays = 5.0;
constexpr double kDemoSeconds = 10.0;
constexpr int kDemoFinancial = 700;
constexpr int kDemoOperational = 200;

const Timestamp kWhen = parse_timestamp("2024-03-01T12:00:00Z");

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("euc-accept-" + std::to_string(std::random_device{}()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

Outcome parser_round_trip() {
  const auto start = std::chrono::steady_clock::now();
  testing::FormulaGenerator gen(101);
  int failures = 0;
  for (int i = 0; i < kRoundTripCases; ++i) {
    const auto ast = gen.generate(5);
    try {
      if (!(formula::parse_formula(formula::print_formula(ast)) == ast)) ++failures;
    } catch (const Error&) {
      ++failures;
    }
  }
  const double secs = seconds_since(start);
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d ASTs, %d failures, %.2fs (limit %.0fs)", kRoundTripCases, failures, secs,
                kRoundTripSeconds);
  return {failures == 0 && secs < kRoundTripSeconds, buf};
}

Outcome shift_invariance() {
  testing::FormulaGenerator gen(202, {40, 80, 40, 80});
  int failures = 0;
  for (int i = 0; i < kShiftCases; ++i) {
    const auto ast = gen.generate(4);
    const CellAddr h1{gen.uniform(40, 80), gen.uniform(40, 80)};
    const CellAddr h2{gen.uniform(40, 80), gen.uniform(40, 80)};
    const auto moved = formula::translate(ast, h2.col - h1.col, h2.row - h1.row);
    if (!(formula::normalize_r1c1(moved, h2) == formula::normalize_r1c1(ast, h1))) ++failures;
  }
  return {failures == 0, std::to_string(kShiftCases) + " cases, " + std::to_string(failures) + " failures"};
}

Outcome int01_oracle() {
  std::mt19937 rng(303);
  int failures = 0, with_deviants = 0;
  for (int i = 0; i < kInt01Grids; ++i) {
    const auto grid = testing::make_template_grid(rng);
    const auto expected = testing::int01_oracle(grid);
    if (!expected.flagged.empty()) ++with_deviants;
    const auto observed = testing::int01_observed(integrity::check_inconsistent_formulas(grid.workbook));
    if (!(observed == expected)) ++failures;
  }
  return {failures == 0, std::to_string(kInt01Grids) + " grids (" + std::to_string(with_deviants) +
                             " with flagged cells), " + std::to_string(failures) + " mismatches"};
}

Outcome seeded_defects() {
  const auto manifest = json::parse(slurp(fixture_path("audit/manifest.json")));
  const auto cfg = standards::load_rule_config_file(fixture_path("audit/config.json"));
  int defects = 0, exact = 0;
  for (const auto& entry : manifest) {
    const std::string file = entry.at("file");
    if (file.rfind("defect_", 0) != 0) continue;
    ++defects;
    standards::AuditContext ctx{kWhen, std::nullopt};
    if (entry.contains("location")) ctx.path = entry.at("location").get<std::string>();
    const auto report =
        standards::audit(parse_canonical(slurp(fixture_path("audit/" + file))), cfg, ctx);
    std::set<std::string> fired;
    for (const auto& f : report.findings) fired.insert(f.rule_id);
    if (fired == entry.at("expect_rules").get<std::set<std::string>>() && fired.size() == 1) ++exact;
  }
  const auto golden =
      standards::audit(parse_canonical(slurp(fixture_path("audit/remediated.wb.json"))), cfg, {kWhen, std::nullopt});
  const bool golden_ok = golden.findings.empty() && golden.compliance_score() == 1.0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d/%d defects exact; golden score %.3f with %zu findings", exact, defects,
                golden.compliance_score(), golden.findings.size());
  return {defects == 9 && exact == 9 && golden_ok, buf};
}

Outcome diff_properties() {
  int fixtures = 0, self_failures = 0;
  for (const auto* dir : {"audit", "xlsx", "diff"}) {
    for (const auto& entry : fs::directory_iterator(fixture_path(dir))) {
      const auto p = entry.path().string();
      if (entry.path().extension() != ".xlsx" && p.find(".wb.json") == std::string::npos) continue;
      Workbook wb;
      try {
        wb = load_workbook_file(p).workbook;
      } catch (const Error&) {
        continue;  // deliberately damaged packages
      }
      ++fixtures;
      if (!changes::diff(wb, wb).empty()) ++self_failures;
    }
  }
  std::mt19937 rng(404);
  int replay_failures = 0, nonempty = 0;
  for (int i = 0; i < kReplayPairs; ++i) {
    const Workbook a = testing::random_workbook(rng);
    const Workbook b = testing::mutate_workbook(a, rng);
    const auto d = changes::diff(a, b);
    if (!d.changes.empty()) ++nonempty;
    const Workbook replayed = changes::apply_diff(a, d);
    bool ok = replayed.sheets.size() == b.sheets.size();
    for (const auto& sheet : b.sheets) {
      const Sheet* got = replayed.find_sheet(sheet.name);
      ok = ok && got != nullptr && got->cells == sheet.cells;
    }
    if (!ok) ++replay_failures;
  }
  return {fixtures > 0 && self_failures == 0 && replay_failures == 0 && nonempty >= kReplayNonEmptyMin,
          "diff(A,A) empty on " + std::to_string(fixtures - self_failures) + "/" + std::to_string(fixtures) +
              " fixtures; replay " + std::to_string(kReplayPairs - replay_failures) + "/" +
              std::to_string(kReplayPairs) + " pairs (" + std::to_string(nonempty) + " non-empty)"};
}

Outcome state_machine() {
  using changes::EventState;
  using changes::Verdict;
  const EventState states[] = {EventState::auto_logged, EventState::pending_review, EventState::approved,
                               EventState::rejected};
  const Verdict verdicts[] = {Verdict::approved, Verdict::rejected};
  const std::string reviewers[] = {"", "ann", "bob"};
  const std::string comments[] = {"", "  ", "restore the prior rate"};
  int cases = 0, failures = 0;
  for (auto state : states) {
    for (auto verdict : verdicts) {
      for (const auto& reviewer : reviewers) {
        for (const auto& comment : comments) {
          ++cases;
          changes::ChangeEvent e;
          e.event_id = "chg-000001";
          e.author = "ann";
          e.state = state;
          const auto before = e;
          std::string expected;
          if (state != EventState::pending_review) {
            expected = "not-pending";
          } else if (reviewer.empty()) {
            expected = "validation-error";
          } else if (reviewer == e.author) {
            expected = "self-review";
          } else if (verdict == Verdict::rejected && comment.find_first_not_of(' ') == std::string::npos) {
            expected = "missing-comment";
          }
          const changes::ReviewDecision d{reviewer, kWhen, verdict, comment};
          bool ok = error_code([&] { changes::decide(e, d); }) == expected;
          if (expected.empty()) {
            ok = ok && e.state == (verdict == Verdict::approved ? EventState::approved : EventState::rejected);
            const auto settled = e;
            for (auto v2 : verdicts) {
              ok = ok && error_code([&] { changes::decide(e, {"carol", kWhen, v2, "again"}); }) == "not-pending";
              ok = ok && e == settled;
            }
          } else {
            ok = ok && e == before;
          }
          if (!ok) ++failures;
        }
      }
    }
  }
  return {cases == 72 && failures == 0, std::to_string(cases) + " transitions, " + std::to_string(failures) + " failures"};
}

Outcome tier_table() {
  using inventory::Category;
  using inventory::Tier;
  const std::map<Tier, std::array<bool, 8>> rows = {
      {Tier::critical, {true, true, true, true, true, true, true, true}},
      {Tier::significant, {true, true, true, true, true, false, true, true}},
      {Tier::standard, {true, false, false, false, false, false, false, true}}};
  const std::map<Tier, int> counts = {{Tier::critical, 8}, {Tier::significant, 7}, {Tier::standard, 2}};
  int pairs = 0, matched = 0;
  for (auto c : {Category::financial, Category::operational}) {
    for (auto t : {Tier::critical, Tier::significant, Tier::standard}) {
      ++pairs;
      const auto got = inventory::required_controls(c, t);
      const std::array<bool, 8> flags{got.inventory_listed, got.design_standards, got.independent_validation,
                                      got.checking_controls, got.change_logs,      got.change_monitoring,
                                      got.security,          got.archiving};
      if (flags == rows.at(t) && got.count() == counts.at(t)) ++matched;
    }
  }
  return {pairs == 6 && matched == 6, std::to_string(matched) + "/" + std::to_string(pairs) + " pairs match"};
}

Outcome effort_calibration() {
  const auto report = standards::audit(parse_canonical(slurp(fixture_path("audit/typical.wb.json"))),
                                       standards::load_rule_config_file(fixture_path("audit/config.json")),
                                       {kWhen, std::nullopt});
  std::set<Severity> severities;
  for (const auto& f : report.findings) severities.insert(f.severity);
  const auto plan = standards::build_plan(report);
  const double days = plan.estimated_effort_days();
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu items, %zu severities, %.2f days (band [%.0f, %.0f])", plan.items.size(),
                severities.size(), days, kEffortMinDays, kEffortMaxDays);
  return {severities.size() >= 2 && days >= kEffortMinDays && days <= kEffortMaxDays, buf};
}

Outcome demo_seed(const fs::path& scratch) {
  const auto start = std::chrono::steady_clock::now();
  const std::string data = (scratch / "demo").string();
  const auto seeded = testing::run({EUCCTL_PATH, "seed-demo", "--data-dir", data}, scratch);
  if (seeded.code != 0) return {false, "seed-demo exited " + std::to_string(seeded.code) + ": " + seeded.err};
  testing::Child server({EUCCTL_PATH, "serve", "--port", "0", "--data-dir", data}, scratch);
  const int port = server.wait_for_port(std::chrono::seconds(10));
  if (port <= 0) return {false, "server did not report a port"};
  httplib::Client client("127.0.0.1", port);
  const auto res = client.Get("/api/summary");
  const double secs = seconds_since(start);
  server.signal(SIGTERM);
  server.wait();
  if (!res || res->status != 200) return {false, "GET /api/summary failed"};
  const auto summary = json::parse(res->body);
  const int fin = summary["active_by_category"]["financial"];
  const int ops = summary["active_by_category"]["operational"];
  char buf[128];
  std::snprintf(buf, sizeof buf, "financial %d, operational %d, %.2fs (limit %.0fs)", fin, ops, secs, kDemoSeconds);
  return {fin == kDemoFinancial && ops == kDemoOperational && secs < kDemoSeconds, buf};
}

Outcome durability(const fs::path& scratch) {
  const std::string data = (scratch / "durable").string();
  const httplib::Headers principal = {{"X-EUC-Principal", "ann"}};
  json registered;
  {
    testing::Child server({EUCCTL_PATH, "serve", "--port", "0", "--data-dir", data}, scratch);
    const int port = server.wait_for_port(std::chrono::seconds(10));
    if (port <= 0) return {false, "first server did not report a port"};
    httplib::Client client("127.0.0.1", port);
    const json body = {{"name", "Liquidity model"},  {"owner", "ann"},
                       {"category", "financial"},    {"tier", "critical"},
                       {"file_key", "fin/liq.xlsx"}, {"business_process", "treasury"}};
    const auto res = client.Post("/api/applications", principal, body.dump(), "application/json");
    if (!res || res->status != 201) return {false, "register did not return 201"};
    registered = json::parse(res->body);
    server.signal(SIGKILL);
    if (server.wait() != 128 + SIGKILL) return {false, "server was not killed"};
  }
  testing::Child server({EUCCTL_PATH, "serve", "--port", "0", "--data-dir", data}, scratch);
  const int port = server.wait_for_port(std::chrono::seconds(10));
  if (port <= 0) return {false, "restarted server did not report a port"};
  httplib::Client client("127.0.0.1", port);
  const std::string id = registered.at("record_id");
  const auto res = client.Get("/api/applications/" + id, principal);
  server.signal(SIGTERM);
  server.wait();
  if (!res || res->status != 200) return {false, id + " missing after restart"};
  const bool same = json::parse(res->body) == registered;
  return {same, id + (same ? " identical after kill -9 and restart" : " differs after restart")};
}

Outcome ingest() {
  const auto enc = load_workbook_file(fixture_path("xlsx/encrypted.xlsx"));
  const bool enc_ok = enc.workbook.source_format == SourceFormat::encrypted_opaque && enc.workbook.security.encrypted;
  int total = 0, matched = 0;
  for (const auto& entry : fs::directory_iterator(fixture_path("xlsx"))) {
    const std::string p = entry.path().string();
    const std::string suffix = ".expected.json";
    if (p.size() < suffix.size() || p.compare(p.size() - suffix.size(), suffix.size(), suffix) != 0) continue;
    ++total;
    const std::string xlsx = p.substr(0, p.size() - suffix.size()) + ".xlsx";
    try {
      if (load_workbook_file(xlsx).workbook == parse_canonical(slurp(p))) ++matched;
    } catch (const Error&) {
    }
  }
  return {enc_ok && total > 0 && matched == total,
          std::string("encrypted_opaque ") + (enc_ok ? "yes" : "no") + "; " + std::to_string(matched) + "/" +
              std::to_string(total) + " fixtures match canonical JSON"};
}

}  // namespace

int main() {
  TempDir scratch;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"parser-round-trip", parser_round_trip},
      {"r1c1-shift-invariance", shift_invariance},
      {"int01-oracle-equivalence", int01_oracle},
      {"seeded-defect-corpus", seeded_defects},
      {"diff-properties", diff_properties},
      {"change-event-state-machine", state_machine},
      {"tier-table", tier_table},
      {"effort-calibration", effort_calibration},
      {"demo-seed", [&] { return demo_seed(scratch.path); }},
      {"durability", [&] { return durability(scratch.path); }},
      {"ingest", ingest},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
