// eucctl: audit workbooks, diff versions, build remediation plans and run
// the inventory service.
//
// Exit codes: 0 clean, 1 operational error, 2 audit findings at or above
// --fail-on, 3 diff found changes, 4 diff changes fired an alert rule.

#include <CLI11.hpp>

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <iomanip>
#include <iostream>
#include <span>

#include "euc/changes.hpp"
#include "euc/error.hpp"
#include "euc/ingest.hpp"
#include "euc/inventory.hpp"
#include "euc/service.hpp"
#include "euc/standards.hpp"

namespace {

using namespace euc;
using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitFindings = 2;
constexpr int kExitChanges = 3;
constexpr int kExitAlerts = 4;

std::string read_text(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

std::string cell_text(const std::optional<Cell>& c) {
  if (!c) return "(empty)";
  std::string out;
  if (c->formula) out = "=" + *c->formula + " ";
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Blank>) {
          out += "blank";
        } else if constexpr (std::is_same_v<T, double>) {
          std::ostringstream ss;
          ss << std::setprecision(15) << v;
          out += ss.str();
        } else if constexpr (std::is_same_v<T, std::string>) {
          out += "\"" + v + "\"";
        } else if constexpr (std::is_same_v<T, bool>) {
          out += v ? "TRUE" : "FALSE";
        } else {
          out += v.code;
        }
      },
      c->value);
  if (!c->locked) out += " [unlocked]";
  return out;
}

std::string location_text(const Finding& f) {
  if (f.sheet.empty()) return "(workbook)";
  return f.addr ? quote_sheet_name(f.sheet) + "!" + addr_to_a1(*f.addr) : quote_sheet_name(f.sheet);
}

// ---------------------------------------------------------------------------
// audit

struct AuditArgs {
  std::string file;
  std::string config;
  std::string format = "text";
  std::string fail_on = "low";
  std::string location;
  std::string at;
};

int run_audit(const AuditArgs& a) {
  const standards::RuleConfig cfg =
      a.config.empty() ? standards::RuleConfig{} : standards::load_rule_config_file(a.config);
  const IngestReport ingest = load_workbook_file(a.file);
  standards::AuditContext ctx;
  ctx.audited_at = a.at.empty() ? now_utc() : parse_timestamp(a.at);
  if (!a.location.empty()) ctx.path = a.location;
  const standards::AuditReport report = standards::audit(ingest.workbook, cfg, ctx);

  const Severity threshold = *severity_from_string(a.fail_on);
  const bool gated = std::any_of(report.findings.begin(), report.findings.end(),
                                 [&](const Finding& f) { return f.severity >= threshold; });

  if (a.format == "json") {
    ordered_json j = ordered_json::parse(standards::serialize_report(report));
    j["ingest_warnings"] = ordered_json::array();
    for (const auto& w : ingest.warnings) {
      j["ingest_warnings"].push_back({{"code", w.code}, {"location", w.location}, {"message", w.message}});
    }
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "workbook:   " << report.workbook_name << '\n'
              << "audited at: " << format_timestamp(report.audited_at) << '\n'
              << "compliance: " << std::fixed << std::setprecision(2) << report.compliance_score() << " ("
              << report.rules_passed.size() << " of " << report.applicable() << " applicable rules passed)\n";
    std::cout.unsetf(std::ios::fixed);
    std::cout << "findings:   " << report.findings.size() << '\n';
    for (const auto& f : report.findings) {
      std::string sev(to_string(f.severity));
      for (auto& ch : sev) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      std::cout << "  " << std::left << std::setw(7) << sev << std::setw(11) << f.rule_id << location_text(f) << "  "
                << f.message << '\n';
    }
    auto list = [](const char* label, const std::vector<std::string>& ids) {
      if (ids.empty()) return;
      std::cout << label;
      for (const auto& id : ids) std::cout << ' ' << id;
      std::cout << '\n';
    };
    list("failed:        ", report.rules_failed);
    list("not applicable:", report.rules_not_applicable);
    for (const auto& w : report.warnings) std::cout << "warning: " << w << '\n';
    for (const auto& w : ingest.warnings) std::cout << "ingest " << w.code << ": " << w.location << ": " << w.message << '\n';
  }
  return gated ? kExitFindings : kExitOk;
}

// ---------------------------------------------------------------------------
// diff

struct DiffArgs {
  std::string old_file;
  std::string new_file;
  std::string rules;
  std::string format = "text";
};

int run_diff(const DiffArgs& a) {
  // Without a rules file no trigger is active: changes alone exit 3.
  const changes::AlertRuleSet rules =
      a.rules.empty() ? changes::AlertRuleSet{} : changes::parse_alert_rules_text(read_text(a.rules));
  const Workbook before = load_workbook_file(a.old_file).workbook;
  const Workbook after = load_workbook_file(a.new_file).workbook;
  const changes::DiffResult d = changes::diff(before, after);
  const auto triggered = changes::apply_alert_rules(d, before, rules);

  if (a.format == "json") {
    ordered_json j;
    j["schema_version"] = standards::kSchemaVersion;
    j["old"] = before.name;
    j["new"] = after.name;
    ordered_json body = changes::diff_to_json(d);
    for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
    j["triggered_rules"] = triggered;
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << d.changes.size() << " cell change(s)" << (d.structural ? ", structural" : "") << '\n';
    for (const auto& n : d.structural_notes) std::cout << "  structural: " << n << '\n';
    for (const auto& c : d.changes) {
      std::cout << "  " << std::left << std::setw(16) << changes::to_string(c.kind) << quote_sheet_name(c.sheet) << '!'
                << addr_to_a1(c.addr) << ": " << cell_text(c.before) << " -> " << cell_text(c.after) << '\n';
    }
    for (const auto& t : triggered) std::cout << "alert: " << t << '\n';
  }
  if (d.empty()) return kExitOk;
  return triggered.empty() ? kExitChanges : kExitAlerts;
}

// ---------------------------------------------------------------------------
// plan

struct PlanArgs {
  std::string report;
  std::string config;
  std::string owner;
};

int run_plan(const PlanArgs& a) {
  const standards::RuleConfig cfg =
      a.config.empty() ? standards::RuleConfig{} : standards::load_rule_config_file(a.config);
  const auto report = standards::parse_report(read_text(a.report));
  std::cout << ordered_json::parse(standards::serialize_plan(standards::build_plan(report, cfg.effort, a.owner))).dump(2)
            << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// serve, seed-demo, submit

service::Service* g_running = nullptr;

extern "C" void on_signal(int) {
  if (g_running) g_running->stop();
}

int run_serve(const std::string& data_dir, const std::string& host, int port, bool verbose) {
  service::ServiceOptions opts;
  opts.data_dir = data_dir;
  opts.host = host;
  opts.log_requests = verbose;
  service::Service svc(opts);
  const int bound = svc.bind(port);
  g_running = &svc;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "eucctl: serving " << data_dir << " on http://" << host << ':' << bound << std::endl;
  svc.run();
  g_running = nullptr;
  return kExitOk;
}

int run_seed_demo(const std::string& data_dir) {
  service::ServiceOptions opts;
  opts.data_dir = data_dir;
  service::Service svc(opts);
  auto& inv = svc.inventory();
  if (inv.size() != 0) {
    throw Error("validation-error", data_dir + " already holds " + std::to_string(inv.size()) + " records", "data-dir");
  }
  const auto created = inv.register_many(inventory::demo_seed_records(inv.now()), "seed-demo");
  inv.compact();
  std::cout << "seeded " << created.size() << " records (" << inventory::kDemoFinancial << " financial, "
            << inventory::kDemoOperational << " operational) into " << data_dir << '\n';
  return kExitOk;
}

struct SubmitArgs {
  std::string file;
  std::string data_dir;
  std::string file_key;
  std::string author;
  std::string rules;
};

int run_submit(const SubmitArgs& a) {
  service::ServiceOptions opts;
  opts.data_dir = a.data_dir;
  service::Service svc(opts);
  const changes::AlertRuleSet rules =
      a.rules.empty() ? changes::default_alert_rules() : changes::parse_alert_rules_text(read_text(a.rules));
  const auto wb = load_workbook_file(a.file).workbook;
  const auto sub = svc.changes().submit(a.file_key, wb, a.author, rules, now_utc());
  ordered_json j;
  j["schema_version"] = standards::kSchemaVersion;
  j["file_key"] = a.file_key;
  j["snapshot_id"] = sub.snapshot.snapshot_id;
  j["content_hash"] = sub.snapshot.content_hash;
  j["event"] = sub.event ? changes::event_to_json(*sub.event) : ordered_json();
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

int run_convert(const std::string& file, const std::string& out) {
  const auto ingest = load_workbook_file(file);
  for (const auto& w : ingest.warnings) std::cerr << "ingest " << w.code << ": " << w.location << ": " << w.message << '\n';
  const std::string body = serialize_canonical(ingest.workbook);
  if (out.empty() || out == "-") {
    std::cout << body << '\n';
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!(f << body << '\n')) throw Error("io-error", "cannot write " + out);
  }
  return kExitOk;
}

std::string default_data_dir() {
  const char* env = std::getenv("EUCCTL_DATA_DIR");
  return env && *env ? env : "./eucctl-data";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"eucctl: spreadsheet control checks, change review and EUC inventory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "eucctl 1.0.0");

  const std::vector<std::string> severities = {"info", "low", "medium", "high"};
  const std::vector<std::string> formats = {"text", "json"};

  AuditArgs audit_args;
  auto* audit = app.add_subcommand("audit", "Audit a workbook against the design standards");
  audit->add_option("file", audit_args.file, "Canonical JSON or .xlsx workbook")->required();
  audit->add_option("--config", audit_args.config, "Rule configuration (JSON)");
  audit->add_option("--format", audit_args.format, "Output format")->check(CLI::IsMember(formats));
  audit->add_option("--fail-on", audit_args.fail_on, "Exit 2 when a finding is at least this severe")
      ->check(CLI::IsMember(severities));
  audit->add_option("--location", audit_args.location, "Where the file is stored; enables path and archive-name checks");
  audit->add_option("--at", audit_args.at, "Audit timestamp (default: now)");

  DiffArgs diff_args;
  auto* diff = app.add_subcommand("diff", "Cell-level comparison of two workbook versions");
  diff->add_option("old", diff_args.old_file)->required();
  diff->add_option("new", diff_args.new_file)->required();
  diff->add_option("--rules", diff_args.rules, "Alert rules (JSON)");
  diff->add_option("--format", diff_args.format, "Output format")->check(CLI::IsMember(formats));

  PlanArgs plan_args;
  auto* plan = app.add_subcommand("plan", "Remediation plan from an audit report (JSON)");
  plan->add_option("report", plan_args.report)->required();
  plan->add_option("--config", plan_args.config, "Rule configuration with effort weights");
  plan->add_option("--owner", plan_args.owner, "Owner for every item");

  std::string data_dir = default_data_dir();
  std::string host = "127.0.0.1";
  int port = 8080;
  bool verbose = false;
  auto* serve = app.add_subcommand("serve", "Run the inventory and change-review HTTP service");
  serve->add_option("--port", port, "Listening port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "Listening address");
  serve->add_option("--data-dir", data_dir, "Data directory (default: $EUCCTL_DATA_DIR)");
  serve->add_flag("--verbose", verbose, "Log every request");

  auto* seed = app.add_subcommand("seed-demo", "Load the 700 financial / 200 operational demo registry");
  seed->add_option("--data-dir", data_dir, "Data directory (default: $EUCCTL_DATA_DIR)");

  SubmitArgs submit_args;
  auto* submit = app.add_subcommand("submit", "Record a new version of a monitored file");
  submit->add_option("file", submit_args.file)->required();
  submit->add_option("--file-key", submit_args.file_key, "Monitored file identity")->required();
  submit->add_option("--author", submit_args.author, "Who made the change")->required();
  submit->add_option("--rules", submit_args.rules, "Alert rules (JSON; default: every trigger)");
  submit->add_option("--data-dir", data_dir, "Data directory (default: $EUCCTL_DATA_DIR)");

  std::string convert_file, convert_out;
  auto* convert = app.add_subcommand("convert", "Import a workbook and print its canonical JSON");
  convert->add_option("file", convert_file)->required();
  convert->add_option("-o,--output", convert_out, "Output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*audit) return run_audit(audit_args);
    if (*diff) return run_diff(diff_args);
    if (*plan) return run_plan(plan_args);
    if (*serve) return run_serve(data_dir, host, port, verbose);
    if (*seed) return run_seed_demo(data_dir);
    if (*submit) {
      submit_args.data_dir = data_dir;
      return run_submit(submit_args);
    }
    if (*convert) return run_convert(convert_file, convert_out);
  } catch (const Error& e) {
    std::cerr << "eucctl: " << e.code() << ": " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "eucctl: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
