#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "euc/finding.hpp"
#include "euc/formula.hpp"
#include "euc/integrity.hpp"
#include "euc/time.hpp"
#include "euc/workbook.hpp"

namespace euc::standards {

inline constexpr int kSchemaVersion = 1;

/// DS-* design-standard rules in catalogue order.
const std::vector<std::string>& ds_rule_ids();
/// Every rule id a config may name: DS-*, INT-*, ARC-01.
const std::vector<std::string>& known_rule_ids();

/// Day weights are held in hundredths of a day so sums stay exact.
struct EffortConfig {
  std::map<Severity, std::int64_t> weight_hundredths{
      {Severity::info, 0}, {Severity::low, 25}, {Severity::medium, 50}, {Severity::high, 75}};
  std::optional<std::int64_t> floor_hundredths;
  std::optional<std::int64_t> ceiling_hundredths;
};

struct RuleConfig {
  std::set<std::string> enabled = {known_rule_ids().begin(), known_rule_ids().end()};

  std::string documentation_sheet = "Documentation";
  std::vector<std::string> documentation_fields = {"Purpose", "Owner", "Version", "Last Updated"};
  std::string change_log_sheet = "Change_Log";
  std::vector<std::string> change_log_headers = {"Date",     "Author",   "Description",
                                                 "Reason", "Reviewer", "Review Date"};
  std::string review_log_sheet = "Review_Log";
  std::vector<std::string> review_log_headers = {"Date", "Check Performed", "Result", "Reviewer"};
  std::string check_prefix = "CHK_";
  bool require_units = true;
  std::string units_marker = "Units";
  std::vector<std::string> restricted_paths;
  std::string archive_pattern = "<base>_v<major>.<minor>_<YYYYMMDD>.<ext>";
  integrity::Options integrity;
  EffortConfig effort;

  bool on(const std::string& rule_id) const { return enabled.count(rule_id) > 0; }
  bool is_template_sheet(std::string_view name) const;
};

/// Parses a JSON rule config. Absent keys keep their defaults; unknown keys
/// and unknown rule ids raise Error("invalid-config") naming the field.
RuleConfig parse_rule_config(std::string_view json_text);
RuleConfig load_rule_config_file(const std::string& path);

struct AuditContext {
  Timestamp audited_at{};
  /// Where the file lives; enables DS-SEC-01 path checks and ARC-01.
  std::optional<std::string> path;
};

struct Regression {
  std::string item_id;
  Finding finding;
  friend bool operator==(const Regression&, const Regression&) = default;
};

struct AuditReport {
  std::string workbook_name;
  Timestamp audited_at{};
  std::vector<Finding> findings;  // sorted by finding_less
  std::vector<std::string> rules_passed;
  std::vector<std::string> rules_failed;
  std::vector<std::string> rules_not_applicable;
  std::vector<std::string> warnings;
  std::vector<Regression> regressions;  // filled by qa_recheck only

  std::int64_t applicable() const { return static_cast<std::int64_t>(rules_passed.size() + rules_failed.size()); }
  /// passed / applicable; 1.0 when nothing is applicable.
  double compliance_score() const;

  friend bool operator==(const AuditReport&, const AuditReport&) = default;
};

/// Pure: the timestamp comes from `ctx`, never from a clock.
AuditReport audit(const Workbook& wb, const RuleConfig& cfg, const AuditContext& ctx = {});

std::string serialize_report(const AuditReport& report);
AuditReport parse_report(std::string_view json_text);

enum class CellClass { input, calculation, output, label, check };
std::string_view to_string(CellClass c) noexcept;

/// Advisory role of every non-empty cell. A formula that nothing reads is
/// {calculation, output}; cells inside a check range are {check} only.
std::map<formula::CellKey, std::set<CellClass>> classify_cells(const Workbook& wb,
                                                               const std::string& check_prefix = "CHK_");

enum class ItemStatus { open, in_progress, done, accepted_risk };
std::string_view to_string(ItemStatus s) noexcept;
std::optional<ItemStatus> item_status_from_string(std::string_view s) noexcept;

struct PlanItem {
  std::string item_id;
  Finding finding;
  std::string action_text;
  ItemStatus status = ItemStatus::open;
  std::string owner;
  friend bool operator==(const PlanItem&, const PlanItem&) = default;
};

struct RemediationPlan {
  std::string workbook_name;
  std::vector<PlanItem> items;
  std::int64_t effort_hundredths = 0;

  double estimated_effort_days() const { return static_cast<double>(effort_hundredths) / 100.0; }
  friend bool operator==(const RemediationPlan&, const RemediationPlan&) = default;
};

/// One open item per finding, ids "<id_prefix>-<n>" from 1.
RemediationPlan build_plan(const AuditReport& report, const EffortConfig& effort = {},
                           const std::string& owner = "", const std::string& id_prefix = "item");

/// Sum of item weights clamped to floor/ceiling; an empty plan is 0.
std::int64_t estimate_effort_hundredths(const std::vector<PlanItem>& items, const EffortConfig& effort);

/// Forward-only status change (open < in_progress < done/accepted_risk) plus
/// done -> open. accepted_risk needs a non-empty justification, which is
/// appended to action_text. Errors: invalid-transition, missing-justification.
void transition(PlanItem& item, ItemStatus to, const std::string& justification = "");
bool transition_allowed(ItemStatus from, ItemStatus to) noexcept;

/// Re-audits and lists every done item whose finding still reproduces.
AuditReport qa_recheck(const Workbook& wb, const RemediationPlan& plan, const RuleConfig& cfg,
                       const AuditContext& ctx = {});

std::string serialize_plan(const RemediationPlan& plan);
RemediationPlan parse_plan(std::string_view json_text);

/// ARC-01 against a "<base>_v<major>.<minor>_<YYYYMMDD>.<ext>" style template.
/// `<YYYYMMDD>` must also be a real calendar date.
std::optional<Finding> check_archive_name(const std::string& filename, const std::string& pattern);

}  // namespace euc::standards
