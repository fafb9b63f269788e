#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "euc/standards.hpp"
#include "euc/time.hpp"
#include "euc/workbook.hpp"

namespace euc::inventory {

enum class Category { financial, operational };
enum class Tier { critical, significant, standard };
enum class RecordStatus { active, retired, replaced };
enum class ValidationState { never_validated, due, overdue, current };

std::string_view to_string(Category c) noexcept;
std::string_view to_string(Tier t) noexcept;
std::string_view to_string(RecordStatus s) noexcept;
std::string_view to_string(ValidationState v) noexcept;
std::optional<Category> category_from_string(std::string_view s) noexcept;
std::optional<Tier> tier_from_string(std::string_view s) noexcept;
std::optional<RecordStatus> record_status_from_string(std::string_view s) noexcept;

struct ControlRequirementSet {
  bool inventory_listed = false;
  bool design_standards = false;
  bool independent_validation = false;
  bool checking_controls = false;
  bool change_logs = false;
  bool change_monitoring = false;
  bool security = false;
  bool archiving = false;

  int count() const noexcept;
  friend bool operator==(const ControlRequirementSet&, const ControlRequirementSet&) = default;
};

/// critical: all eight; significant: all but change_monitoring;
/// standard: inventory_listed and archiving. Category does not matter.
ControlRequirementSet required_controls(Category category, Tier tier) noexcept;
nlohmann::ordered_json controls_to_json(const ControlRequirementSet& c);

inline constexpr int kDueWindowDays = 14;
inline constexpr int kDefaultValidationFrequencyDays = 365;

struct EucRecord {
  std::string record_id;
  std::string name;
  std::string owner;
  std::string line_manager;
  std::string business_process;
  Category category = Category::financial;
  Tier tier = Tier::standard;
  std::optional<std::string> file_key;
  std::optional<Timestamp> last_validated_at;
  int validation_frequency_days = kDefaultValidationFrequencyDays;
  RecordStatus status = RecordStatus::active;
  std::string status_note;
  Timestamp created_at{};
  Timestamp updated_at{};
  std::string created_by;
  std::string updated_by;

  friend bool operator==(const EucRecord&, const EucRecord&) = default;
};

inline ControlRequirementSet required_controls(const EucRecord& r) noexcept {
  return required_controls(r.category, r.tier);
}

/// never_validated without a last validation; overdue when today is past
/// last + frequency; due when the deadline is at most `window_days` away.
ValidationState validation_due(const EucRecord& r, std::chrono::sys_days today, int window_days = kDueWindowDays);

/// Stored form (no derived fields).
nlohmann::ordered_json record_to_json(const EucRecord& r);
EucRecord record_from_json(const nlohmann::json& j);
/// Stored form plus required_controls and validation_state for `today`.
nlohmann::ordered_json record_view_json(const EucRecord& r, std::chrono::sys_days today);

/// Registration payloads for the 700 financial / 200 operational demo
/// registry. Deterministic for a given seed and clock value.
std::vector<nlohmann::json> demo_seed_records(Timestamp now, std::uint32_t seed = 20240131);
inline constexpr int kDemoFinancial = 700;
inline constexpr int kDemoOperational = 200;

/// Durable registry with the latest audit report and remediation plan per
/// record. State lives in memory; every mutation is appended to
/// `dir/inventory.jsonl` and fsync'd before it becomes visible. The log is
/// folded into `dir/inventory.snapshot.json` once it grows past a threshold.
/// Writers are serialized; readers run concurrently.
class Inventory {
 public:
  using Clock = std::function<Timestamp()>;

  explicit Inventory(const std::filesystem::path& dir, Clock clock = now_utc);
  ~Inventory();

  /// Errors: validation-error (with field), duplicate-file-key.
  EucRecord register_record(const nlohmann::json& fields, const std::string& principal);
  /// All-or-nothing batch with a single fsync.
  std::vector<EucRecord> register_many(const std::vector<nlohmann::json>& fields, const std::string& principal);

  /// Partial update. `expected_updated_at`, when present, must equal the
  /// stored value (conflict otherwise). Retired and replaced records accept
  /// only status_note (record-immutable otherwise). Errors also: not-found,
  /// validation-error, duplicate-file-key.
  EucRecord update_record(const std::string& record_id, const nlohmann::json& patch, const std::string& principal);

  std::optional<EucRecord> record(const std::string& record_id) const;
  std::vector<EucRecord> records() const;
  std::size_t size() const;

  /// Audits `wb`, stores the report and replaces the record's plan. Items of
  /// the previous plan carry their status into matching new items; done
  /// items whose finding reappears are reopened and listed as regressions.
  standards::AuditReport run_audit(const std::string& record_id, const Workbook& wb,
                                   const standards::RuleConfig& cfg,
                                   const std::optional<std::string>& location = std::nullopt);
  std::optional<standards::AuditReport> latest_audit(const std::string& record_id) const;
  std::optional<standards::RemediationPlan> plan(const std::string& record_id) const;

  /// {"status": ..., "justification"?: ..., "owner"?: ...}. Errors: not-found,
  /// validation-error, invalid-transition, missing-justification.
  standards::PlanItem update_plan_item(const std::string& item_id, const nlohmann::json& patch,
                                       const std::string& principal);

  /// Counts by category x tier x status, validation-state histogram of
  /// active records, latest compliance score per record.
  nlohmann::ordered_json summary(std::chrono::sys_days today) const;

  /// Writes the snapshot and empties the log.
  void compact();
  std::size_t log_records() const;

  Timestamp now() const { return clock_(); }

 private:
  struct State;
  std::unique_ptr<State> state_;
  Clock clock_;
  mutable std::shared_mutex mutex_;
};

}  // namespace euc::inventory
