#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "euc/time.hpp"
#include "euc/workbook.hpp"

namespace euc::changes {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

enum class ChangeKind { value_changed, formula_changed, cell_added, cell_removed, lock_changed };
std::string_view to_string(ChangeKind k) noexcept;

struct CellChange {
  std::string sheet;
  CellAddr addr;
  ChangeKind kind = ChangeKind::value_changed;
  std::optional<Cell> before;
  std::optional<Cell> after;
  friend bool operator==(const CellChange&, const CellChange&) = default;
};

struct DiffResult {
  std::vector<CellChange> changes;  // by sheet order of the new workbook, then (row, col)
  bool structural = false;
  std::vector<std::string> structural_notes;  // human-readable reasons
  std::vector<std::string> sheets_added;      // in new-workbook order
  std::vector<std::string> sheets_removed;

  bool empty() const { return changes.empty() && !structural; }
};

/// Address-aligned comparison; no move detection. Per cell the kind is the
/// first difference among formula (whitespace-normalized), value, locked.
/// Notes are not compared.
DiffResult diff(const Workbook& before, const Workbook& after);

/// Cell-wise replay of `d` onto `base`: removed sheets dropped, added sheets
/// appended, every change's `after` cell written (or erased).
Workbook apply_diff(const Workbook& base, const DiffResult& d);

struct AlertRuleSet {
  bool formula_change_any = false;
  bool formula_change_in_locked = false;
  std::optional<double> value_change_over_pct;  // fraction, e.g. 0.1 = 10%
  bool structural_change = false;
  bool new_external_reference = false;
  bool template_sheet_modified = false;
  std::vector<std::string> template_sheets = {"Documentation", "Change_Log", "Review_Log"};

  friend bool operator==(const AlertRuleSet&, const AlertRuleSet&) = default;
};

/// Every trigger on, 10% value threshold.
AlertRuleSet default_alert_rules();
/// {"formula_change_any":true,"value_change_over_pct":0.1,...}; unknown keys
/// and non-positive thresholds raise invalid-config.
AlertRuleSet parse_alert_rules(const nlohmann::json& j);
AlertRuleSet parse_alert_rules_text(std::string_view json_text);
nlohmann::ordered_json alert_rules_to_json(const AlertRuleSet& rules);

inline constexpr double kPctEpsilon = 1e-12;

/// Trigger ids in catalogue order.
std::vector<std::string> apply_alert_rules(const DiffResult& d, const Workbook& before, const AlertRuleSet& rules);

enum class EventState { auto_logged, pending_review, approved, rejected };
std::string_view to_string(EventState s) noexcept;
std::optional<EventState> event_state_from_string(std::string_view s) noexcept;

enum class Verdict { approved, rejected };
std::string_view to_string(Verdict v) noexcept;
std::optional<Verdict> verdict_from_string(std::string_view s) noexcept;

struct ReviewDecision {
  std::string reviewer;
  Timestamp decided_at{};
  Verdict verdict = Verdict::approved;
  std::string comment;
  friend bool operator==(const ReviewDecision&, const ReviewDecision&) = default;
};

struct Snapshot {
  std::int64_t snapshot_id = 0;
  std::string file_key;
  Timestamp taken_at{};
  std::string content_hash;
  Workbook workbook;
};

struct ChangeEvent {
  std::string event_id;
  std::string file_key;
  std::int64_t from_snapshot = 0;
  std::int64_t to_snapshot = 0;
  std::vector<CellChange> changes;
  bool structural = false;
  std::vector<std::string> structural_notes;
  std::string author;
  Timestamp detected_at{};
  std::vector<std::string> triggered_rules;
  EventState state = EventState::auto_logged;
  std::optional<ReviewDecision> decision;
  friend bool operator==(const ChangeEvent&, const ChangeEvent&) = default;
};

/// auto_logged when no trigger fired, pending_review otherwise.
ChangeEvent make_event(std::string event_id, std::string file_key, std::int64_t from, std::int64_t to,
                       const DiffResult& d, std::vector<std::string> triggers, std::string author, Timestamp at);

/// pending_review -> approved | rejected. Errors: not-pending, self-review,
/// missing-comment (reject without comment). On error the event is unchanged.
void decide(ChangeEvent& event, const ReviewDecision& decision);

nlohmann::ordered_json change_to_json(const CellChange& c);
nlohmann::ordered_json event_to_json(const ChangeEvent& e);
ChangeEvent event_from_json(const nlohmann::json& j);
nlohmann::ordered_json diff_to_json(const DiffResult& d);

/// Durable per-file snapshot history and change-event log under `dir`:
///   changes.jsonl          snapshot headers, event records, baseline moves
///   blobs/<hash>.wb.json   workbook bodies by content hash
/// Thread-safe; writes are serialized internally.
class ChangeStore {
 public:
  explicit ChangeStore(const std::filesystem::path& dir);
  ~ChangeStore();

  Snapshot take_snapshot(const std::string& file_key, const Workbook& wb, Timestamp at);

  struct Submission {
    Snapshot snapshot;
    std::optional<ChangeEvent> event;  // absent for the baseline and for no-op submissions
  };
  /// First submission becomes the baseline. Later ones are diffed against
  /// the current baseline; the baseline advances on auto_logged events.
  Submission submit(const std::string& file_key, const Workbook& wb, const std::string& author,
                    const AlertRuleSet& rules, Timestamp at);

  /// Decides a pending event; on approval with `rebaseline` the event's
  /// snapshot becomes the baseline. Errors as decide() plus not-found.
  ChangeEvent decide(const std::string& event_id, const ReviewDecision& decision, bool rebaseline = true);

  std::optional<ChangeEvent> event(const std::string& event_id) const;
  std::vector<ChangeEvent> events(std::optional<EventState> state = std::nullopt,
                                  const std::optional<std::string>& file_key = std::nullopt) const;
  std::optional<std::int64_t> baseline_id(const std::string& file_key) const;
  std::optional<Snapshot> snapshot(const std::string& file_key, std::int64_t snapshot_id) const;
  std::vector<std::string> file_keys() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
  mutable std::mutex mutex_;
};

}  // namespace euc::changes
