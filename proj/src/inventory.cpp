#include "euc/inventory.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <mutex>
#include <random>
#include <set>

#include "durable_file.hpp"
#include "euc/error.hpp"

namespace euc::inventory {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr std::array kCategories{Category::financial, Category::operational};
constexpr std::array kTiers{Tier::critical, Tier::significant, Tier::standard};
constexpr std::array kStatuses{RecordStatus::active, RecordStatus::retired, RecordStatus::replaced};
constexpr std::array kValidationStates{ValidationState::never_validated, ValidationState::due,
                                       ValidationState::overdue, ValidationState::current};

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<E, N>& all, std::string_view s) {
  for (E e : all) {
    if (to_string(e) == s) return e;
  }
  return std::nullopt;
}

[[noreturn]] void invalid(const std::string& field, const std::string& message) {
  throw Error("validation-error", message, field);
}

constexpr std::size_t kCompactThreshold = 4096;

}  // namespace

std::string_view to_string(Category c) noexcept { return c == Category::financial ? "financial" : "operational"; }

std::string_view to_string(Tier t) noexcept {
  switch (t) {
    case Tier::critical: return "critical";
    case Tier::significant: return "significant";
    case Tier::standard: return "standard";
  }
  return "standard";
}

std::string_view to_string(RecordStatus s) noexcept {
  switch (s) {
    case RecordStatus::active: return "active";
    case RecordStatus::retired: return "retired";
    case RecordStatus::replaced: return "replaced";
  }
  return "active";
}

std::string_view to_string(ValidationState v) noexcept {
  switch (v) {
    case ValidationState::never_validated: return "never_validated";
    case ValidationState::due: return "due";
    case ValidationState::overdue: return "overdue";
    case ValidationState::current: return "current";
  }
  return "never_validated";
}

std::optional<Category> category_from_string(std::string_view s) noexcept { return lookup(kCategories, s); }
std::optional<Tier> tier_from_string(std::string_view s) noexcept { return lookup(kTiers, s); }
std::optional<RecordStatus> record_status_from_string(std::string_view s) noexcept { return lookup(kStatuses, s); }

int ControlRequirementSet::count() const noexcept {
  return int{inventory_listed} + int{design_standards} + int{independent_validation} + int{checking_controls} +
         int{change_logs} + int{change_monitoring} + int{security} + int{archiving};
}

ControlRequirementSet required_controls(Category, Tier tier) noexcept {
  ControlRequirementSet c;
  c.inventory_listed = true;
  c.archiving = true;
  if (tier == Tier::standard) return c;
  c.design_standards = c.independent_validation = c.checking_controls = c.change_logs = c.security = true;
  c.change_monitoring = tier == Tier::critical;
  return c;
}

ordered_json controls_to_json(const ControlRequirementSet& c) {
  ordered_json j;
  j["inventory_listed"] = c.inventory_listed;
  j["design_standards"] = c.design_standards;
  j["independent_validation"] = c.independent_validation;
  j["checking_controls"] = c.checking_controls;
  j["change_logs"] = c.change_logs;
  j["change_monitoring"] = c.change_monitoring;
  j["security"] = c.security;
  j["archiving"] = c.archiving;
  return j;
}

ValidationState validation_due(const EucRecord& r, std::chrono::sys_days today, int window_days) {
  if (!r.last_validated_at) return ValidationState::never_validated;
  const auto deadline = to_day(*r.last_validated_at) + std::chrono::days(r.validation_frequency_days);
  if (today > deadline) return ValidationState::overdue;
  if ((deadline - today).count() <= window_days) return ValidationState::due;
  return ValidationState::current;
}

ordered_json record_to_json(const EucRecord& r) {
  ordered_json j;
  j["record_id"] = r.record_id;
  j["name"] = r.name;
  j["owner"] = r.owner;
  j["line_manager"] = r.line_manager;
  j["business_process"] = r.business_process;
  j["category"] = to_string(r.category);
  j["tier"] = to_string(r.tier);
  j["file_key"] = r.file_key ? ordered_json(*r.file_key) : ordered_json();
  j["last_validated_at"] = r.last_validated_at ? ordered_json(format_timestamp(*r.last_validated_at)) : ordered_json();
  j["validation_frequency_days"] = r.validation_frequency_days;
  j["status"] = to_string(r.status);
  j["status_note"] = r.status_note;
  j["created_at"] = format_timestamp(r.created_at);
  j["updated_at"] = format_timestamp(r.updated_at);
  j["created_by"] = r.created_by;
  j["updated_by"] = r.updated_by;
  return j;
}

EucRecord record_from_json(const json& j) {
  try {
    EucRecord r;
    r.record_id = j.at("record_id").get<std::string>();
    r.name = j.at("name").get<std::string>();
    r.owner = j.at("owner").get<std::string>();
    r.line_manager = j.at("line_manager").get<std::string>();
    r.business_process = j.at("business_process").get<std::string>();
    const auto cat = category_from_string(j.at("category").get<std::string>());
    const auto tier = tier_from_string(j.at("tier").get<std::string>());
    const auto status = record_status_from_string(j.at("status").get<std::string>());
    if (!cat || !tier || !status) throw Error("invalid-document", "record " + r.record_id + " has a bad enum value");
    r.category = *cat;
    r.tier = *tier;
    r.status = *status;
    if (!j.at("file_key").is_null()) r.file_key = j.at("file_key").get<std::string>();
    if (!j.at("last_validated_at").is_null()) {
      r.last_validated_at = parse_timestamp(j.at("last_validated_at").get<std::string>());
    }
    r.validation_frequency_days = j.at("validation_frequency_days").get<int>();
    r.status_note = j.at("status_note").get<std::string>();
    r.created_at = parse_timestamp(j.at("created_at").get<std::string>());
    r.updated_at = parse_timestamp(j.at("updated_at").get<std::string>());
    r.created_by = j.at("created_by").get<std::string>();
    r.updated_by = j.at("updated_by").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw Error("invalid-document", std::string("malformed record: ") + e.what());
  }
}

ordered_json record_view_json(const EucRecord& r, std::chrono::sys_days today) {
  ordered_json j = record_to_json(r);
  j["required_controls"] = controls_to_json(required_controls(r));
  j["validation_state"] = to_string(validation_due(r, today));
  return j;
}

// ---------------------------------------------------------------------------
// Field validation shared by register and update

namespace {

std::string text_field(const json& v, const std::string& field, bool required) {
  if (!v.is_string()) invalid(field, field + " must be a string");
  std::string s = v.get<std::string>();
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) {
    if (required) invalid(field, field + " is required");
    return {};
  }
  s.erase(0, first);
  s.erase(s.find_last_not_of(" \t\r\n") + 1);
  if (s.size() > 512) invalid(field, field + " is longer than 512 characters");
  return s;
}

// Applies one field of a register/update payload onto `r`.
void apply_field(EucRecord& r, const std::string& key, const json& v) {
  if (key == "name") {
    r.name = text_field(v, key, true);
  } else if (key == "owner") {
    r.owner = text_field(v, key, true);
  } else if (key == "line_manager") {
    r.line_manager = v.is_null() ? "" : text_field(v, key, false);
  } else if (key == "business_process") {
    r.business_process = v.is_null() ? "" : text_field(v, key, false);
  } else if (key == "category") {
    const auto c = v.is_string() ? category_from_string(v.get<std::string>()) : std::nullopt;
    if (!c) invalid(key, "category must be financial or operational");
    r.category = *c;
  } else if (key == "tier") {
    const auto t = v.is_string() ? tier_from_string(v.get<std::string>()) : std::nullopt;
    if (!t) invalid(key, "tier must be critical, significant or standard");
    r.tier = *t;
  } else if (key == "file_key") {
    if (v.is_null()) {
      r.file_key.reset();
    } else {
      const std::string s = text_field(v, key, false);
      r.file_key = s.empty() ? std::nullopt : std::optional<std::string>(s);
    }
  } else if (key == "last_validated_at") {
    if (v.is_null()) {
      r.last_validated_at.reset();
    } else {
      if (!v.is_string()) invalid(key, "last_validated_at must be an ISO-8601 timestamp");
      try {
        r.last_validated_at = parse_timestamp(v.get<std::string>());
      } catch (const Error&) {
        invalid(key, "last_validated_at must be an ISO-8601 timestamp");
      }
    }
  } else if (key == "validation_frequency_days") {
    if (!v.is_number_integer() || v.get<std::int64_t>() <= 0 || v.get<std::int64_t>() > 36500) {
      invalid(key, "validation_frequency_days must be an integer between 1 and 36500");
    }
    r.validation_frequency_days = v.get<int>();
  } else if (key == "status") {
    const auto s = v.is_string() ? record_status_from_string(v.get<std::string>()) : std::nullopt;
    if (!s) invalid(key, "status must be active, retired or replaced");
    r.status = *s;
  } else if (key == "status_note") {
    r.status_note = v.is_null() ? "" : text_field(v, key, false);
  } else {
    invalid(key, "unknown or read-only field '" + key + "'");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Demo data

std::vector<json> demo_seed_records(Timestamp now, std::uint32_t seed) {
  static const char* fin_processes[] = {"Loan loss provisioning", "Liquidity forecasting", "Capital adequacy",
                                        "Regulatory returns",     "Hedge effectiveness",   "Expense accruals",
                                        "Fair value pricing",     "Interest rate risk",    "Tax provisioning",
                                        "Management accounts"};
  static const char* ops_processes[] = {"Payment reconciliation", "Client onboarding", "Trade settlement",
                                        "Collateral management",  "Staff rostering",   "Complaints tracking",
                                        "Vendor management",      "Data quality"};
  static const char* owners[] = {"a.khan", "b.osei", "c.li", "d.murphy", "e.novak", "f.silva",
                                 "g.tanaka", "h.weber", "i.rossi", "j.smith", "k.ahmed", "l.dubois"};
  static const char* managers[] = {"m.grant", "n.hughes", "o.park", "p.costa"};
  static const int frequencies[] = {90, 180, 365};

  std::mt19937 rng(seed);
  auto pick = [&](auto& arr) -> decltype(auto) { return arr[rng() % std::size(arr)]; };
  std::vector<json> out;
  out.reserve(kDemoFinancial + kDemoOperational);
  for (int i = 0; i < kDemoFinancial + kDemoOperational; ++i) {
    const bool fin = i < kDemoFinancial;
    const int seq = fin ? i + 1 : i - kDemoFinancial + 1;
    const char* process = fin ? pick(fin_processes) : pick(ops_processes);
    // Roughly 15% critical, 35% significant, 50% standard.
    const unsigned roll = rng() % 100;
    const Tier tier = roll < 15 ? Tier::critical : roll < 50 ? Tier::significant : Tier::standard;
    const int freq = frequencies[rng() % 3];
    char key[32];
    std::snprintf(key, sizeof key, "%s/%04d.xlsx", fin ? "fin" : "ops", seq);
    json r;
    r["name"] = std::string(process) + " " + (fin ? "FIN-" : "OPS-") + std::to_string(seq);
    r["owner"] = pick(owners);
    r["line_manager"] = pick(managers);
    r["business_process"] = process;
    r["category"] = fin ? "financial" : "operational";
    r["tier"] = to_string(tier);
    r["file_key"] = key;
    r["validation_frequency_days"] = freq;
    if (rng() % 5 != 0) {
      const auto days_ago = static_cast<int>(rng() % static_cast<unsigned>(freq + freq / 2));
      r["last_validated_at"] = format_timestamp(std::chrono::floor<std::chrono::days>(now) - std::chrono::days(days_ago));
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Store

struct Inventory::State {
  fs::path dir;
  std::unique_ptr<detail::AppendLog> log;
  std::size_t log_records = 0;
  std::int64_t next_record = 1;
  std::map<std::string, EucRecord> records;
  std::map<std::string, standards::AuditReport> audits;
  std::map<std::string, std::int64_t> audit_counts;
  std::map<std::string, standards::RemediationPlan> plans;
  std::map<std::string, std::string> item_owner;  // plan item id -> record id

  fs::path snapshot_path() const { return dir / "inventory.snapshot.json"; }

  void put_record(EucRecord r) {
    const auto n = std::strtoll(r.record_id.c_str() + 4, nullptr, 10);
    next_record = std::max(next_record, static_cast<std::int64_t>(n) + 1);
    records[r.record_id] = std::move(r);
  }

  void put_plan(const std::string& record_id, standards::RemediationPlan plan) {
    if (auto old = plans.find(record_id); old != plans.end()) {
      for (const auto& item : old->second.items) item_owner.erase(item.item_id);
    }
    for (const auto& item : plan.items) item_owner[item.item_id] = record_id;
    plans[record_id] = std::move(plan);
  }

  void apply(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "record") {
      put_record(record_from_json(j.at("record")));
    } else if (type == "audit") {
      const std::string id = j.at("record_id").get<std::string>();
      audits[id] = standards::parse_report(j.at("report").dump());
      audit_counts[id] = j.at("audit_seq").get<std::int64_t>();
    } else if (type == "plan") {
      put_plan(j.at("record_id").get<std::string>(), standards::parse_plan(j.at("plan").dump()));
    } else {
      throw Error("storage-failure", "unknown inventory record type '" + type + "'");
    }
  }

  static std::string record_line(const EucRecord& r) {
    ordered_json j;
    j["type"] = "record";
    j["record"] = record_to_json(r);
    return j.dump();
  }

  std::string audit_line(const std::string& id, const standards::AuditReport& report, std::int64_t seq) const {
    ordered_json j;
    j["type"] = "audit";
    j["record_id"] = id;
    j["audit_seq"] = seq;
    j["report"] = ordered_json::parse(standards::serialize_report(report));
    return j.dump();
  }

  static std::string plan_line(const std::string& id, const standards::RemediationPlan& plan) {
    ordered_json j;
    j["type"] = "plan";
    j["record_id"] = id;
    j["plan"] = ordered_json::parse(standards::serialize_plan(plan));
    return j.dump();
  }

  void append(const std::vector<std::string>& lines) {
    log->append_all(lines);
    log_records += lines.size();
  }

  std::string next_id() {
    char buf[32];
    std::snprintf(buf, sizeof buf, "app-%06lld", static_cast<long long>(next_record++));
    return buf;
  }

  void check_file_key(const EucRecord& r) const {
    if (!r.file_key || r.status != RecordStatus::active) return;
    for (const auto& [id, other] : records) {
      if (id != r.record_id && other.status == RecordStatus::active && other.file_key == r.file_key) {
        throw Error("duplicate-file-key", "file_key '" + *r.file_key + "' already belongs to " + id, "file_key");
      }
    }
  }

  // Later updates get strictly later stamps so updated_at works as a version.
  static Timestamp bump(Timestamp now, Timestamp previous) {
    return now > previous ? now : previous + std::chrono::seconds(1);
  }

  EucRecord build_new(const json& fields, const std::string& principal, Timestamp now) {
    if (!fields.is_object()) invalid("body", "expected a JSON object");
    EucRecord r;
    for (const char* required : {"name", "owner", "category", "tier"}) {
      if (!fields.contains(required)) invalid(required, std::string(required) + " is required");
    }
    for (const auto& item : fields.items()) {
      if (item.key() == "status" && item.value() != "active") invalid("status", "new records must be active");
      if (item.key() == "status_note") invalid("status_note", "status_note is set by updates only");
      apply_field(r, item.key(), item.value());
    }
    r.created_at = r.updated_at = now;
    r.created_by = r.updated_by = principal;
    return r;
  }
};

Inventory::Inventory(const fs::path& dir, Clock clock) : state_(std::make_unique<State>()), clock_(std::move(clock)) {
  State& s = *state_;
  s.dir = dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("storage-failure", "cannot create " + dir.string() + ": " + ec.message());
  try {
    if (fs::exists(s.snapshot_path())) {
      const json snap = json::parse(detail::read_text_file(s.snapshot_path()));
      for (const auto& r : snap.at("records")) s.put_record(record_from_json(r));
      for (const auto& a : snap.at("audits")) s.apply(a);
      for (const auto& p : snap.at("plans")) s.apply(p);
      s.next_record = std::max(s.next_record, snap.at("next_record").get<std::int64_t>());
    }
    s.log = std::make_unique<detail::AppendLog>(dir / "inventory.jsonl");
    for (const auto& line : s.log->initial_lines()) s.apply(json::parse(line));
  } catch (const json::exception& e) {
    throw Error("storage-failure", std::string("corrupt inventory store: ") + e.what());
  }
  s.log_records = s.log->initial_lines().size();
}

Inventory::~Inventory() = default;

EucRecord Inventory::register_record(const json& fields, const std::string& principal) {
  return register_many({fields}, principal).front();
}

std::vector<EucRecord> Inventory::register_many(const std::vector<json>& fields, const std::string& principal) {
  std::unique_lock lock(mutex_);
  State& s = *state_;
  const Timestamp now = clock_();
  std::vector<EucRecord> created;
  std::set<std::string> batch_keys;
  const auto saved_next = s.next_record;
  try {
    for (const auto& f : fields) {
      EucRecord r = s.build_new(f, principal, now);
      s.check_file_key(r);
      if (r.file_key && !batch_keys.insert(*r.file_key).second) {
        throw Error("duplicate-file-key", "file_key '" + *r.file_key + "' repeats within the batch", "file_key");
      }
      r.record_id = s.next_id();
      created.push_back(std::move(r));
    }
    std::vector<std::string> lines;
    for (const auto& r : created) lines.push_back(State::record_line(r));
    s.append(lines);
  } catch (...) {
    s.next_record = saved_next;
    throw;
  }
  for (const auto& r : created) s.put_record(r);
  if (s.log_records > kCompactThreshold) {
    lock.unlock();
    compact();
  }
  return created;
}

EucRecord Inventory::update_record(const std::string& record_id, const json& patch, const std::string& principal) {
  std::unique_lock lock(mutex_);
  State& s = *state_;
  auto it = s.records.find(record_id);
  if (it == s.records.end()) throw Error("not-found", "no application " + record_id);
  if (!patch.is_object()) invalid("body", "expected a JSON object");
  EucRecord r = it->second;
  if (patch.contains("expected_updated_at")) {
    const json& v = patch.at("expected_updated_at");
    if (!v.is_string() || v.get<std::string>() != format_timestamp(r.updated_at)) {
      throw Error("conflict", "record " + record_id + " was updated at " + format_timestamp(r.updated_at),
                  "expected_updated_at");
    }
  }
  const bool settled = r.status != RecordStatus::active;
  for (const auto& item : patch.items()) {
    if (item.key() == "expected_updated_at") continue;
    if (settled && item.key() != "status_note") {
      throw Error("record-immutable", "record " + record_id + " is " + std::string(to_string(r.status)) +
                                          "; only status_note may change", item.key());
    }
    apply_field(r, item.key(), item.value());
  }
  s.check_file_key(r);
  r.updated_at = State::bump(clock_(), r.updated_at);
  r.updated_by = principal;
  s.append({State::record_line(r)});
  it->second = r;
  if (s.log_records > kCompactThreshold) {
    lock.unlock();
    compact();
  }
  return r;
}

std::optional<EucRecord> Inventory::record(const std::string& record_id) const {
  std::shared_lock lock(mutex_);
  auto it = state_->records.find(record_id);
  if (it == state_->records.end()) return std::nullopt;
  return it->second;
}

std::vector<EucRecord> Inventory::records() const {
  std::shared_lock lock(mutex_);
  std::vector<EucRecord> out;
  out.reserve(state_->records.size());
  for (const auto& [id, r] : state_->records) out.push_back(r);
  return out;
}

std::size_t Inventory::size() const {
  std::shared_lock lock(mutex_);
  return state_->records.size();
}

standards::AuditReport Inventory::run_audit(const std::string& record_id, const Workbook& wb,
                                            const standards::RuleConfig& cfg,
                                            const std::optional<std::string>& location) {
  std::unique_lock lock(mutex_);
  State& s = *state_;
  auto rec = s.records.find(record_id);
  if (rec == s.records.end()) throw Error("not-found", "no application " + record_id);

  standards::AuditContext ctx;
  ctx.audited_at = clock_();
  ctx.path = location;
  const auto old_plan = s.plans.find(record_id);
  standards::AuditReport report = old_plan == s.plans.end() ? standards::audit(wb, cfg, ctx)
                                                            : standards::qa_recheck(wb, old_plan->second, cfg, ctx);
  const std::int64_t seq = s.audit_counts[record_id] + 1;
  standards::RemediationPlan plan =
      standards::build_plan(report, cfg.effort, rec->second.owner, record_id + "-a" + std::to_string(seq));
  if (old_plan != s.plans.end()) {
    for (auto& item : plan.items) {
      for (const auto& prev : old_plan->second.items) {
        if (!same_location(prev.finding, item.finding)) continue;
        item.owner = prev.owner;
        // A done item whose finding reproduced is a regression and starts again.
        if (prev.status != standards::ItemStatus::done) {
          item.status = prev.status;
          item.action_text = prev.action_text;
        }
        break;
      }
    }
  }
  s.append({s.audit_line(record_id, report, seq), State::plan_line(record_id, plan)});
  s.audits[record_id] = report;
  s.audit_counts[record_id] = seq;
  s.put_plan(record_id, std::move(plan));
  return report;
}

std::optional<standards::AuditReport> Inventory::latest_audit(const std::string& record_id) const {
  std::shared_lock lock(mutex_);
  auto it = state_->audits.find(record_id);
  if (it == state_->audits.end()) return std::nullopt;
  return it->second;
}

std::optional<standards::RemediationPlan> Inventory::plan(const std::string& record_id) const {
  std::shared_lock lock(mutex_);
  auto it = state_->plans.find(record_id);
  if (it == state_->plans.end()) return std::nullopt;
  return it->second;
}

standards::PlanItem Inventory::update_plan_item(const std::string& item_id, const json& patch,
                                                const std::string& principal) {
  std::unique_lock lock(mutex_);
  State& s = *state_;
  auto owner = s.item_owner.find(item_id);
  if (owner == s.item_owner.end()) throw Error("not-found", "no plan item " + item_id);
  const std::string record_id = owner->second;
  if (!patch.is_object()) invalid("body", "expected a JSON object");
  standards::RemediationPlan plan = s.plans.at(record_id);
  auto item = std::find_if(plan.items.begin(), plan.items.end(),
                           [&](const standards::PlanItem& i) { return i.item_id == item_id; });
  for (const auto& field : patch.items()) {
    if (field.key() != "status" && field.key() != "justification" && field.key() != "owner") {
      invalid(field.key(), "unknown or read-only field '" + field.key() + "'");
    }
  }
  if (patch.contains("owner")) item->owner = text_field(patch.at("owner"), "owner", true);
  if (patch.contains("status")) {
    const json& v = patch.at("status");
    const auto to = v.is_string() ? standards::item_status_from_string(v.get<std::string>()) : std::nullopt;
    if (!to) invalid("status", "status must be open, in_progress, done or accepted_risk");
    std::string justification;
    if (patch.contains("justification")) justification = text_field(patch.at("justification"), "justification", false);
    if (*to == standards::ItemStatus::accepted_risk && !justification.empty()) {
      justification += " (" + principal + ")";
    }
    standards::transition(*item, *to, justification);
  }
  const standards::PlanItem result = *item;
  s.append({State::plan_line(record_id, plan)});
  s.put_plan(record_id, std::move(plan));
  return result;
}

ordered_json Inventory::summary(std::chrono::sys_days today) const {
  std::shared_lock lock(mutex_);
  const State& s = *state_;
  std::map<std::tuple<Category, Tier, RecordStatus>, std::int64_t> cells;
  std::map<Category, std::map<RecordStatus, std::int64_t>> by_category;
  std::map<ValidationState, std::int64_t> validation;
  for (const auto& [id, r] : s.records) {
    ++cells[{r.category, r.tier, r.status}];
    ++by_category[r.category][r.status];
    if (r.status == RecordStatus::active) ++validation[validation_due(r, today)];
  }

  ordered_json j;
  j["schema_version"] = standards::kSchemaVersion;
  j["as_of"] = format_timestamp(Timestamp(today));
  j["total"] = s.records.size();
  ordered_json cats = ordered_json::object();
  ordered_json active = ordered_json::object();
  for (Category c : kCategories) {
    ordered_json counts = ordered_json::object();
    std::int64_t total = 0;
    for (RecordStatus st : kStatuses) {
      const auto n = by_category[c][st];
      counts[std::string(to_string(st))] = n;
      total += n;
    }
    counts["total"] = total;
    cats[std::string(to_string(c))] = std::move(counts);
    active[std::string(to_string(c))] = by_category[c][RecordStatus::active];
  }
  j["active_by_category"] = std::move(active);
  j["by_category"] = std::move(cats);
  ordered_json grid = ordered_json::array();
  for (Category c : kCategories) {
    for (Tier t : kTiers) {
      for (RecordStatus st : kStatuses) {
        auto it = cells.find({c, t, st});
        ordered_json row;
        row["category"] = to_string(c);
        row["tier"] = to_string(t);
        row["status"] = to_string(st);
        row["count"] = it == cells.end() ? 0 : it->second;
        grid.push_back(std::move(row));
      }
    }
  }
  j["by_category_tier_status"] = std::move(grid);
  ordered_json hist = ordered_json::object();
  for (ValidationState v : kValidationStates) hist[std::string(to_string(v))] = validation[v];
  j["validation_states"] = std::move(hist);
  ordered_json scores = ordered_json::array();
  for (const auto& [id, report] : s.audits) {
    ordered_json row;
    row["record_id"] = id;
    row["compliance_score"] = report.compliance_score();
    row["audited_at"] = format_timestamp(report.audited_at);
    row["findings"] = report.findings.size();
    scores.push_back(std::move(row));
  }
  j["compliance"] = std::move(scores);
  return j;
}

void Inventory::compact() {
  std::unique_lock lock(mutex_);
  State& s = *state_;
  ordered_json snap;
  snap["schema_version"] = standards::kSchemaVersion;
  snap["next_record"] = s.next_record;
  snap["records"] = ordered_json::array();
  for (const auto& [id, r] : s.records) snap["records"].push_back(record_to_json(r));
  snap["audits"] = ordered_json::array();
  for (const auto& [id, report] : s.audits) {
    snap["audits"].push_back(ordered_json::parse(s.audit_line(id, report, s.audit_counts[id])));
  }
  snap["plans"] = ordered_json::array();
  for (const auto& [id, plan] : s.plans) snap["plans"].push_back(ordered_json::parse(State::plan_line(id, plan)));
  // Snapshot first: replaying the old log over it is harmless because every
  // log record is a whole-object upsert.
  detail::write_file_atomic(s.snapshot_path(), snap.dump());
  s.log->rewrite({});
  s.log_records = 0;
}

std::size_t Inventory::log_records() const {
  std::shared_lock lock(mutex_);
  return state_->log_records;
}

}  // namespace euc::inventory
