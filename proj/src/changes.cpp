#include "euc/changes.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "durable_file.hpp"
#include "euc/error.hpp"
#include "euc/formula.hpp"

namespace euc::changes {

using nlohmann::json;
using nlohmann::ordered_json;

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("storage-failure", "SHA-256 computation failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return out.str();
}

std::string_view to_string(ChangeKind k) noexcept {
  switch (k) {
    case ChangeKind::value_changed: return "value_changed";
    case ChangeKind::formula_changed: return "formula_changed";
    case ChangeKind::cell_added: return "cell_added";
    case ChangeKind::cell_removed: return "cell_removed";
    case ChangeKind::lock_changed: return "lock_changed";
  }
  return "value_changed";
}

namespace {

std::optional<ChangeKind> change_kind_from_string(std::string_view s) {
  for (auto k : {ChangeKind::value_changed, ChangeKind::formula_changed, ChangeKind::cell_added,
                 ChangeKind::cell_removed, ChangeKind::lock_changed}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<std::string> normalized_formula(const Cell& c) {
  if (!c.formula) return std::nullopt;
  return formula::whitespace_normalized(*c.formula);
}

struct Bounds {
  int min_row = 0, min_col = 0, max_row = 0, max_col = 0;
  friend bool operator==(const Bounds&, const Bounds&) = default;
};

Bounds bounds_of(const Sheet& s) {
  if (s.cells.empty()) return {};
  Bounds b{kMaxRow, kMaxCol, 0, 0};
  for (const auto& [addr, cell] : s.cells) {
    b.min_row = std::min(b.min_row, addr.row);
    b.max_row = std::max(b.max_row, addr.row);
    b.min_col = std::min(b.min_col, addr.col);
    b.max_col = std::max(b.max_col, addr.col);
  }
  return b;
}

std::string bounds_text(const Bounds& b) {
  if (b.max_row == 0) return "empty";
  return addr_to_a1({b.min_col, b.min_row}) + ":" + addr_to_a1({b.max_col, b.max_row});
}

const Sheet* exact_sheet(const Workbook& wb, const std::string& name) {
  for (const auto& s : wb.sheets) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

void diff_sheet(const Sheet& before, const Sheet& after, DiffResult& out) {
  auto b = before.cells.begin();
  auto a = after.cells.begin();
  while (b != before.cells.end() || a != after.cells.end()) {
    if (a == after.cells.end() || (b != before.cells.end() && b->first < a->first)) {
      out.changes.push_back({after.name, b->first, ChangeKind::cell_removed, b->second, std::nullopt});
      ++b;
    } else if (b == before.cells.end() || a->first < b->first) {
      out.changes.push_back({after.name, a->first, ChangeKind::cell_added, std::nullopt, a->second});
      ++a;
    } else {
      const Cell& old_cell = b->second;
      const Cell& new_cell = a->second;
      std::optional<ChangeKind> kind;
      if (normalized_formula(old_cell) != normalized_formula(new_cell)) {
        kind = ChangeKind::formula_changed;
      } else if (old_cell.value != new_cell.value) {
        kind = ChangeKind::value_changed;
      } else if (old_cell.locked != new_cell.locked) {
        kind = ChangeKind::lock_changed;
      }
      if (kind) out.changes.push_back({after.name, a->first, *kind, old_cell, new_cell});
      ++a;
      ++b;
    }
  }
  auto note = [&](const std::string& what) {
    out.structural = true;
    out.structural_notes.push_back("sheet '" + after.name + "': " + what);
  };
  const Bounds ob = bounds_of(before), nb = bounds_of(after);
  if (!(ob == nb)) note("used range " + bounds_text(ob) + " -> " + bounds_text(nb));
  if (before.protection_enabled != after.protection_enabled) {
    note(std::string("protection ") + (after.protection_enabled ? "enabled" : "disabled"));
  }
  if (before.hidden != after.hidden) note(after.hidden ? "hidden" : "unhidden");
  if (before.hidden_rows != after.hidden_rows) note("hidden rows changed");
  if (before.hidden_cols != after.hidden_cols) note("hidden columns changed");
}

bool has_external_ref(const std::optional<Cell>& cell, const std::string& sheet) {
  if (!cell || !cell->formula) return false;
  try {
    return formula::precedents(formula::parse_formula(*cell->formula), sheet).has_external_ref;
  } catch (const Error&) {
    return false;
  }
}

bool has_formula(const std::optional<Cell>& c) { return c && c->formula; }

[[noreturn]] void bad_config(const std::string& field, const std::string& what) {
  throw Error("invalid-config", field + ": " + what, field);
}

[[noreturn]] void bad_document(const std::string& field) {
  throw Error("invalid-document", "change record field '" + field + "' missing or malformed", field);
}

template <typename T>
T field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad_document(key);
  }
}

}  // namespace

DiffResult diff(const Workbook& before, const Workbook& after) {
  DiffResult out;
  for (const auto& sheet : after.sheets) {
    if (const Sheet* old_sheet = exact_sheet(before, sheet.name)) {
      diff_sheet(*old_sheet, sheet, out);
    } else {
      out.sheets_added.push_back(sheet.name);
      out.structural = true;
      out.structural_notes.push_back("sheet '" + sheet.name + "' added");
      for (const auto& [addr, cell] : sheet.cells) {
        out.changes.push_back({sheet.name, addr, ChangeKind::cell_added, std::nullopt, cell});
      }
    }
  }
  for (const auto& sheet : before.sheets) {
    if (exact_sheet(after, sheet.name)) continue;
    out.sheets_removed.push_back(sheet.name);
    out.structural = true;
    out.structural_notes.push_back("sheet '" + sheet.name + "' removed");
    for (const auto& [addr, cell] : sheet.cells) {
      out.changes.push_back({sheet.name, addr, ChangeKind::cell_removed, cell, std::nullopt});
    }
  }
  return out;
}

Workbook apply_diff(const Workbook& base, const DiffResult& d) {
  Workbook wb = base;
  for (const auto& name : d.sheets_removed) {
    wb.sheets.erase(std::remove_if(wb.sheets.begin(), wb.sheets.end(), [&](const Sheet& s) { return s.name == name; }),
                    wb.sheets.end());
  }
  for (const auto& name : d.sheets_added) {
    Sheet s;
    s.name = name;
    wb.sheets.push_back(std::move(s));
  }
  for (const auto& c : d.changes) {
    auto it = std::find_if(wb.sheets.begin(), wb.sheets.end(), [&](const Sheet& s) { return s.name == c.sheet; });
    if (it == wb.sheets.end()) continue;  // change on a removed sheet
    if (c.after) {
      it->cells[c.addr] = *c.after;
    } else {
      it->cells.erase(c.addr);
    }
  }
  return wb;
}

// ---------------------------------------------------------------------------
// Alert rules

AlertRuleSet default_alert_rules() {
  AlertRuleSet r;
  r.formula_change_any = true;
  r.formula_change_in_locked = true;
  r.value_change_over_pct = 0.1;
  r.structural_change = true;
  r.new_external_reference = true;
  r.template_sheet_modified = true;
  return r;
}

AlertRuleSet parse_alert_rules(const json& j) {
  if (!j.is_object()) bad_config("rules", "expected an object");
  AlertRuleSet r;
  for (const auto& item : j.items()) {
    const std::string& key = item.key();
    const json& v = item.value();
    auto flag = [&](bool& target) {
      if (!v.is_boolean()) bad_config(key, "expected true or false");
      target = v.get<bool>();
    };
    if (key == "formula_change_any") {
      flag(r.formula_change_any);
    } else if (key == "formula_change_in_locked") {
      flag(r.formula_change_in_locked);
    } else if (key == "structural_change") {
      flag(r.structural_change);
    } else if (key == "new_external_reference") {
      flag(r.new_external_reference);
    } else if (key == "template_sheet_modified") {
      flag(r.template_sheet_modified);
    } else if (key == "value_change_over_pct") {
      if (v.is_null() || (v.is_boolean() && !v.get<bool>())) {
        r.value_change_over_pct.reset();
      } else if (v.is_number()) {
        const double t = v.get<double>();
        if (!(t > 0) || !std::isfinite(t)) bad_config(key, "threshold must be > 0");
        r.value_change_over_pct = t;
      } else {
        bad_config(key, "expected a positive threshold or null");
      }
    } else if (key == "template_sheets") {
      try {
        r.template_sheets = v.get<std::vector<std::string>>();
      } catch (const json::exception&) {
        bad_config(key, "expected a list of sheet names");
      }
    } else {
      bad_config(key, "unknown trigger");
    }
  }
  return r;
}

AlertRuleSet parse_alert_rules_text(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error("invalid-config", std::string("malformed JSON: ") + e.what());
  }
  return parse_alert_rules(j);
}

ordered_json alert_rules_to_json(const AlertRuleSet& r) {
  ordered_json j;
  j["formula_change_any"] = r.formula_change_any;
  j["formula_change_in_locked"] = r.formula_change_in_locked;
  j["value_change_over_pct"] = r.value_change_over_pct ? ordered_json(*r.value_change_over_pct) : ordered_json();
  j["structural_change"] = r.structural_change;
  j["new_external_reference"] = r.new_external_reference;
  j["template_sheet_modified"] = r.template_sheet_modified;
  j["template_sheets"] = r.template_sheets;
  return j;
}

std::vector<std::string> apply_alert_rules(const DiffResult& d, const Workbook& before, const AlertRuleSet& rules) {
  std::vector<std::string> out;
  auto any = [&](auto pred) { return std::any_of(d.changes.begin(), d.changes.end(), pred); };

  if (rules.formula_change_any && any([](const CellChange& c) {
        if (c.kind == ChangeKind::cell_added) return has_formula(c.after);
        if (c.kind == ChangeKind::cell_removed) return has_formula(c.before);
        return c.kind == ChangeKind::formula_changed;
      })) {
    out.push_back("formula_change_any");
  }
  if (rules.formula_change_in_locked && any([&](const CellChange& c) {
        if (c.kind != ChangeKind::formula_changed || !c.before || !c.before->locked) return false;
        const Sheet* s = exact_sheet(before, c.sheet);
        return s && s->protection_enabled;
      })) {
    out.push_back("formula_change_in_locked");
  }
  if (rules.value_change_over_pct && any([&](const CellChange& c) {
        if (!c.before || !c.after) return false;
        const double* o = c.before->number();
        const double* n = c.after->number();
        if (!o || !n || *o == *n) return false;
        return std::fabs(*n - *o) / std::max(std::fabs(*o), kPctEpsilon) > *rules.value_change_over_pct;
      })) {
    out.push_back("value_change_over_pct");
  }
  if (rules.structural_change && d.structural) out.push_back("structural_change");
  if (rules.new_external_reference && any([](const CellChange& c) {
        if (c.kind != ChangeKind::formula_changed && c.kind != ChangeKind::cell_added) return false;
        return has_external_ref(c.after, c.sheet) && !has_external_ref(c.before, c.sheet);
      })) {
    out.push_back("new_external_reference");
  }
  if (rules.template_sheet_modified) {
    auto is_template = [&](const std::string& sheet) {
      return std::any_of(rules.template_sheets.begin(), rules.template_sheets.end(),
                         [&](const std::string& t) { return iequals(t, sheet); });
    };
    const bool hit = any([&](const CellChange& c) { return is_template(c.sheet); }) ||
                     std::any_of(d.sheets_added.begin(), d.sheets_added.end(), is_template) ||
                     std::any_of(d.sheets_removed.begin(), d.sheets_removed.end(), is_template);
    if (hit) out.push_back("template_sheet_modified");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Events

std::string_view to_string(EventState s) noexcept {
  switch (s) {
    case EventState::auto_logged: return "auto_logged";
    case EventState::pending_review: return "pending_review";
    case EventState::approved: return "approved";
    case EventState::rejected: return "rejected";
  }
  return "auto_logged";
}

std::optional<EventState> event_state_from_string(std::string_view s) noexcept {
  for (auto v : {EventState::auto_logged, EventState::pending_review, EventState::approved, EventState::rejected}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::string_view to_string(Verdict v) noexcept { return v == Verdict::approved ? "approved" : "rejected"; }

std::optional<Verdict> verdict_from_string(std::string_view s) noexcept {
  if (s == "approved" || s == "approve") return Verdict::approved;
  if (s == "rejected" || s == "reject") return Verdict::rejected;
  return std::nullopt;
}

ChangeEvent make_event(std::string event_id, std::string file_key, std::int64_t from, std::int64_t to,
                       const DiffResult& d, std::vector<std::string> triggers, std::string author, Timestamp at) {
  ChangeEvent e;
  e.event_id = std::move(event_id);
  e.file_key = std::move(file_key);
  e.from_snapshot = from;
  e.to_snapshot = to;
  e.changes = d.changes;
  e.structural = d.structural;
  e.structural_notes = d.structural_notes;
  e.author = std::move(author);
  e.detected_at = at;
  e.triggered_rules = std::move(triggers);
  e.state = e.triggered_rules.empty() ? EventState::auto_logged : EventState::pending_review;
  return e;
}

void decide(ChangeEvent& event, const ReviewDecision& decision) {
  if (event.state != EventState::pending_review) {
    throw Error("not-pending", "event " + event.event_id + " is " + std::string(to_string(event.state)) +
                                   " and accepts no decision");
  }
  if (decision.reviewer.empty()) throw Error("validation-error", "reviewer is required", "reviewer");
  if (decision.reviewer == event.author) {
    throw Error("self-review", "the author of a change cannot review it", "reviewer");
  }
  if (decision.verdict == Verdict::rejected &&
      std::all_of(decision.comment.begin(), decision.comment.end(), [](unsigned char c) { return std::isspace(c); })) {
    throw Error("missing-comment", "a rejection needs a comment describing the remediation", "comment");
  }
  event.decision = decision;
  event.state = decision.verdict == Verdict::approved ? EventState::approved : EventState::rejected;
}

ordered_json change_to_json(const CellChange& c) {
  ordered_json j;
  j["sheet"] = c.sheet;
  j["addr"] = addr_to_a1(c.addr);
  j["kind"] = to_string(c.kind);
  j["before"] = c.before ? cell_to_json(*c.before) : ordered_json();
  j["after"] = c.after ? cell_to_json(*c.after) : ordered_json();
  return j;
}

ordered_json diff_to_json(const DiffResult& d) {
  ordered_json j;
  j["structural"] = d.structural;
  j["structural_notes"] = d.structural_notes;
  j["sheets_added"] = d.sheets_added;
  j["sheets_removed"] = d.sheets_removed;
  j["changes"] = ordered_json::array();
  for (const auto& c : d.changes) j["changes"].push_back(change_to_json(c));
  return j;
}

ordered_json event_to_json(const ChangeEvent& e) {
  ordered_json j;
  j["event_id"] = e.event_id;
  j["file_key"] = e.file_key;
  j["from_snapshot"] = e.from_snapshot;
  j["to_snapshot"] = e.to_snapshot;
  j["author"] = e.author;
  j["detected_at"] = format_timestamp(e.detected_at);
  j["state"] = to_string(e.state);
  j["triggered_rules"] = e.triggered_rules;
  j["structural"] = e.structural;
  j["structural_notes"] = e.structural_notes;
  j["changes"] = ordered_json::array();
  for (const auto& c : e.changes) j["changes"].push_back(change_to_json(c));
  if (e.decision) {
    ordered_json d;
    d["reviewer"] = e.decision->reviewer;
    d["decided_at"] = format_timestamp(e.decision->decided_at);
    d["verdict"] = to_string(e.decision->verdict);
    d["comment"] = e.decision->comment;
    j["decision"] = std::move(d);
  } else {
    j["decision"] = nullptr;
  }
  return j;
}

ChangeEvent event_from_json(const json& j) {
  ChangeEvent e;
  e.event_id = field<std::string>(j, "event_id");
  e.file_key = field<std::string>(j, "file_key");
  e.from_snapshot = field<std::int64_t>(j, "from_snapshot");
  e.to_snapshot = field<std::int64_t>(j, "to_snapshot");
  e.author = field<std::string>(j, "author");
  e.detected_at = parse_timestamp(field<std::string>(j, "detected_at"));
  const auto state = event_state_from_string(field<std::string>(j, "state"));
  if (!state) bad_document("state");
  e.state = *state;
  e.triggered_rules = field<std::vector<std::string>>(j, "triggered_rules");
  e.structural = field<bool>(j, "structural");
  e.structural_notes = field<std::vector<std::string>>(j, "structural_notes");
  for (const auto& c : field<json>(j, "changes")) {
    CellChange change;
    change.sheet = field<std::string>(c, "sheet");
    change.addr = a1_to_addr(field<std::string>(c, "addr"));
    const auto kind = change_kind_from_string(field<std::string>(c, "kind"));
    if (!kind) bad_document("kind");
    change.kind = *kind;
    if (!c.at("before").is_null()) change.before = cell_from_json(c.at("before"), "before");
    if (!c.at("after").is_null()) change.after = cell_from_json(c.at("after"), "after");
    e.changes.push_back(std::move(change));
  }
  if (j.contains("decision") && !j.at("decision").is_null()) {
    const json& d = j.at("decision");
    ReviewDecision decision;
    decision.reviewer = field<std::string>(d, "reviewer");
    decision.decided_at = parse_timestamp(field<std::string>(d, "decided_at"));
    const auto verdict = verdict_from_string(field<std::string>(d, "verdict"));
    if (!verdict) bad_document("verdict");
    decision.verdict = *verdict;
    decision.comment = field<std::string>(d, "comment");
    e.decision = decision;
  }
  return e;
}

// ---------------------------------------------------------------------------
// Store

namespace {

struct SnapshotHeader {
  std::int64_t snapshot_id = 0;
  Timestamp taken_at{};
  std::string content_hash;
};

}  // namespace

struct ChangeStore::State {
  std::filesystem::path dir;
  std::unique_ptr<detail::AppendLog> log;
  std::map<std::string, std::vector<SnapshotHeader>> snapshots;
  std::map<std::string, std::int64_t> baselines;
  std::map<std::string, ChangeEvent> events;
  std::vector<std::string> event_order;
  std::int64_t event_counter = 0;

  std::filesystem::path blob_path(const std::string& hash) const { return dir / "blobs" / (hash + ".wb.json"); }

  void apply_line(const std::string& line) {
    const json j = json::parse(line);
    const std::string type = field<std::string>(j, "type");
    if (type == "snapshot") {
      snapshots[field<std::string>(j, "file_key")].push_back(
          {field<std::int64_t>(j, "snapshot_id"), parse_timestamp(field<std::string>(j, "taken_at")),
           field<std::string>(j, "content_hash")});
    } else if (type == "baseline") {
      baselines[field<std::string>(j, "file_key")] = field<std::int64_t>(j, "snapshot_id");
    } else if (type == "event") {
      ChangeEvent e = event_from_json(j.at("event"));
      if (!events.count(e.event_id)) {
        event_order.push_back(e.event_id);
        ++event_counter;
      }
      events[e.event_id] = std::move(e);
    } else {
      throw Error("storage-failure", "unknown record type '" + type + "' in change log");
    }
  }

  Workbook load_blob(const std::string& hash) const {
    const std::string body = detail::read_text_file(blob_path(hash));
    if (sha256_hex(body) != hash) throw Error("storage-failure", "snapshot blob " + hash + " fails its hash check");
    return parse_canonical(body);
  }

  static std::string snapshot_line(const std::string& file_key, const SnapshotHeader& h) {
    ordered_json j;
    j["type"] = "snapshot";
    j["file_key"] = file_key;
    j["snapshot_id"] = h.snapshot_id;
    j["taken_at"] = format_timestamp(h.taken_at);
    j["content_hash"] = h.content_hash;
    return j.dump();
  }

  static std::string baseline_line(const std::string& file_key, std::int64_t id) {
    ordered_json j;
    j["type"] = "baseline";
    j["file_key"] = file_key;
    j["snapshot_id"] = id;
    return j.dump();
  }

  static std::string event_line(const ChangeEvent& e) {
    ordered_json j;
    j["type"] = "event";
    j["event"] = event_to_json(e);
    return j.dump();
  }

  // Writes the body and returns the header; the caller appends the header line.
  SnapshotHeader prepare_snapshot(const std::string& file_key, const Workbook& wb, Timestamp at) {
    const std::string body = serialize_canonical(wb);
    SnapshotHeader h;
    const auto& list = snapshots[file_key];
    h.snapshot_id = list.empty() ? 1 : list.back().snapshot_id + 1;
    h.taken_at = at;
    h.content_hash = sha256_hex(body);
    const auto path = blob_path(h.content_hash);
    if (!std::filesystem::exists(path)) detail::write_file_atomic(path, body);
    return h;
  }
};

ChangeStore::ChangeStore(const std::filesystem::path& dir) : state_(std::make_unique<State>()) {
  state_->dir = dir;
  std::error_code ec;
  std::filesystem::create_directories(dir / "blobs", ec);
  if (ec) throw Error("storage-failure", "cannot create " + (dir / "blobs").string() + ": " + ec.message());
  state_->log = std::make_unique<detail::AppendLog>(dir / "changes.jsonl");
  for (const auto& line : state_->log->initial_lines()) {
    try {
      state_->apply_line(line);
    } catch (const json::exception& e) {
      throw Error("storage-failure", std::string("corrupt change log record: ") + e.what());
    }
  }
}

ChangeStore::~ChangeStore() = default;

Snapshot ChangeStore::take_snapshot(const std::string& file_key, const Workbook& wb, Timestamp at) {
  std::lock_guard lock(mutex_);
  const SnapshotHeader h = state_->prepare_snapshot(file_key, wb, at);
  state_->log->append(State::snapshot_line(file_key, h));
  state_->snapshots[file_key].push_back(h);
  return {h.snapshot_id, file_key, h.taken_at, h.content_hash, wb};
}

ChangeStore::Submission ChangeStore::submit(const std::string& file_key, const Workbook& wb, const std::string& author,
                                            const AlertRuleSet& rules, Timestamp at) {
  std::lock_guard lock(mutex_);
  State& s = *state_;
  const SnapshotHeader h = s.prepare_snapshot(file_key, wb, at);
  Submission result{{h.snapshot_id, file_key, h.taken_at, h.content_hash, wb}, std::nullopt};
  std::vector<std::string> lines{State::snapshot_line(file_key, h)};

  auto base = s.baselines.find(file_key);
  std::optional<std::int64_t> new_baseline;
  if (base == s.baselines.end()) {
    new_baseline = h.snapshot_id;
  } else {
    const auto& list = s.snapshots[file_key];
    const auto header = std::find_if(list.begin(), list.end(),
                                     [&](const SnapshotHeader& x) { return x.snapshot_id == base->second; });
    if (header == list.end()) throw Error("storage-failure", "baseline snapshot missing for " + file_key);
    const Workbook old_wb = s.load_blob(header->content_hash);
    const DiffResult d = diff(old_wb, wb);
    if (d.empty()) {
      new_baseline = h.snapshot_id;
    } else {
      char id[32];
      std::snprintf(id, sizeof id, "chg-%06lld", static_cast<long long>(s.event_counter + 1));
      ChangeEvent e = make_event(id, file_key, base->second, h.snapshot_id, d, apply_alert_rules(d, old_wb, rules),
                                 author, at);
      lines.push_back(State::event_line(e));
      if (e.state == EventState::auto_logged) new_baseline = h.snapshot_id;
      result.event = std::move(e);
    }
  }
  if (new_baseline) lines.push_back(State::baseline_line(file_key, *new_baseline));
  s.log->append_all(lines);

  s.snapshots[file_key].push_back(h);
  if (new_baseline) s.baselines[file_key] = *new_baseline;
  if (result.event) {
    ++s.event_counter;
    s.event_order.push_back(result.event->event_id);
    s.events[result.event->event_id] = *result.event;
  }
  return result;
}

ChangeEvent ChangeStore::decide(const std::string& event_id, const ReviewDecision& decision, bool rebaseline) {
  std::lock_guard lock(mutex_);
  State& s = *state_;
  auto it = s.events.find(event_id);
  if (it == s.events.end()) throw Error("not-found", "no change event " + event_id);
  ChangeEvent updated = it->second;
  changes::decide(updated, decision);
  std::vector<std::string> lines{State::event_line(updated)};
  const bool move_baseline = rebaseline && updated.state == EventState::approved &&
                             updated.to_snapshot > s.baselines[updated.file_key];
  if (move_baseline) lines.push_back(State::baseline_line(updated.file_key, updated.to_snapshot));
  s.log->append_all(lines);
  it->second = updated;
  if (move_baseline) s.baselines[updated.file_key] = updated.to_snapshot;
  return updated;
}

std::optional<ChangeEvent> ChangeStore::event(const std::string& event_id) const {
  std::lock_guard lock(mutex_);
  auto it = state_->events.find(event_id);
  if (it == state_->events.end()) return std::nullopt;
  return it->second;
}

std::vector<ChangeEvent> ChangeStore::events(std::optional<EventState> state,
                                             const std::optional<std::string>& file_key) const {
  std::lock_guard lock(mutex_);
  std::vector<ChangeEvent> out;
  for (const auto& id : state_->event_order) {
    const ChangeEvent& e = state_->events.at(id);
    if (state && e.state != *state) continue;
    if (file_key && e.file_key != *file_key) continue;
    out.push_back(e);
  }
  return out;
}

std::optional<std::int64_t> ChangeStore::baseline_id(const std::string& file_key) const {
  std::lock_guard lock(mutex_);
  auto it = state_->baselines.find(file_key);
  if (it == state_->baselines.end()) return std::nullopt;
  return it->second;
}

std::optional<Snapshot> ChangeStore::snapshot(const std::string& file_key, std::int64_t snapshot_id) const {
  std::lock_guard lock(mutex_);
  auto it = state_->snapshots.find(file_key);
  if (it == state_->snapshots.end()) return std::nullopt;
  for (const auto& h : it->second) {
    if (h.snapshot_id == snapshot_id) {
      return Snapshot{h.snapshot_id, file_key, h.taken_at, h.content_hash, state_->load_blob(h.content_hash)};
    }
  }
  return std::nullopt;
}

std::vector<std::string> ChangeStore::file_keys() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [key, list] : state_->snapshots) out.push_back(key);
  return out;
}

}  // namespace euc::changes
