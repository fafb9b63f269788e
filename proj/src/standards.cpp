#include "euc/standards.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "euc/documentation.hpp"
#include "euc/error.hpp"

namespace euc::standards {

using nlohmann::json;
using nlohmann::ordered_json;

const std::vector<std::string>& ds_rule_ids() {
  static const std::vector<std::string> ids{"DS-DOC-01", "DS-LAB-01", "DS-SEP-01", "DS-LOCK-01", "DS-CHK-01",
                                            "DS-LOG-01", "DS-LOG-02", "DS-TRA-01", "DS-SEC-01"};
  return ids;
}

const std::vector<std::string>& known_rule_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> all = ds_rule_ids();
    all.insert(all.end(), integrity::rule_ids().begin(), integrity::rule_ids().end());
    all.push_back("ARC-01");
    return all;
  }();
  return ids;
}

bool RuleConfig::is_template_sheet(std::string_view name) const {
  return iequals(name, documentation_sheet) || iequals(name, change_log_sheet) || iequals(name, review_log_sheet);
}

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string text_at(const Sheet& sheet, int col, int row) {
  const Cell* c = sheet.find({col, row});
  if (!c || !c->text()) return "";
  return trim(*c->text());
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

bool starts_with_ci(std::string_view text, std::string_view prefix) {
  return text.size() >= prefix.size() && iequals(text.substr(0, prefix.size()), prefix);
}

Finding make(const std::string& rule, Severity sev, std::string sheet, std::optional<CellAddr> addr,
             std::string message, std::string evidence = "") {
  return Finding{rule, sev, std::move(sheet), addr, std::move(message), std::move(evidence)};
}

class CheckCells {
 public:
  CheckCells(const Workbook& wb, const std::string& prefix) {
    for (const auto& [name, range] : wb.named_ranges) {
      if (!starts_with_ci(name, prefix)) continue;
      if (const Sheet* s = wb.find_sheet(range.sheet)) ranges_.push_back({s->name, range});
    }
  }

  bool contains(const std::string& sheet, const CellAddr& a) const {
    return std::any_of(ranges_.begin(), ranges_.end(),
                       [&](const auto& r) { return r.first == sheet && r.second.contains(a); });
  }

  const std::vector<std::pair<std::string, RangeRef>>& ranges() const { return ranges_; }

 private:
  std::vector<std::pair<std::string, RangeRef>> ranges_;
};

bool is_constant_data(const Cell& c) {
  return !c.has_formula() && !std::holds_alternative<Blank>(c.value) && !c.text();
}

std::vector<Finding> check_documentation(const Workbook& wb, const RuleConfig& cfg) {
  const Sheet* doc_sheet = wb.find_sheet(cfg.documentation_sheet);
  if (!doc_sheet) {
    return {make("DS-DOC-01", Severity::high, "", std::nullopt,
                 "documentation sheet '" + cfg.documentation_sheet + "' is missing")};
  }
  const Documentation doc = read_documentation(*doc_sheet);
  std::vector<Finding> out;
  for (const auto& field : cfg.documentation_fields) {
    std::string key = field;
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (!doc.field(key)) {
      out.push_back(make("DS-DOC-01", Severity::high, doc_sheet->name, std::nullopt,
                         "documentation field '" + field + "' is missing or empty"));
    }
  }
  return out;
}

std::vector<Finding> check_labelling(const Workbook& wb, const RuleConfig& cfg, const CheckCells& checks) {
  std::vector<Finding> out;
  for (const auto& sheet : wb.sheets) {
    if (sheet.declared_purpose != SheetPurpose::input) continue;
    std::set<int> input_cols;
    bool has_marker = false;
    for (const auto& [addr, cell] : sheet.cells) {
      if (cell.text() && iequals(trim(*cell.text()), cfg.units_marker)) has_marker = true;
      if (addr.row >= 2 && is_constant_data(cell) && !checks.contains(sheet.name, addr)) input_cols.insert(addr.col);
    }
    for (int col : input_cols) {
      if (text_at(sheet, col, 1).empty()) {
        out.push_back(make("DS-LAB-01", Severity::medium, sheet.name, CellAddr{col, 1},
                           "input column " + column_to_letters(col) + " has no text header"));
      }
    }
    if (cfg.require_units && !input_cols.empty() && !has_marker) {
      out.push_back(make("DS-LAB-01", Severity::medium, sheet.name, std::nullopt,
                         "input sheet has no '" + cfg.units_marker + "' marker"));
    }
  }
  return out;
}

std::vector<Finding> check_separation(const Workbook& wb, const RuleConfig& cfg, const CheckCells& checks,
                                      const formula::ReferenceIndex& index) {
  std::vector<Finding> out;
  for (const auto& sheet : wb.sheets) {
    switch (sheet.declared_purpose) {
      case SheetPurpose::undeclared:
        if (!cfg.is_template_sheet(sheet.name)) {
          out.push_back(make("DS-SEP-01", Severity::high, sheet.name, std::nullopt, "sheet has no declared purpose"));
        }
        break;
      case SheetPurpose::input:
        for (const auto& [addr, cell] : sheet.cells) {
          if (cell.has_formula() && !checks.contains(sheet.name, addr)) {
            out.push_back(make("DS-SEP-01", Severity::high, sheet.name, addr, "formula on an input sheet",
                               *cell.formula));
          }
        }
        break;
      case SheetPurpose::calculation:
        for (const auto& [addr, cell] : sheet.cells) {
          if (is_constant_data(cell) && !checks.contains(sheet.name, addr)) {
            std::ostringstream v;
            if (const double* n = cell.number()) v << *n;
            out.push_back(make("DS-SEP-01", Severity::high, sheet.name, addr,
                               "non-label constant on a calculation sheet", v.str()));
          }
        }
        break;
      case SheetPurpose::output:
        for (const auto& [target, readers] : index.referenced_by) {
          if (target.sheet != sheet.name || !sheet.find(target.addr)) continue;
          std::vector<std::string> foreign;
          for (const auto& r : readers) {
            if (!iequals(r.sheet, sheet.name)) foreign.push_back(formula::to_string(r));
          }
          if (foreign.empty()) continue;
          if (foreign.size() > 3) foreign.resize(3);
          out.push_back(make("DS-SEP-01", Severity::high, sheet.name, target.addr,
                             "output cell is read by another sheet", join(foreign, ", ")));
        }
        break;
      case SheetPurpose::documentation:
      case SheetPurpose::log: break;
    }
  }
  return out;
}

std::vector<Finding> check_locking(const Workbook& wb) {
  std::vector<Finding> out;
  for (const auto& sheet : wb.sheets) {
    int formulas = 0;
    for (const auto& [addr, cell] : sheet.cells) {
      if (!cell.has_formula()) continue;
      ++formulas;
      if (!cell.locked) {
        out.push_back(make("DS-LOCK-01", Severity::high, sheet.name, addr, "formula cell is unlocked", *cell.formula));
      }
    }
    if (formulas > 0 && !sheet.protection_enabled) {
      out.push_back(make("DS-LOCK-01", Severity::high, sheet.name, std::nullopt,
                         "sheet protection is off on a sheet with " + std::to_string(formulas) + " formula cell(s)"));
    }
  }
  return out;
}

std::vector<Finding> check_check_cells(const Workbook& wb, const RuleConfig& cfg, const CheckCells& checks) {
  for (const auto& [sheet_name, range] : checks.ranges()) {
    const Sheet* sheet = wb.find_sheet(sheet_name);
    for (const auto& [addr, cell] : sheet->cells) {
      if (range.contains(addr)) return {};
    }
  }
  return {make("DS-CHK-01", Severity::medium, "", std::nullopt,
               "no check cell: no populated named range starting with '" + cfg.check_prefix + "'")};
}

std::vector<Finding> check_log(const Workbook& wb, const std::string& rule, Severity sev, const std::string& sheet_name,
                               const std::vector<std::string>& headers, bool exact_width) {
  const Sheet* sheet = wb.find_sheet(sheet_name);
  if (!sheet) return {make(rule, sev, "", std::nullopt, "log sheet '" + sheet_name + "' is missing")};
  std::vector<std::string> found;
  for (std::size_t i = 0; i < headers.size(); ++i) found.push_back(text_at(*sheet, static_cast<int>(i) + 1, 1));
  bool ok = found == headers;
  const int next_col = static_cast<int>(headers.size()) + 1;
  if (exact_width && sheet->find({next_col, 1})) {
    ok = false;
    found.push_back(text_at(*sheet, next_col, 1));
  }
  if (ok) return {};
  return {make(rule, sev, sheet->name, CellAddr{1, 1}, "header row must be exactly: " + join(headers, " | "),
               "found: " + join(found, " | "))};
}

std::vector<Finding> check_transparency(const Workbook& wb, const RuleConfig& cfg) {
  std::vector<std::string> documented;
  if (const Sheet* doc = wb.find_sheet(cfg.documentation_sheet)) documented = read_documentation(*doc).hidden_sheets;
  auto is_documented = [&](const std::string& name) {
    return std::any_of(documented.begin(), documented.end(), [&](const auto& d) { return iequals(d, name); });
  };
  auto list = [](const std::vector<int>& items, bool columns) {
    std::vector<std::string> parts;
    for (int i : items) parts.push_back(columns ? column_to_letters(i) : std::to_string(i));
    if (parts.size() > 10) {
      parts.resize(10);
      parts.push_back("...");
    }
    return join(parts, ", ");
  };
  std::vector<Finding> out;
  for (const auto& sheet : wb.sheets) {
    if (is_documented(sheet.name)) continue;
    if (sheet.hidden) out.push_back(make("DS-TRA-01", Severity::low, sheet.name, std::nullopt, "hidden sheet is not documented"));
    if (!sheet.hidden_rows.empty()) {
      out.push_back(make("DS-TRA-01", Severity::low, sheet.name, std::nullopt, "hidden rows are not documented",
                         "rows " + list(sheet.hidden_rows, false)));
    }
    if (!sheet.hidden_cols.empty()) {
      out.push_back(make("DS-TRA-01", Severity::low, sheet.name, std::nullopt, "hidden columns are not documented",
                         "columns " + list(sheet.hidden_cols, true)));
    }
  }
  return out;
}

std::string normal_path(const std::string& p) {
  std::string s = std::filesystem::path(p).lexically_normal().generic_string();
  while (s.size() > 1 && s.back() == '/') s.pop_back();
  return s;
}

std::vector<Finding> check_security(const Workbook& wb, const RuleConfig& cfg, const std::string& path) {
  if (wb.security.encrypted) return {};
  const std::string p = normal_path(path);
  for (const auto& dir : cfg.restricted_paths) {
    const std::string d = normal_path(dir);
    if (p == d || (p.size() > d.size() && p.compare(0, d.size(), d) == 0 && (d == "/" || p[d.size()] == '/'))) {
      return {};
    }
  }
  return {make("DS-SEC-01", Severity::medium, "", std::nullopt,
               "file is not password-protected and is not under a restricted directory", path)};
}

struct ArchivePattern {
  std::regex regex;
  int date_group = 0;  // 0 when the template has no <YYYYMMDD>
};

ArchivePattern compile_archive_pattern(const std::string& pattern) {
  static const std::map<std::string, std::string> kPlaceholders = {
      {"base", "(.+)"}, {"major", "(\\d+)"}, {"minor", "(\\d+)"}, {"YYYYMMDD", "(\\d{8})"}, {"ext", "([A-Za-z0-9]+)"}};
  std::string re;
  int group = 0, date_group = 0;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const char ch = pattern[i];
    if (ch == '<') {
      const auto close = pattern.find('>', i);
      const std::string name = close == std::string::npos ? "" : pattern.substr(i + 1, close - i - 1);
      auto it = kPlaceholders.find(name);
      if (it == kPlaceholders.end()) {
        throw Error("invalid-config", "archive pattern has unknown placeholder near '" + pattern.substr(i) + "'",
                    "rules/ARC-01/pattern");
      }
      re += it->second;
      ++group;
      if (name == "YYYYMMDD") date_group = group;
      i = close;
    } else if (std::string_view("\\^$.|?*+()[]{}").find(ch) != std::string_view::npos) {
      re += '\\';
      re += ch;
    } else {
      re += ch;
    }
  }
  return {std::regex(re), date_group};
}

bool valid_date(const std::string& yyyymmdd) {
  using namespace std::chrono;
  const year_month_day ymd{year{std::stoi(yyyymmdd.substr(0, 4))},
                           month{static_cast<unsigned>(std::stoi(yyyymmdd.substr(4, 2)))},
                           day{static_cast<unsigned>(std::stoi(yyyymmdd.substr(6, 2)))}};
  return ymd.ok();
}

// ---------------------------------------------------------------------------
// JSON helpers

[[noreturn]] void bad_config(const std::string& field, const std::string& what) {
  throw Error("invalid-config", field + ": " + what, field);
}

void allow_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) bad_config(where, "expected an object");
  for (const auto& item : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; })) {
      bad_config(where.empty() ? item.key() : where + "/" + item.key(), "unknown key");
    }
  }
}

template <typename T>
void read_into(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    bad_config(where + "/" + key, "wrong type");
  }
}

void require_known_rule(const std::string& id, const std::string& where) {
  const auto& known = known_rule_ids();
  if (std::find(known.begin(), known.end(), id) == known.end()) bad_config(where, "unknown rule id '" + id + "'");
}

std::int64_t days_to_hundredths(double days, const std::string& where) {
  if (!std::isfinite(days) || days < 0) bad_config(where, "must be a non-negative number of days");
  return static_cast<std::int64_t>(std::llround(days * 100.0));
}

[[noreturn]] void bad_document(const std::string& field, const std::string& what) {
  throw Error("invalid-document", field + ": " + what, field);
}

json parse_json(std::string_view text, const char* code) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(code, std::string("malformed JSON: ") + e.what());
  }
}

template <typename T>
T doc_field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad_document(key, "missing or wrongly typed");
  }
}

std::string location_of(const Finding& f) {
  if (f.sheet.empty()) return "workbook";
  if (!f.addr) return quote_sheet_name(f.sheet);
  return quote_sheet_name(f.sheet) + "!" + addr_to_a1(*f.addr);
}

std::string action_for(const Finding& f) {
  static const std::map<std::string, std::string> kActions = {
      {"DS-DOC-01", "Complete the documentation template"},
      {"DS-LAB-01", "Label the input columns and mark their units"},
      {"DS-SEP-01", "Separate inputs, calculations and outputs"},
      {"DS-LOCK-01", "Lock formula cells and enable sheet protection"},
      {"DS-CHK-01", "Add check cells (control totals or criteria tests) under a check named range"},
      {"DS-LOG-01", "Add the standard change log template"},
      {"DS-LOG-02", "Add the standard review log template"},
      {"DS-TRA-01", "Unhide, or document in the Documentation sheet, the hidden content"},
      {"DS-SEC-01", "Password-protect the file or move it to a restricted directory"},
      {"ARC-01", "Rename the file to the archive naming convention"},
      {"INT-01", "Make the formula consistent with its region or document the exception"},
      {"INT-02", "Resolve the error value"},
      {"INT-03", "Move the hard-coded constant into a labelled input cell"},
      {"INT-04", "Break the circular reference"},
      {"INT-05", "Populate the referenced input or correct the reference"},
  };
  auto it = kActions.find(f.rule_id);
  const std::string verb = it == kActions.end() ? "Resolve the finding" : it->second;
  return verb + " [" + f.rule_id + " at " + location_of(f) + "]: " + f.message;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

RuleConfig parse_rule_config(std::string_view json_text) {
  const json j = parse_json(json_text, "invalid-config");
  allow_keys(j, {"enabled_rules", "disabled_rules", "rules", "effort"}, "");
  RuleConfig cfg;
  if (j.contains("enabled_rules")) {
    std::vector<std::string> ids;
    read_into(j, "enabled_rules", ids, "enabled_rules");
    cfg.enabled.clear();
    for (const auto& id : ids) {
      require_known_rule(id, "enabled_rules");
      cfg.enabled.insert(id);
    }
  }
  if (j.contains("disabled_rules")) {
    std::vector<std::string> ids;
    read_into(j, "disabled_rules", ids, "disabled_rules");
    for (const auto& id : ids) {
      require_known_rule(id, "disabled_rules");
      cfg.enabled.erase(id);
    }
  }
  if (j.contains("rules")) {
    const json& rules = j.at("rules");
    if (!rules.is_object()) bad_config("rules", "expected an object");
    for (const auto& item : rules.items()) {
      const std::string where = "rules/" + item.key();
      require_known_rule(item.key(), where);
      const json& p = item.value();
      const std::string& id = item.key();
      if (id == "DS-DOC-01") {
        allow_keys(p, {"sheet", "fields"}, where);
        read_into(p, "sheet", cfg.documentation_sheet, where);
        read_into(p, "fields", cfg.documentation_fields, where);
      } else if (id == "DS-LOG-01") {
        allow_keys(p, {"sheet", "headers"}, where);
        read_into(p, "sheet", cfg.change_log_sheet, where);
        read_into(p, "headers", cfg.change_log_headers, where);
      } else if (id == "DS-LOG-02") {
        allow_keys(p, {"sheet", "headers"}, where);
        read_into(p, "sheet", cfg.review_log_sheet, where);
        read_into(p, "headers", cfg.review_log_headers, where);
      } else if (id == "DS-CHK-01") {
        allow_keys(p, {"prefix"}, where);
        read_into(p, "prefix", cfg.check_prefix, where);
      } else if (id == "DS-LAB-01") {
        allow_keys(p, {"require_units", "units_marker"}, where);
        read_into(p, "require_units", cfg.require_units, where);
        read_into(p, "units_marker", cfg.units_marker, where);
      } else if (id == "DS-SEC-01") {
        allow_keys(p, {"restricted_paths"}, where);
        read_into(p, "restricted_paths", cfg.restricted_paths, where);
      } else if (id == "ARC-01") {
        allow_keys(p, {"pattern"}, where);
        read_into(p, "pattern", cfg.archive_pattern, where);
        compile_archive_pattern(cfg.archive_pattern);
      } else if (id == "INT-03") {
        allow_keys(p, {"exempt_constants"}, where);
        std::vector<double> values(cfg.integrity.exempt_constants.begin(), cfg.integrity.exempt_constants.end());
        read_into(p, "exempt_constants", values, where);
        cfg.integrity.exempt_constants = {values.begin(), values.end()};
      } else if (id == "INT-04") {
        allow_keys(p, {"max_expanded_edges"}, where);
        read_into(p, "max_expanded_edges", cfg.integrity.max_expanded_edges, where);
        if (cfg.integrity.max_expanded_edges <= 0) bad_config(where + "/max_expanded_edges", "must be positive");
      } else {
        allow_keys(p, {}, where);
      }
    }
  }
  if (j.contains("effort")) {
    const json& e = j.at("effort");
    allow_keys(e, {"weights", "floor_days", "ceiling_days"}, "effort");
    if (e.contains("weights")) {
      const json& w = e.at("weights");
      if (!w.is_object()) bad_config("effort/weights", "expected an object");
      for (const auto& item : w.items()) {
        const auto sev = severity_from_string(item.key());
        if (!sev) bad_config("effort/weights/" + item.key(), "unknown severity");
        if (!item.value().is_number()) bad_config("effort/weights/" + item.key(), "expected a number");
        cfg.effort.weight_hundredths[*sev] = days_to_hundredths(item.value().get<double>(), "effort/weights/" + item.key());
      }
    }
    for (const auto& [key, target] : {std::pair{"floor_days", &cfg.effort.floor_hundredths},
                                      std::pair{"ceiling_days", &cfg.effort.ceiling_hundredths}}) {
      if (!e.contains(key)) continue;
      if (!e.at(key).is_number()) bad_config(std::string("effort/") + key, "expected a number");
      *target = days_to_hundredths(e.at(key).get<double>(), std::string("effort/") + key);
    }
    if (cfg.effort.floor_hundredths && cfg.effort.ceiling_hundredths &&
        *cfg.effort.floor_hundredths > *cfg.effort.ceiling_hundredths) {
      bad_config("effort", "floor_days exceeds ceiling_days");
    }
  }
  return cfg;
}

RuleConfig load_rule_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("invalid-config", "cannot read config file " + path, "config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_rule_config(ss.str());
}

// ---------------------------------------------------------------------------
// Audit

double AuditReport::compliance_score() const {
  const auto total = applicable();
  return total == 0 ? 1.0 : static_cast<double>(rules_passed.size()) / static_cast<double>(total);
}

std::optional<Finding> check_archive_name(const std::string& filename, const std::string& pattern) {
  const ArchivePattern compiled = compile_archive_pattern(pattern);
  std::smatch m;
  if (!std::regex_match(filename, m, compiled.regex)) {
    return make("ARC-01", Severity::low, "", std::nullopt, "file name does not follow " + pattern, filename);
  }
  if (compiled.date_group > 0 && !valid_date(m[compiled.date_group].str())) {
    return make("ARC-01", Severity::low, "", std::nullopt,
                "file name date " + m[compiled.date_group].str() + " is not a calendar date", filename);
  }
  return std::nullopt;
}

AuditReport audit(const Workbook& input, const RuleConfig& cfg, const AuditContext& ctx) {
  AuditReport report;
  report.workbook_name = input.name;
  report.audited_at = ctx.audited_at;

  Workbook wb = input;
  for (const auto& problem : apply_documented_purposes(wb, cfg.documentation_sheet)) report.warnings.push_back(problem);

  const bool opaque = wb.source_format == SourceFormat::encrypted_opaque;
  std::map<std::string, std::vector<Finding>> by_rule;
  std::set<std::string> not_applicable;

  const CheckCells checks(wb, cfg.check_prefix);
  std::optional<formula::ReferenceIndex> index;
  for (const auto& id : ds_rule_ids()) {
    if (!cfg.on(id)) continue;
    if (opaque && id != "DS-SEC-01") {
      not_applicable.insert(id);
      continue;
    }
    auto& out = by_rule[id];
    if (id == "DS-DOC-01") {
      out = check_documentation(wb, cfg);
    } else if (id == "DS-LAB-01") {
      out = check_labelling(wb, cfg, checks);
    } else if (id == "DS-SEP-01") {
      if (!index) index = formula::referenced_by(wb);
      out = check_separation(wb, cfg, checks, *index);
    } else if (id == "DS-LOCK-01") {
      out = check_locking(wb);
    } else if (id == "DS-CHK-01") {
      out = check_check_cells(wb, cfg, checks);
    } else if (id == "DS-LOG-01") {
      out = check_log(wb, id, Severity::high, cfg.change_log_sheet, cfg.change_log_headers, true);
    } else if (id == "DS-LOG-02") {
      out = check_log(wb, id, Severity::medium, cfg.review_log_sheet, cfg.review_log_headers, true);
    } else if (id == "DS-TRA-01") {
      out = check_transparency(wb, cfg);
    } else if (id == "DS-SEC-01") {
      if (!wb.security.encrypted && !ctx.path) {
        not_applicable.insert(id);
        by_rule.erase(id);
      } else if (ctx.path) {
        out = check_security(wb, cfg, *ctx.path);
      }
    }
  }

  std::set<std::string> int_enabled;
  for (const auto& id : integrity::rule_ids()) {
    if (!cfg.on(id)) continue;
    if (opaque) {
      not_applicable.insert(id);
    } else {
      int_enabled.insert(id);
      by_rule[id];
    }
  }
  if (!int_enabled.empty()) {
    auto result = integrity::run_all(wb, cfg.integrity, int_enabled);
    for (auto& f : result.findings) by_rule[f.rule_id].push_back(std::move(f));
    for (auto& w : result.warnings) report.warnings.push_back(std::move(w));
  }

  if (cfg.on("ARC-01")) {
    if (ctx.path) {
      auto& out = by_rule["ARC-01"];
      if (auto f = check_archive_name(std::filesystem::path(*ctx.path).filename().string(), cfg.archive_pattern)) {
        out.push_back(std::move(*f));
      }
    } else {
      not_applicable.insert("ARC-01");
    }
  }

  for (const auto& id : known_rule_ids()) {
    if (not_applicable.count(id)) {
      report.rules_not_applicable.push_back(id);
      continue;
    }
    auto it = by_rule.find(id);
    if (it == by_rule.end()) continue;
    if (it->second.empty()) {
      report.rules_passed.push_back(id);
    } else {
      report.rules_failed.push_back(id);
      report.findings.insert(report.findings.end(), it->second.begin(), it->second.end());
    }
  }
  sort_findings(report.findings);
  return report;
}

std::string serialize_report(const AuditReport& r) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["workbook_name"] = r.workbook_name;
  j["audited_at"] = format_timestamp(r.audited_at);
  j["compliance_score"] = r.compliance_score();
  j["rules_applicable"] = r.applicable();
  j["rules_passed"] = r.rules_passed;
  j["rules_failed"] = r.rules_failed;
  j["rules_not_applicable"] = r.rules_not_applicable;
  j["findings"] = ordered_json::array();
  for (const auto& f : r.findings) j["findings"].push_back(finding_to_json(f));
  j["warnings"] = r.warnings;
  j["regressions"] = ordered_json::array();
  for (const auto& reg : r.regressions) {
    ordered_json item;
    item["item_id"] = reg.item_id;
    item["finding"] = finding_to_json(reg.finding);
    j["regressions"].push_back(std::move(item));
  }
  return j.dump();
}

AuditReport parse_report(std::string_view json_text) {
  const json j = parse_json(json_text, "invalid-document");
  if (!j.is_object()) bad_document("report", "expected an object");
  AuditReport r;
  r.workbook_name = doc_field<std::string>(j, "workbook_name");
  r.audited_at = parse_timestamp(doc_field<std::string>(j, "audited_at"));
  r.rules_passed = doc_field<std::vector<std::string>>(j, "rules_passed");
  if (j.contains("rules_failed")) r.rules_failed = doc_field<std::vector<std::string>>(j, "rules_failed");
  if (j.contains("rules_not_applicable")) {
    r.rules_not_applicable = doc_field<std::vector<std::string>>(j, "rules_not_applicable");
  }
  if (j.contains("warnings")) r.warnings = doc_field<std::vector<std::string>>(j, "warnings");
  const json findings = doc_field<json>(j, "findings");
  if (!findings.is_array()) bad_document("findings", "expected an array");
  std::set<std::string> failed(r.rules_failed.begin(), r.rules_failed.end());
  for (const auto& f : findings) {
    r.findings.push_back(finding_from_json(f));
    if (failed.insert(r.findings.back().rule_id).second) r.rules_failed.push_back(r.findings.back().rule_id);
  }
  for (const auto& id : r.rules_passed) {
    if (failed.count(id)) bad_document("rules_passed", "rule " + id + " both passed and has findings");
  }
  if (j.contains("regressions")) {
    for (const auto& item : doc_field<json>(j, "regressions")) {
      r.regressions.push_back({doc_field<std::string>(item, "item_id"), finding_from_json(doc_field<json>(item, "finding"))});
    }
  }
  sort_findings(r.findings);
  return r;
}

// ---------------------------------------------------------------------------
// Classification

std::string_view to_string(CellClass c) noexcept {
  switch (c) {
    case CellClass::input: return "input";
    case CellClass::calculation: return "calculation";
    case CellClass::output: return "output";
    case CellClass::label: return "label";
    case CellClass::check: return "check";
  }
  return "label";
}

std::map<formula::CellKey, std::set<CellClass>> classify_cells(const Workbook& wb, const std::string& check_prefix) {
  const auto index = formula::referenced_by(wb);
  const CheckCells checks(wb, check_prefix);
  std::map<formula::CellKey, std::set<CellClass>> out;
  for (const auto& sheet : wb.sheets) {
    for (const auto& [addr, cell] : sheet.cells) {
      formula::CellKey key{sheet.name, addr};
      auto& classes = out[key];
      const bool referenced = index.referenced_by.count(key) > 0;
      if (checks.contains(sheet.name, addr)) {
        classes = {CellClass::check};
      } else if (cell.has_formula()) {
        classes.insert(CellClass::calculation);
        if (!referenced) classes.insert(CellClass::output);
      } else if (referenced) {
        classes.insert(CellClass::input);
      } else if (cell.text() || std::holds_alternative<Blank>(cell.value)) {
        classes.insert(CellClass::label);
      } else {
        classes.insert(CellClass::input);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Remediation plan

std::string_view to_string(ItemStatus s) noexcept {
  switch (s) {
    case ItemStatus::open: return "open";
    case ItemStatus::in_progress: return "in_progress";
    case ItemStatus::done: return "done";
    case ItemStatus::accepted_risk: return "accepted_risk";
  }
  return "open";
}

std::optional<ItemStatus> item_status_from_string(std::string_view s) noexcept {
  for (auto v : {ItemStatus::open, ItemStatus::in_progress, ItemStatus::done, ItemStatus::accepted_risk}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::int64_t estimate_effort_hundredths(const std::vector<PlanItem>& items, const EffortConfig& effort) {
  if (items.empty()) return 0;
  std::int64_t total = 0;
  for (const auto& item : items) {
    auto it = effort.weight_hundredths.find(item.finding.severity);
    if (it != effort.weight_hundredths.end()) total += it->second;
  }
  if (effort.floor_hundredths) total = std::max(total, *effort.floor_hundredths);
  if (effort.ceiling_hundredths) total = std::min(total, *effort.ceiling_hundredths);
  return total;
}

RemediationPlan build_plan(const AuditReport& report, const EffortConfig& effort, const std::string& owner,
                           const std::string& id_prefix) {
  RemediationPlan plan;
  plan.workbook_name = report.workbook_name;
  int n = 0;
  for (const auto& f : report.findings) {
    plan.items.push_back({id_prefix + "-" + std::to_string(++n), f, action_for(f), ItemStatus::open, owner});
  }
  plan.effort_hundredths = estimate_effort_hundredths(plan.items, effort);
  return plan;
}

bool transition_allowed(ItemStatus from, ItemStatus to) noexcept {
  auto rank = [](ItemStatus s) {
    switch (s) {
      case ItemStatus::open: return 0;
      case ItemStatus::in_progress: return 1;
      case ItemStatus::done:
      case ItemStatus::accepted_risk: return 2;
    }
    return 0;
  };
  if (from == ItemStatus::done && to == ItemStatus::open) return true;
  return rank(to) > rank(from);
}

void transition(PlanItem& item, ItemStatus to, const std::string& justification) {
  if (!transition_allowed(item.status, to)) {
    throw Error("invalid-transition",
                "plan item " + item.item_id + " cannot move from " + std::string(to_string(item.status)) + " to " +
                    std::string(to_string(to)),
                "status");
  }
  if (to == ItemStatus::accepted_risk) {
    const std::string why = trim(justification);
    if (why.empty()) {
      throw Error("missing-justification", "accepted_risk requires a justification", "justification");
    }
    item.action_text += "\nAccepted risk: " + why;
  }
  item.status = to;
}

AuditReport qa_recheck(const Workbook& wb, const RemediationPlan& plan, const RuleConfig& cfg,
                       const AuditContext& ctx) {
  AuditReport report = audit(wb, cfg, ctx);
  for (const auto& item : plan.items) {
    if (item.status != ItemStatus::done) continue;
    for (const auto& f : report.findings) {
      if (same_location(f, item.finding)) {
        report.regressions.push_back({item.item_id, f});
        break;
      }
    }
  }
  return report;
}

std::string serialize_plan(const RemediationPlan& plan) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["workbook_name"] = plan.workbook_name;
  j["estimated_effort_days"] = plan.estimated_effort_days();
  j["effort_basis"] = "estimate: sum of per-severity day weights";
  j["items"] = ordered_json::array();
  for (const auto& item : plan.items) {
    ordered_json i;
    i["item_id"] = item.item_id;
    i["finding"] = finding_to_json(item.finding);
    i["action_text"] = item.action_text;
    i["status"] = to_string(item.status);
    i["owner"] = item.owner;
    j["items"].push_back(std::move(i));
  }
  return j.dump();
}

RemediationPlan parse_plan(std::string_view json_text) {
  const json j = parse_json(json_text, "invalid-document");
  if (!j.is_object()) bad_document("plan", "expected an object");
  RemediationPlan plan;
  plan.workbook_name = doc_field<std::string>(j, "workbook_name");
  plan.effort_hundredths = static_cast<std::int64_t>(std::llround(doc_field<double>(j, "estimated_effort_days") * 100.0));
  for (const auto& i : doc_field<json>(j, "items")) {
    PlanItem item;
    item.item_id = doc_field<std::string>(i, "item_id");
    item.finding = finding_from_json(doc_field<json>(i, "finding"));
    item.action_text = doc_field<std::string>(i, "action_text");
    const auto status = item_status_from_string(doc_field<std::string>(i, "status"));
    if (!status) bad_document("status", "unknown plan item status");
    item.status = *status;
    item.owner = doc_field<std::string>(i, "owner");
    plan.items.push_back(std::move(item));
  }
  return plan;
}

}  // namespace euc::standards
