#include "euc/finding.hpp"

#include <algorithm>
#include <tuple>

#include "euc/error.hpp"

namespace euc {

std::string_view to_string(Severity s) noexcept {
  switch (s) {
    case Severity::info: return "info";
    case Severity::low: return "low";
    case Severity::medium: return "medium";
    case Severity::high: return "high";
  }
  return "info";
}

std::optional<Severity> severity_from_string(std::string_view s) noexcept {
  for (auto v : {Severity::info, Severity::low, Severity::medium, Severity::high}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

bool finding_less(const Finding& a, const Finding& b) {
  const int ar = a.addr ? a.addr->row : 0, ac = a.addr ? a.addr->col : 0;
  const int br = b.addr ? b.addr->row : 0, bc = b.addr ? b.addr->col : 0;
  return std::tie(a.sheet, ar, ac, a.rule_id, a.message, a.evidence) <
         std::tie(b.sheet, br, bc, b.rule_id, b.message, b.evidence);
}

void sort_findings(std::vector<Finding>& findings) {
  std::stable_sort(findings.begin(), findings.end(), finding_less);
}

bool same_location(const Finding& a, const Finding& b) {
  return a.rule_id == b.rule_id && a.sheet == b.sheet && a.addr == b.addr;
}

nlohmann::ordered_json finding_to_json(const Finding& f) {
  nlohmann::ordered_json j;
  j["rule_id"] = f.rule_id;
  j["severity"] = to_string(f.severity);
  j["sheet"] = f.sheet;
  if (f.addr) j["addr"] = addr_to_a1(*f.addr);
  j["message"] = f.message;
  j["evidence"] = f.evidence;
  return j;
}

Finding finding_from_json(const nlohmann::json& j) {
  auto bad = [](const std::string& field) -> Error {
    return Error("invalid-document", "finding field '" + field + "' missing or malformed", field);
  };
  if (!j.is_object()) throw bad("finding");
  Finding f;
  auto text = [&](const char* key, bool required) -> std::string {
    if (!j.contains(key)) {
      if (required) throw bad(key);
      return "";
    }
    if (!j.at(key).is_string()) throw bad(key);
    return j.at(key).get<std::string>();
  };
  f.rule_id = text("rule_id", true);
  const auto sev = severity_from_string(text("severity", true));
  if (!sev) throw bad("severity");
  f.severity = *sev;
  f.sheet = text("sheet", false);
  if (j.contains("addr") && !j.at("addr").is_null()) {
    try {
      f.addr = a1_to_addr(text("addr", true));
    } catch (const Error&) {
      throw bad("addr");
    }
  }
  f.message = text("message", false);
  f.evidence = text("evidence", false);
  return f;
}

}  // namespace euc
