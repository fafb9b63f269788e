// JSON text crosses the boundary; the Python package decodes it.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "euc/changes.hpp"
#include "euc/error.hpp"
#include "euc/formula.hpp"
#include "euc/ingest.hpp"
#include "euc/inventory.hpp"
#include "euc/standards.hpp"
#include "durable_file.hpp"

namespace py = pybind11;
using namespace euc;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

using Warnings = std::vector<std::tuple<std::string, std::string, std::string>>;

std::pair<std::string, Warnings> load(const std::string& path) {
  const auto report = load_workbook_file(path);
  Warnings warnings;
  for (const auto& w : report.warnings) warnings.emplace_back(w.code, w.location, w.message);
  return {serialize_canonical(report.workbook), warnings};
}

std::string audit(const std::string& workbook_json, const std::optional<std::string>& config_json,
                  const std::optional<std::string>& location, const std::optional<std::string>& at) {
  const auto cfg = config_json ? standards::parse_rule_config(*config_json) : standards::RuleConfig{};
  const standards::AuditContext ctx{at ? parse_timestamp(*at) : now_utc(), location};
  return standards::serialize_report(standards::audit(parse_canonical(workbook_json), cfg, ctx));
}

std::string plan(const std::string& report_json, const std::string& owner) {
  return standards::serialize_plan(standards::build_plan(standards::parse_report(report_json), {}, owner));
}

std::string diff(const std::string& before_json, const std::string& after_json,
                 const std::optional<std::string>& rules_json) {
  const Workbook before = parse_canonical(before_json);
  const auto d = changes::diff(before, parse_canonical(after_json));
  const auto rules = rules_json ? changes::parse_alert_rules_text(*rules_json) : changes::default_alert_rules();
  ordered_json j = changes::diff_to_json(d);
  j["triggered_rules"] = changes::apply_alert_rules(d, before, rules);
  return j.dump();
}

std::string normalize(const std::string& formula_text, const std::string& host) {
  return formula::normalize_r1c1(formula::parse_formula(formula_text), a1_to_addr(host)).canonical_text;
}

std::string canonical_formula(const std::string& formula_text) {
  return formula::print_formula(formula::parse_formula(formula_text));
}

std::string required_controls(const std::string& category, const std::string& tier) {
  const auto c = inventory::category_from_string(category);
  if (!c) throw Error("validation-error", "unknown category", "category");
  const auto t = inventory::tier_from_string(tier);
  if (!t) throw Error("validation-error", "unknown tier", "tier");
  return inventory::controls_to_json(inventory::required_controls(*c, *t)).dump();
}

class InventoryHandle {
 public:
  explicit InventoryHandle(const std::string& dir) : lock_(locked(dir)), inv_(dir) {}

  std::string register_record(const std::string& fields_json, const std::string& principal) {
    return view(inv_.register_record(json::parse(fields_json), principal));
  }
  std::string update_record(const std::string& id, const std::string& patch_json, const std::string& principal) {
    return view(inv_.update_record(id, json::parse(patch_json), principal));
  }
  std::optional<std::string> record(const std::string& id) const {
    const auto r = inv_.record(id);
    if (!r) return std::nullopt;
    return view(*r);
  }
  std::size_t size() const { return inv_.size(); }
  std::size_t seed_demo(const std::string& principal) {
    if (inv_.size() != 0) throw Error("validation-error", "registry is not empty", "data-dir");
    const auto records = inv_.register_many(inventory::demo_seed_records(inv_.now()), principal);
    inv_.compact();
    return records.size();
  }
  std::string audit(const std::string& id, const std::string& workbook_json, const std::optional<std::string>& config_json,
                    const std::optional<std::string>& location) {
    const auto cfg = config_json ? standards::parse_rule_config(*config_json) : standards::RuleConfig{};
    return standards::serialize_report(inv_.run_audit(id, parse_canonical(workbook_json), cfg, location));
  }
  std::optional<std::string> plan(const std::string& id) const {
    const auto p = inv_.plan(id);
    if (!p) return std::nullopt;
    return standards::serialize_plan(*p);
  }
  std::string summary(const std::optional<std::string>& today) const {
    return inv_.summary(to_day(today ? parse_timestamp(*today) : inv_.now())).dump();
  }

 private:
  std::string view(const inventory::EucRecord& r) const { return inventory::record_view_json(r, to_day(inv_.now())).dump(); }

  // Same lock the service holds, so a running server and a script never share a directory.
  static std::filesystem::path locked(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    return dir / "eucctl.lock";
  }

  detail::DirLock lock_;
  inventory::Inventory inv_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "EUC spreadsheet controls: ingest, audit, diff and inventory.";

  static py::exception<Error> error(m, "EucError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::handle(error.ptr())(e.what());
      inst.attr("code") = e.code();
      inst.attr("field") = e.field() ? py::object(py::str(*e.field())) : py::none();
      PyErr_SetObject(error.ptr(), inst.ptr());
    }
  });

  m.def("load_workbook", &load, py::arg("path"), "Canonical JSON and (code, location, message) warnings.");
  m.def("audit", &audit, py::arg("workbook_json"), py::arg("config_json") = py::none(),
        py::arg("location") = py::none(), py::arg("at") = py::none());
  m.def("build_plan", &plan, py::arg("report_json"), py::arg("owner") = "");
  m.def("diff", &diff, py::arg("before_json"), py::arg("after_json"), py::arg("rules_json") = py::none());
  m.def("normalize_r1c1", &normalize, py::arg("formula"), py::arg("host"));
  m.def("canonical_formula", &canonical_formula, py::arg("formula"));
  m.def("required_controls", &required_controls, py::arg("category"), py::arg("tier"));

  py::class_<InventoryHandle>(m, "Inventory")
      .def(py::init<const std::string&>(), py::arg("data_dir"))
      .def("register", &InventoryHandle::register_record, py::arg("fields_json"), py::arg("principal"))
      .def("update", &InventoryHandle::update_record, py::arg("record_id"), py::arg("patch_json"),
           py::arg("principal"))
      .def("record", &InventoryHandle::record, py::arg("record_id"))
      .def("__len__", &InventoryHandle::size)
      .def("seed_demo", &InventoryHandle::seed_demo, py::arg("principal") = "seed-demo")
      .def("audit", &InventoryHandle::audit, py::arg("record_id"), py::arg("workbook_json"),
           py::arg("config_json") = py::none(), py::arg("location") = py::none())
      .def("plan", &InventoryHandle::plan, py::arg("record_id"))
      .def("summary", &InventoryHandle::summary, py::arg("today") = py::none());
}
