#include "euc/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>

#include "euc/documentation.hpp"
#include "euc/error.hpp"
#include "euc/formula.hpp"
#include "xml_tree.hpp"
#include "zip_reader.hpp"

namespace euc {

using detail::XmlNode;

std::string_view to_string(SniffedFormat f) noexcept {
  switch (f) {
    case SniffedFormat::xlsx_zip: return "xlsx_zip";
    case SniffedFormat::cfb_encrypted: return "cfb_encrypted";
    case SniffedFormat::unknown: return "unknown";
  }
  return "unknown";
}

SniffedFormat sniff_format(std::span<const std::uint8_t> bytes) noexcept {
  static constexpr std::uint8_t kZip[] = {0x50, 0x4B, 0x03, 0x04};
  static constexpr std::uint8_t kCfb[] = {0xD0, 0xCF, 0x11, 0xE0, 0xA1, 0xB1, 0x1A, 0xE1};
  if (bytes.size() >= sizeof kCfb && std::equal(std::begin(kCfb), std::end(kCfb), bytes.begin())) {
    return SniffedFormat::cfb_encrypted;
  }
  if (bytes.size() >= sizeof kZip && std::equal(std::begin(kZip), std::end(kZip), bytes.begin())) {
    return SniffedFormat::xlsx_zip;
  }
  return SniffedFormat::unknown;
}

namespace {

constexpr const char* kDocumentationSheet = "Documentation";

class Importer {
 public:
  Importer(const detail::ZipArchive& zip, IngestReport& report) : zip_(zip), report_(report) {}

  void run() {
    const std::string workbook_part = find_workbook_part();
    if (!zip_.contains(workbook_part)) {
      throw Error("missing-required-part", "package has no " + workbook_part);
    }
    const auto workbook_xml = load(workbook_part);
    const std::string base = directory_of(workbook_part);
    const auto rels = relationships(workbook_part);
    load_shared_strings(base, rels);
    load_styles(base, rels);

    const XmlNode* sheets = workbook_xml->child("sheets");
    int position = 0;
    for (const XmlNode* s : sheets ? sheets->all("sheet") : std::vector<const XmlNode*>{}) {
      ++position;
      const std::string* name = s->attr("name");
      if (!name) {
        warn("unsupported-construct", workbook_part, "sheet entry without a name skipped");
        continue;
      }
      std::string part;
      if (const std::string* rid = relationship_id(*s); rid && rels.count(*rid)) {
        part = resolve(base, rels.at(*rid));
      } else {
        part = base + "worksheets/sheet" + std::to_string(position) + ".xml";
      }
      if (part.find("chartsheets/") != std::string::npos) {
        warn("unsupported-part", part, "chart sheet '" + *name + "' skipped");
        continue;
      }
      if (!zip_.contains(part)) throw Error("missing-required-part", "sheet '" + *name + "' has no part " + part);
      Sheet sheet;
      sheet.name = *name;
      if (const std::string* state = s->attr("state"); state && (*state == "hidden" || *state == "veryHidden")) {
        sheet.hidden = true;
      }
      read_sheet(part, sheet);
      report_.workbook.sheets.push_back(std::move(sheet));
    }

    if (const XmlNode* names = workbook_xml->child("definedNames")) read_defined_names(*names, workbook_part);
    warn_unsupported_parts();

    Workbook& wb = report_.workbook;
    wb.source_format = SourceFormat::xlsx;
    wb.security.sheet_protection_count = static_cast<int>(
        std::count_if(wb.sheets.begin(), wb.sheets.end(), [](const Sheet& s) { return s.protection_enabled; }));
    for (const auto& problem : apply_documented_purposes(wb, kDocumentationSheet)) {
      warn("documentation", kDocumentationSheet, problem);
    }
  }

 private:
  void warn(std::string code, std::string location, std::string message) {
    report_.warnings.push_back({std::move(code), std::move(location), std::move(message)});
  }

  std::unique_ptr<XmlNode> load(const std::string& part) { return detail::parse_xml(zip_.read(part), part); }

  static std::string directory_of(const std::string& part) {
    const auto slash = part.rfind('/');
    return slash == std::string::npos ? "" : part.substr(0, slash + 1);
  }

  static std::string resolve(const std::string& base, const std::string& target) {
    std::string joined = !target.empty() && target[0] == '/' ? target.substr(1) : base + target;
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= joined.size()) {
      auto slash = joined.find('/', start);
      if (slash == std::string::npos) slash = joined.size();
      std::string seg = joined.substr(start, slash - start);
      if (seg == "..") {
        if (!parts.empty()) parts.pop_back();
      } else if (!seg.empty() && seg != ".") {
        parts.push_back(seg);
      }
      start = slash + 1;
    }
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : "/") + p;
    return out;
  }

  static const std::string* relationship_id(const XmlNode& n) {
    for (const auto& [key, value] : n.attrs) {
      if (key == "id" || (key.size() > 3 && key.compare(key.size() - 3, 3, ":id") == 0)) return &value;
    }
    return nullptr;
  }

  std::string find_workbook_part() {
    if (zip_.contains("_rels/.rels")) {
      const auto root = load("_rels/.rels");
      for (const XmlNode* r : root->all("Relationship")) {
        const std::string* type = r->attr("Type");
        const std::string* target = r->attr("Target");
        if (type && target && type->size() >= 14 &&
            type->compare(type->size() - 14, 14, "officeDocument") == 0) {
          return resolve("", *target);
        }
      }
    }
    return "xl/workbook.xml";
  }

  // rId -> target, resolved relative to the part's directory later.
  std::map<std::string, std::string> relationships(const std::string& part) {
    std::map<std::string, std::string> out;
    const std::string rels_part = directory_of(part) + "_rels/" + part.substr(directory_of(part).size()) + ".rels";
    if (!zip_.contains(rels_part)) return out;
    rel_types_.clear();
    const auto root = load(rels_part);
    for (const XmlNode* r : root->all("Relationship")) {
      const std::string* id = r->attr("Id");
      const std::string* target = r->attr("Target");
      if (!id || !target) continue;
      if (const std::string* mode = r->attr("TargetMode"); mode && *mode == "External") continue;
      out[*id] = *target;
      if (const std::string* type = r->attr("Type")) rel_types_[*id] = *type;
    }
    return out;
  }

  std::optional<std::string> part_by_type(const std::string& base, const std::map<std::string, std::string>& rels,
                                          const std::string& type_suffix, const std::string& fallback) {
    for (const auto& [id, type] : rel_types_) {
      if (type.size() >= type_suffix.size() &&
          type.compare(type.size() - type_suffix.size(), type_suffix.size(), type_suffix) == 0) {
        return resolve(base, rels.at(id));
      }
    }
    if (zip_.contains(fallback)) return fallback;
    return std::nullopt;
  }

  static std::string run_text(const XmlNode& si) {
    if (const XmlNode* t = si.child("t")) return t->text;
    std::string out;
    for (const XmlNode* r : si.all("r")) {
      if (const XmlNode* t = r->child("t")) out += t->text;
    }
    return out;
  }

  void load_shared_strings(const std::string& base, const std::map<std::string, std::string>& rels) {
    const auto part = part_by_type(base, rels, "/sharedStrings", base + "sharedStrings.xml");
    if (!part) return;
    const auto root = load(*part);
    for (const XmlNode* si : root->all("si")) shared_strings_.push_back(run_text(*si));
  }

  void load_styles(const std::string& base, const std::map<std::string, std::string>& rels) {
    const auto part = part_by_type(base, rels, "/styles", base + "styles.xml");
    if (!part) return;
    const auto root = load(*part);
    const XmlNode* xfs = root->child("cellXfs");
    if (!xfs) return;
    for (const XmlNode* xf : xfs->all("xf")) {
      bool locked = true;
      if (const XmlNode* prot = xf->child("protection")) {
        if (const std::string* l = prot->attr("locked")) locked = !(*l == "0" || *l == "false");
      }
      style_locked_.push_back(locked);
    }
  }

  static bool truthy(const std::string* v) { return v && (*v == "1" || *v == "true"); }

  static std::optional<double> parse_number(const std::string& text) {
    double v = 0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
    return v;
  }

  void read_sheet(const std::string& part, Sheet& sheet) {
    const auto root = load(part);
    if (const XmlNode* prot = root->child("sheetProtection")) {
      const std::string* flag = prot->attr("sheet");
      sheet.protection_enabled = !flag || !(*flag == "0" || *flag == "false");
    }
    std::set<int> hidden_cols;
    if (const XmlNode* cols = root->child("cols")) {
      for (const XmlNode* col : cols->all("col")) {
        if (!truthy(col->attr("hidden"))) continue;
        const std::string* min = col->attr("min");
        const std::string* max = col->attr("max");
        if (!min || !max) continue;
        const int lo = std::max(1, std::atoi(min->c_str()));
        const int hi = std::min(kMaxCol, std::atoi(max->c_str()));
        for (int c = lo; c <= hi; ++c) hidden_cols.insert(c);
      }
    }
    sheet.hidden_cols.assign(hidden_cols.begin(), hidden_cols.end());

    static const std::set<std::string> kUnsupported = {
        "mergeCells", "conditionalFormatting", "dataValidations", "hyperlinks", "tableParts",
        "drawing",    "legacyDrawing",         "picture",         "oleObjects", "controls",
        "autoFilter", "scenarios",             "sortState"};
    for (const auto& child : root->children) {
      if (kUnsupported.count(child->name)) {
        warn("unsupported-construct", sheet.name, "<" + child->name + "> ignored");
      }
    }

    const XmlNode* data = root->child("sheetData");
    if (!data) return;

    // Shared formula masters first so dependents can precede them in document order.
    struct Master {
      CellAddr addr;
      std::string text;
    };
    std::map<std::string, Master> masters;
    walk_cells(*data, [&](const XmlNode& c, const CellAddr& addr) {
      const XmlNode* f = c.child("f");
      if (!f) return;
      const std::string* type = f->attr("t");
      const std::string* si = f->attr("si");
      if (type && *type == "shared" && si && !f->text.empty()) masters.emplace(*si, Master{addr, f->text});
    });

    std::set<int> hidden_rows;
    walk_cells(
        *data,
        [&](const XmlNode& c, const CellAddr& addr) {
          const std::string loc = sheet.name + "!" + addr_to_a1(addr);
          Cell cell;
          if (const std::string* s = c.attr("s")) {
            const auto index = static_cast<std::size_t>(std::atoll(s->c_str()));
            if (index < style_locked_.size()) {
              cell.locked = style_locked_[index];
            } else if (index != 0 || !style_locked_.empty()) {
              warn("bad-style-index", loc, "style index " + *s + " out of range; treated as locked");
            }
          } else if (!style_locked_.empty()) {
            cell.locked = style_locked_[0];
          }
          read_formula(c, addr, loc, masters, cell);
          read_value(c, loc, cell);
          if (!cell.is_empty()) sheet.cells[addr] = std::move(cell);
        },
        &hidden_rows);
    sheet.hidden_rows.assign(hidden_rows.begin(), hidden_rows.end());
  }

  template <typename Fn>
  void walk_cells(const XmlNode& data, Fn&& fn, std::set<int>* hidden_rows = nullptr) {
    int row_index = 0;
    for (const XmlNode* row : data.all("row")) {
      if (const std::string* r = row->attr("r")) {
        row_index = std::atoi(r->c_str());
      } else {
        ++row_index;
      }
      if (row_index < 1 || row_index > kMaxRow) continue;
      if (hidden_rows && truthy(row->attr("hidden"))) hidden_rows->insert(row_index);
      int col_index = 0;
      for (const XmlNode* c : row->all("c")) {
        CellAddr addr{col_index + 1, row_index};
        if (const std::string* r = c->attr("r")) {
          try {
            addr = a1_to_addr(*r);
          } catch (const Error&) {
            if (hidden_rows) warn("bad-cell-reference", "row " + std::to_string(row_index), "cell reference '" + *r + "' skipped");
            continue;
          }
        }
        col_index = addr.col;
        fn(*c, addr);
      }
    }
  }

  template <typename Masters>
  void read_formula(const XmlNode& c, const CellAddr& addr, const std::string& loc, const Masters& masters,
                    Cell& cell) {
    const XmlNode* f = c.child("f");
    if (!f) return;
    const std::string type = f->attr("t") ? *f->attr("t") : "normal";
    if (type == "dataTable") {
      warn("unsupported-construct", loc, "data table formula skipped; cached value kept");
      return;
    }
    if (type == "array") warn("array-formula", loc, "array formula imported as plain formula text");
    if (type == "shared" && f->text.empty()) {
      const std::string* si = f->attr("si");
      auto it = si ? masters.find(*si) : masters.end();
      if (it == masters.end()) {
        warn("shared-formula", loc, "shared formula without a master cell; formula dropped");
        return;
      }
      try {
        const auto ast = formula::parse_formula(it->second.text);
        cell.formula = formula::print_formula(
            formula::translate(ast, addr.col - it->second.addr.col, addr.row - it->second.addr.row));
      } catch (const Error& e) {
        warn("shared-formula", loc, std::string("shared formula could not be expanded: ") + e.what());
      }
      return;
    }
    std::string text = f->text;
    if (!text.empty() && text[0] == '=') text.erase(0, 1);
    if (!text.empty()) cell.formula = text;
  }

  void read_value(const XmlNode& c, const std::string& loc, Cell& cell) {
    const std::string type = c.attr("t") ? *c.attr("t") : "n";
    if (type == "inlineStr") {
      if (const XmlNode* is = c.child("is")) cell.value = run_text(*is);
      return;
    }
    const XmlNode* v = c.child("v");
    if (!v) return;
    const std::string& raw = v->text;
    if (type == "s") {
      const auto index = parse_number(raw);
      if (!index || *index < 0 || *index >= static_cast<double>(shared_strings_.size()) ||
          *index != static_cast<double>(static_cast<std::size_t>(*index))) {
        warn("bad-shared-string", loc, "shared string index '" + raw + "' out of range; cell left blank");
        return;
      }
      cell.value = shared_strings_[static_cast<std::size_t>(*index)];
    } else if (type == "str") {
      cell.value = raw;
    } else if (type == "b") {
      cell.value = raw == "1" || raw == "true";
    } else if (type == "e") {
      if (is_error_code(raw)) {
        cell.value = ErrorValue{raw};
      } else {
        warn("bad-cell-value", loc, "unsupported error value '" + raw + "'; cell left blank");
      }
    } else if (type == "d") {
      warn("date-cell", loc, "ISO date cell imported as text");
      cell.value = raw;
    } else if (auto num = parse_number(raw)) {
      cell.value = *num;
    } else {
      warn("bad-cell-value", loc, "unparsable number '" + raw + "'; cell left blank");
    }
  }

  void read_defined_names(const XmlNode& names, const std::string& part) {
    Workbook& wb = report_.workbook;
    for (const XmlNode* dn : names.all("definedName")) {
      const std::string* name = dn->attr("name");
      if (!name) continue;
      const std::string loc = part + "#" + *name;
      if (name->rfind("_xlnm.", 0) == 0) {
        warn("defined-name-skipped", loc, "built-in name " + *name + " skipped");
        continue;
      }
      if (dn->attr("localSheetId")) {
        warn("defined-name-scope", loc, "sheet-scoped name imported as workbook-scoped");
      }
      std::string text = dn->text;
      if (!text.empty() && text[0] == '=') text.erase(0, 1);
      RangeRef range;
      try {
        range = parse_range(text);
      } catch (const Error&) {
        warn("defined-name-skipped", loc, "name does not refer to a single range: " + text);
        continue;
      }
      const Sheet* target = wb.find_sheet(range.sheet);
      if (!target) {
        warn("defined-name-skipped", loc, "name refers to unknown sheet '" + range.sheet + "'");
        continue;
      }
      range.sheet = target->name;
      if (wb.named_ranges.count(*name)) {
        warn("defined-name-skipped", loc, "duplicate name " + *name + " skipped");
        continue;
      }
      wb.named_ranges[*name] = range;
    }
  }

  void warn_unsupported_parts() {
    struct Kind {
      const char* needle;
      const char* message;
    };
    static constexpr Kind kKinds[] = {
        {"vbaProject.bin", "VBA project present; macro code not inspected"},
        {"/comments", "cell comments not imported"},
        {"/threadedComments/", "threaded comments not imported"},
        {"/drawings/", "drawing part ignored"},
        {"/charts/", "chart part ignored"},
        {"/pivotTables/", "pivot table ignored"},
        {"/pivotCache/", "pivot cache ignored"},
        {"/externalLinks/", "external link part ignored; formulas keep their [book] references"},
        {"/tables/", "table definition ignored"},
        {"/queryTables/", "query table ignored"},
        {"/connections.xml", "data connections ignored"},
    };
    for (const auto& name : zip_.names()) {
      if (name.size() >= 5 && name.compare(name.size() - 5, 5, ".rels") == 0) continue;
      for (const auto& k : kKinds) {
        if (("/" + name).find(k.needle) != std::string::npos) {
          warn("unsupported-part", name, k.message);
          break;
        }
      }
    }
  }

  const detail::ZipArchive& zip_;
  IngestReport& report_;
  std::vector<std::string> shared_strings_;
  std::vector<bool> style_locked_;
  std::map<std::string, std::string> rel_types_;
};

}  // namespace

IngestReport import_xlsx(std::span<const std::uint8_t> bytes, const std::string& name) {
  IngestReport report;
  report.workbook.name = name;
  switch (sniff_format(bytes)) {
    case SniffedFormat::cfb_encrypted:
      report.workbook.source_format = SourceFormat::encrypted_opaque;
      report.workbook.security.encrypted = true;
      report.warnings.push_back({"encrypted-container", name,
                                 "OLE compound file (password-protected workbook); contents not inspected"});
      return report;
    case SniffedFormat::unknown:
      throw Error("not-a-spreadsheet", "input is neither a zip package nor an OLE compound file");
    case SniffedFormat::xlsx_zip: break;
  }
  const detail::ZipArchive zip(bytes);
  Importer(zip, report).run();
  validate(report.workbook);
  return report;
}

IngestReport load_workbook(std::span<const std::uint8_t> bytes, const std::string& name) {
  auto first = std::find_if(bytes.begin(), bytes.end(), [](std::uint8_t b) { return !std::isspace(b); });
  if (first != bytes.end() && *first == '{') {
    IngestReport report;
    report.workbook = parse_canonical(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    return report;
  }
  return import_xlsx(bytes, name);
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io-error", "cannot open " + path, "path");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

std::string workbook_name_from_path(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

IngestReport load_workbook_file(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  return load_workbook(bytes, workbook_name_from_path(path));
}

}  // namespace euc
