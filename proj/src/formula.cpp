#include "euc/formula.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "euc/error.hpp"

namespace euc::formula {

Node make_number(double v) {
  Node n;
  n.kind = NodeKind::number;
  n.number = v;
  return n;
}
Node make_text(std::string v) {
  Node n;
  n.kind = NodeKind::text;
  n.text = std::move(v);
  return n;
}
Node make_bool(bool v) {
  Node n;
  n.kind = NodeKind::boolean;
  n.boolean = v;
  return n;
}
Node make_error(std::string code) {
  Node n;
  n.kind = NodeKind::error;
  n.text = std::move(code);
  return n;
}
Node make_ref(Reference r) {
  Node n;
  n.kind = NodeKind::reference;
  n.ref = std::move(r);
  return n;
}
Node make_range(Reference a, Reference b) {
  Node n;
  n.kind = NodeKind::range;
  n.ref = std::move(a);
  n.ref_end = std::move(b);
  return n;
}
Node make_name(std::string name) {
  Node n;
  n.kind = NodeKind::name;
  n.text = std::move(name);
  return n;
}
Node make_call(std::string name, std::vector<Node> args) {
  Node n;
  n.kind = NodeKind::call;
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  n.text = std::move(name);
  n.children = std::move(args);
  return n;
}
Node make_binary(std::string op, Node lhs, Node rhs) {
  Node n;
  n.kind = NodeKind::binary;
  n.op = std::move(op);
  n.children.push_back(std::move(lhs));
  n.children.push_back(std::move(rhs));
  return n;
}
Node make_unary(std::string op, Node operand) {
  Node n;
  n.kind = NodeKind::unary;
  n.op = std::move(op);
  n.children.push_back(std::move(operand));
  return n;
}
Node make_group(Node inner) {
  Node n;
  n.kind = NodeKind::group;
  n.children.push_back(std::move(inner));
  return n;
}

namespace {

// Binding strength; higher binds tighter.
constexpr int kComparison = 1;
constexpr int kConcat = 2;
constexpr int kAdditive = 3;
constexpr int kMultiplicative = 4;
constexpr int kPower = 5;
constexpr int kPrefix = 6;
constexpr int kPostfix = 7;
constexpr int kPrimary = 8;

int binary_level(std::string_view op) {
  if (op == "^") return kPower;
  if (op == "*" || op == "/") return kMultiplicative;
  if (op == "+" || op == "-") return kAdditive;
  if (op == "&") return kConcat;
  return kComparison;
}

int level_of(const Node& n) {
  switch (n.kind) {
    case NodeKind::binary: return binary_level(n.op);
    case NodeKind::unary: return n.op == "%" ? kPostfix : kPrefix;
    default: return kPrimary;
  }
}

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '\\' || c == '$';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '\\' ||
         c == '$' || c == '?';
}

// Recognizes `$?[A-Za-z]{1,3}$?[0-9]+` inside the grid.
std::optional<Reference> as_cell_reference(std::string_view tok) {
  std::size_t i = 0;
  Reference r;
  if (i < tok.size() && tok[i] == '$') {
    r.col_absolute = true;
    ++i;
  }
  const std::size_t lb = i;
  while (i < tok.size() && std::isalpha(static_cast<unsigned char>(tok[i]))) ++i;
  const std::size_t letters = i - lb;
  if (letters == 0 || letters > 3) return std::nullopt;
  if (i < tok.size() && tok[i] == '$') {
    r.row_absolute = true;
    ++i;
  }
  const std::size_t db = i;
  while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i]))) ++i;
  if (i == db || i != tok.size() || i - db > 7) return std::nullopt;
  int col = 0;
  for (std::size_t k = lb; k < lb + letters; ++k) {
    col = col * 26 + (std::toupper(static_cast<unsigned char>(tok[k])) - 'A' + 1);
  }
  const int row = std::stoi(std::string(tok.substr(db)));
  if (col > kMaxCol || row < 1 || row > kMaxRow) return std::nullopt;
  r.col = col;
  r.row = row;
  return r;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Node parse() {
    skip_ws();
    if (pos_ >= s_.size()) fail("syntax-error", "empty formula");
    Node n = comparison();
    skip_ws();
    if (pos_ < s_.size()) {
      if (s_[pos_] == ')') fail("unbalanced-parens", "unexpected ')'");
      fail("syntax-error", std::string("unexpected '") + s_[pos_] + "'");
    }
    return n;
  }

 private:
  [[noreturn]] void fail(const char* code, const std::string& what) const {
    throw Error(code, what + " at byte " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool peek(std::string_view tok) {
    skip_ws();
    return s_.substr(pos_, tok.size()) == tok;
  }

  Node comparison() {
    Node lhs = concat();
    for (;;) {
      skip_ws();
      std::string op;
      for (std::string_view cand : {"<>", "<=", ">=", "=", "<", ">"}) {
        if (s_.substr(pos_, cand.size()) == cand) {
          op = cand;
          break;
        }
      }
      if (op.empty()) return lhs;
      pos_ += op.size();
      lhs = make_binary(op, std::move(lhs), concat());
    }
  }

  Node concat() {
    Node lhs = additive();
    while (peek("&")) {
      ++pos_;
      lhs = make_binary("&", std::move(lhs), additive());
    }
    return lhs;
  }

  Node additive() {
    Node lhs = multiplicative();
    for (;;) {
      skip_ws();
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) {
        std::string op(1, s_[pos_++]);
        lhs = make_binary(op, std::move(lhs), multiplicative());
      } else {
        return lhs;
      }
    }
  }

  Node multiplicative() {
    Node lhs = power();
    for (;;) {
      skip_ws();
      if (pos_ < s_.size() && (s_[pos_] == '*' || s_[pos_] == '/')) {
        std::string op(1, s_[pos_++]);
        lhs = make_binary(op, std::move(lhs), power());
      } else {
        return lhs;
      }
    }
  }

  // Right-associative; the operand grammar lets unary minus bind tighter.
  Node power() {
    Node base = prefix();
    if (peek("^")) {
      ++pos_;
      return make_binary("^", std::move(base), power());
    }
    return base;
  }

  Node prefix() {
    skip_ws();
    if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) {
      std::string op(1, s_[pos_++]);
      return make_unary(op, prefix());
    }
    return postfix();
  }

  Node postfix() {
    Node n = primary();
    while (peek("%")) {
      ++pos_;
      n = make_unary("%", std::move(n));
    }
    return n;
  }

  Node primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("syntax-error", "unexpected end of formula");
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))) {
      return number();
    }
    if (c == '"') return make_text(string_literal());
    if (c == '(') {
      const std::size_t open = pos_++;
      Node inner = comparison();
      skip_ws();
      if (pos_ >= s_.size() || s_[pos_] != ')') {
        pos_ = open;
        fail("unbalanced-parens", "unclosed '('");
      }
      ++pos_;
      return make_group(std::move(inner));
    }
    if (c == ')') fail("unbalanced-parens", "unexpected ')'");
    if (c == '{') return opaque_braced('{', '}');
    if (c == '#') return error_literal();
    if (c == '\'') return quoted_sheet_reference();
    if (c == '[') return bracket_prefixed();
    if (is_ident_start(c)) return identifier();
    fail("syntax-error", std::string("unexpected '") + c + "'");
  }

  Node number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
        pos_ = p;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      }
    }
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s_.data() + start, s_.data() + pos_, v);
    if (ec != std::errc{} || ptr != s_.data() + pos_) {
      pos_ = start;
      fail("syntax-error", "malformed number");
    }
    return make_number(v);
  }

  std::string string_literal() {
    const std::size_t start = pos_++;
    std::string out;
    while (pos_ < s_.size()) {
      if (s_[pos_] == '"') {
        if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '"') {
          out.push_back('"');
          pos_ += 2;
          continue;
        }
        ++pos_;
        return out;
      }
      out.push_back(s_[pos_++]);
    }
    pos_ = start;
    fail("syntax-error", "unterminated string literal");
  }

  Node opaque_braced(char open, char close) {
    const std::size_t start = pos_;
    int depth = 0;
    bool in_string = false;
    for (; pos_ < s_.size(); ++pos_) {
      const char ch = s_[pos_];
      if (ch == '"') in_string = !in_string;
      if (in_string) continue;
      if (ch == open) ++depth;
      if (ch == close && --depth == 0) {
        ++pos_;
        Node n;
        n.kind = NodeKind::opaque;
        n.text = std::string(s_.substr(start, pos_ - start));
        return n;
      }
    }
    pos_ = start;
    fail("syntax-error", std::string("unterminated '") + open + "'");
  }

  Node error_literal() {
    for (std::string_view code : kErrorCodes) {
      if (s_.substr(pos_, code.size()) == code) {
        pos_ += code.size();
        return make_error(std::string(code));
      }
    }
    fail("syntax-error", "unknown error literal");
  }

  std::string read_identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && is_ident_char(s_[pos_])) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  // After a sheet prefix and '!': a reference, a range, a name or #REF!.
  Node qualified_target(std::optional<std::string> book, std::string sheet) {
    if (pos_ < s_.size() && s_[pos_] == '#') {
      Node e = error_literal();
      if (e.text != "#REF!") fail("bad-reference", "bad sheet-qualified error literal");
      return e;
    }
    const std::size_t start = pos_;
    const std::string tok = read_identifier();
    auto ref = as_cell_reference(tok);
    if (!ref) {
      pos_ = start;
      fail("bad-reference", "expected a cell reference after '!'");
    }
    ref->book = std::move(book);
    ref->sheet = std::move(sheet);
    return maybe_range(std::move(*ref));
  }

  Node maybe_range(Reference first) {
    std::size_t save = pos_;
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ':') {
      ++pos_;
      skip_ws();
      const std::size_t at = pos_;
      std::string tok = read_identifier();
      std::optional<std::string> sheet2;
      if (pos_ < s_.size() && s_[pos_] == '!') {
        sheet2 = tok;
        ++pos_;
        tok = read_identifier();
      }
      auto second = as_cell_reference(tok);
      if (!second || (sheet2 && (!first.sheet || !iequals(*sheet2, *first.sheet)))) {
        pos_ = at;
        fail("bad-reference", "malformed range end");
      }
      return make_range(std::move(first), std::move(*second));
    }
    pos_ = save;
    return make_ref(std::move(first));
  }

  Node quoted_sheet_reference() {
    const std::size_t start = pos_++;
    std::string name;
    for (;;) {
      if (pos_ >= s_.size()) {
        pos_ = start;
        fail("bad-reference", "unterminated quoted sheet name");
      }
      if (s_[pos_] == '\'') {
        if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '\'') {
          name.push_back('\'');
          pos_ += 2;
          continue;
        }
        ++pos_;
        break;
      }
      name.push_back(s_[pos_++]);
    }
    if (pos_ >= s_.size() || s_[pos_] != '!') fail("bad-reference", "expected '!' after sheet name");
    ++pos_;
    std::optional<std::string> book;
    if (!name.empty() && name.front() == '[') {
      const auto close = name.find(']');
      if (close == std::string::npos) fail("bad-reference", "unterminated workbook prefix");
      book = name.substr(1, close - 1);
      name = name.substr(close + 1);
    }
    if (name.empty()) fail("bad-reference", "empty sheet name");
    return qualified_target(std::move(book), std::move(name));
  }

  // "[Book.xlsx]Sheet!A1" or a structured reference like "[@Col]".
  Node bracket_prefixed() {
    const std::size_t start = pos_;
    const auto close = s_.find(']', pos_);
    if (close != std::string_view::npos && close + 1 < s_.size() && is_ident_start(s_[close + 1])) {
      std::string book(s_.substr(pos_ + 1, close - pos_ - 1));
      pos_ = close + 1;
      std::string sheet = read_identifier();
      if (pos_ < s_.size() && s_[pos_] == '!' && book.find('[') == std::string::npos) {
        ++pos_;
        return qualified_target(std::move(book), std::move(sheet));
      }
      pos_ = start;
    }
    return opaque_braced('[', ']');
  }

  Node identifier() {
    const std::size_t start = pos_;
    std::string tok = read_identifier();
    if (pos_ < s_.size() && s_[pos_] == '(') {
      if (tok.find('$') != std::string::npos) {
        pos_ = start;
        fail("syntax-error", "bad function name");
      }
      ++pos_;
      return call(std::move(tok));
    }
    if (pos_ < s_.size() && s_[pos_] == '!') {
      ++pos_;
      return qualified_target(std::nullopt, std::move(tok));
    }
    if (pos_ < s_.size() && s_[pos_] == '[') {
      // Structured table reference: Table1[Column]
      Node tail = opaque_braced('[', ']');
      Node n;
      n.kind = NodeKind::opaque;
      n.text = tok + tail.text;
      return n;
    }
    if (iequals(tok, "TRUE")) return make_bool(true);
    if (iequals(tok, "FALSE")) return make_bool(false);
    if (auto ref = as_cell_reference(tok)) return maybe_range(std::move(*ref));
    if (tok.find('$') != std::string::npos) {
      pos_ = start;
      fail("bad-reference", "malformed reference '" + tok + "'");
    }
    return make_name(std::move(tok));
  }

  Node call(std::string name) {
    std::vector<Node> args;
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ')') {
      ++pos_;
      return make_call(std::move(name), std::move(args));
    }
    for (;;) {
      skip_ws();
      if (pos_ < s_.size() && (s_[pos_] == ',' || s_[pos_] == ')')) {
        Node empty;
        empty.kind = NodeKind::opaque;  // omitted argument
        args.push_back(std::move(empty));
      } else {
        args.push_back(comparison());
      }
      skip_ws();
      if (pos_ >= s_.size()) fail("unbalanced-parens", "unclosed function call");
      if (s_[pos_] == ',') {
        ++pos_;
        continue;
      }
      if (s_[pos_] == ')') {
        ++pos_;
        return make_call(std::move(name), std::move(args));
      }
      fail("syntax-error", std::string("unexpected '") + s_[pos_] + "' in argument list");
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string sheet_prefix(const Reference& r) {
  if (!r.sheet) return {};
  if (!r.book) return quote_sheet_name(*r.sheet) + "!";
  const std::string combined = "[" + *r.book + "]" + *r.sheet;
  const bool plain = std::all_of(combined.begin(), combined.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '[' || c == ']';
  }) && !std::isdigit(static_cast<unsigned char>(r.sheet->front()));
  if (plain) return combined + "!";
  std::string out = "'";
  for (char c : combined) {
    if (c == '\'') out.push_back('\'');
    out.push_back(c);
  }
  return out + "'!";
}

class Printer {
 public:
  explicit Printer(std::optional<CellAddr> host) : host_(host) {}

  std::string print(const Node& n) {
    std::string out;
    emit(n, out);
    return out;
  }

 private:
  std::string a1_part(const Reference& r) const {
    return (r.col_absolute ? "$" : "") + column_to_letters(r.col) + (r.row_absolute ? "$" : "") +
           std::to_string(r.row);
  }

  std::string r1c1_part(const Reference& r) const {
    std::string out = "R";
    if (r.row_absolute) {
      out += std::to_string(r.row);
    } else if (const int d = r.row - host_->row; d != 0) {
      out += "[" + std::to_string(d) + "]";
    }
    out += "C";
    if (r.col_absolute) {
      out += std::to_string(r.col);
    } else if (const int d = r.col - host_->col; d != 0) {
      out += "[" + std::to_string(d) + "]";
    }
    return out;
  }

  std::string ref_part(const Reference& r) const { return host_ ? r1c1_part(r) : a1_part(r); }

  void emit_child(const Node& child, int min_level, std::string& out) {
    if (level_of(child) < min_level) {
      out.push_back('(');
      emit(child, out);
      out.push_back(')');
    } else {
      emit(child, out);
    }
  }

  void emit(const Node& n, std::string& out) {
    switch (n.kind) {
      case NodeKind::number: out += format_number(n.number); break;
      case NodeKind::text: {
        out.push_back('"');
        for (char c : n.text) {
          if (c == '"') out.push_back('"');
          out.push_back(c);
        }
        out.push_back('"');
        break;
      }
      case NodeKind::boolean: out += n.boolean ? "TRUE" : "FALSE"; break;
      case NodeKind::error: out += n.text; break;
      case NodeKind::reference: out += sheet_prefix(n.ref) + ref_part(n.ref); break;
      case NodeKind::range:
        out += sheet_prefix(n.ref) + ref_part(n.ref) + ":" + ref_part(n.ref_end);
        break;
      case NodeKind::name: out += n.text; break;
      case NodeKind::opaque: out += n.text; break;
      case NodeKind::call: {
        out += n.text;
        out.push_back('(');
        for (std::size_t i = 0; i < n.children.size(); ++i) {
          if (i) out.push_back(',');
          emit(n.children[i], out);
        }
        out.push_back(')');
        break;
      }
      case NodeKind::group:
        out.push_back('(');
        emit(n.children.at(0), out);
        out.push_back(')');
        break;
      case NodeKind::unary:
        if (n.op == "%") {
          emit_child(n.children.at(0), kPostfix, out);
          out.push_back('%');
        } else {
          out += n.op;
          emit_child(n.children.at(0), kPrefix, out);
        }
        break;
      case NodeKind::binary: {
        const int level = binary_level(n.op);
        // Power is right-associative; everything else associates left.
        const int lhs_min = level == kPower ? kPrefix : level;
        const int rhs_min = level == kPower ? kPower : level + 1;
        emit_child(n.children.at(0), lhs_min, out);
        out += n.op;
        emit_child(n.children.at(1), rhs_min, out);
        break;
      }
    }
  }

  std::optional<CellAddr> host_;
};

void shift_component(int& value, bool absolute, int delta, int limit) {
  if (absolute) return;
  value += delta;
  if (value < 1 || value > limit) throw Error("address-out-of-range", "translated reference leaves the grid");
}

void translate_in_place(Node& n, int d_col, int d_row) {
  if (n.kind == NodeKind::reference || n.kind == NodeKind::range) {
    for (Reference* r : {&n.ref, &n.ref_end}) {
      if (n.kind == NodeKind::reference && r == &n.ref_end) continue;
      shift_component(r->col, r->col_absolute, d_col, kMaxCol);
      shift_component(r->row, r->row_absolute, d_row, kMaxRow);
    }
  }
  for (Node& c : n.children) translate_in_place(c, d_col, d_row);
}

RangeRef to_range(const Reference& a, const Reference& b, std::string_view host_sheet) {
  RangeRef r;
  r.sheet = a.sheet ? *a.sheet : std::string(host_sheet);
  r.top_left = {std::min(a.col, b.col), std::min(a.row, b.row)};
  r.bottom_right = {std::max(a.col, b.col), std::max(a.row, b.row)};
  return r;
}

void collect(const Node& n, std::string_view host_sheet,
             const std::set<std::string, std::less<>>& volatile_functions, Precedents& out) {
  switch (n.kind) {
    case NodeKind::reference:
      if (n.ref.book) out.has_external_ref = true;
      else out.ranges.insert(to_range(n.ref, n.ref, host_sheet));
      break;
    case NodeKind::range:
      if (n.ref.book) out.has_external_ref = true;
      else out.ranges.insert(to_range(n.ref, n.ref_end, host_sheet));
      break;
    case NodeKind::name: out.names.insert(n.text); break;
    case NodeKind::opaque:
      if (!n.text.empty()) out.has_opaque = true;
      break;
    case NodeKind::call: {
      std::string_view fn = n.text;
      if (fn.substr(0, 6) == "_XLFN.") fn.remove_prefix(6);
      if (volatile_functions.count(fn)) out.volatile_call = true;
      break;
    }
    default: break;
  }
  for (const Node& c : n.children) collect(c, host_sheet, volatile_functions, out);
}

}  // namespace

FormulaAst parse_formula(std::string_view text) { return Parser(text).parse(); }

std::string print_formula(const FormulaAst& ast) { return Printer(std::nullopt).print(ast); }

NormalizedFormula normalize_r1c1(const FormulaAst& ast, const CellAddr& host) {
  return {Printer(host).print(ast)};
}

FormulaAst translate(const FormulaAst& ast, int d_col, int d_row) {
  FormulaAst copy = ast;
  translate_in_place(copy, d_col, d_row);
  return copy;
}

Precedents precedents(const FormulaAst& ast, std::string_view host_sheet,
                      const std::set<std::string, std::less<>>& volatile_functions) {
  Precedents p;
  collect(ast, host_sheet, volatile_functions, p);
  return p;
}

std::string to_string(const CellKey& key) {
  return quote_sheet_name(key.sheet) + "!" + addr_to_a1(key.addr);
}

namespace {

const RangeRef* find_name(const Workbook& wb, std::string_view name) {
  for (const auto& [n, range] : wb.named_ranges) {
    if (iequals(n, name)) return &range;
  }
  return nullptr;
}

}  // namespace

std::vector<CellKey> expand_precedents(const Workbook& wb, const Precedents& p, std::int64_t cap,
                                       bool* truncated) {
  std::vector<RangeRef> ranges(p.ranges.begin(), p.ranges.end());
  for (const auto& name : p.names) {
    if (const RangeRef* r = find_name(wb, name)) ranges.push_back(*r);
  }
  std::set<CellKey> keys;
  bool hit_cap = false;
  for (const auto& r : ranges) {
    const Sheet* sheet = wb.find_sheet(r.sheet);
    const std::string sheet_name = sheet ? sheet->name : r.sheet;
    for (int row = r.top_left.row; row <= r.bottom_right.row && !hit_cap; ++row) {
      for (int col = r.top_left.col; col <= r.bottom_right.col; ++col) {
        if (static_cast<std::int64_t>(keys.size()) >= cap) {
          hit_cap = true;
          break;
        }
        keys.insert({sheet_name, {col, row}});
      }
    }
  }
  if (truncated) *truncated = hit_cap;
  return {keys.begin(), keys.end()};
}

ParsedWorkbook parse_all(const Workbook& wb) {
  ParsedWorkbook out;
  for (const auto& sheet : wb.sheets) {
    for (const auto& [addr, cell] : sheet.cells) {
      if (!cell.formula) continue;
      CellKey key{sheet.name, addr};
      try {
        out.asts.emplace(key, parse_formula(*cell.formula));
      } catch (const Error& e) {
        out.unparsable.push_back({key, *cell.formula, e.what()});
      }
    }
  }
  return out;
}

ReferenceIndex referenced_by(const Workbook& wb) {
  ReferenceIndex index;
  ParsedWorkbook parsed = parse_all(wb);
  index.unparsable = std::move(parsed.unparsable);
  for (const auto& [host, ast] : parsed.asts) {
    bool truncated = false;
    const auto targets =
        expand_precedents(wb, precedents(ast, host.sheet), kMaxExpandedEdges, &truncated);
    if (truncated) index.truncated.push_back(host);
    for (const auto& t : targets) index.referenced_by[t].insert(host);
  }
  return index;
}

std::string whitespace_normalized(std::string_view formula) {
  std::string out;
  char quote = 0;
  for (char c : formula) {
    if (quote) {
      out.push_back(c);
      if (c == quote) quote = 0;
      continue;
    }
    if (c == '"' || c == '\'') {
      quote = c;
      out.push_back(c);
      continue;
    }
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  }
  return out;
}

}  // namespace euc::formula
