#include "xml_tree.hpp"

#include <expat.h>

#include "euc/error.hpp"

namespace euc::detail {

const XmlNode* XmlNode::child(std::string_view n) const {
  for (const auto& c : children) {
    if (c->name == n) return c.get();
  }
  return nullptr;
}

std::vector<const XmlNode*> XmlNode::all(std::string_view n) const {
  std::vector<const XmlNode*> out;
  for (const auto& c : children) {
    if (c->name == n) out.push_back(c.get());
  }
  return out;
}

const std::string* XmlNode::attr(const std::string& n) const {
  auto it = attrs.find(n);
  return it == attrs.end() ? nullptr : &it->second;
}

namespace {

struct Builder {
  std::unique_ptr<XmlNode> root;
  std::vector<XmlNode*> stack;
};

std::string local_name(const char* qname) {
  std::string_view q(qname);
  const auto colon = q.find(':');
  return std::string(colon == std::string_view::npos ? q : q.substr(colon + 1));
}

void on_start(void* data, const XML_Char* name, const XML_Char** attrs) {
  auto* b = static_cast<Builder*>(data);
  auto node = std::make_unique<XmlNode>();
  node->name = local_name(name);
  for (int i = 0; attrs[i]; i += 2) node->attrs[attrs[i]] = attrs[i + 1];
  XmlNode* raw = node.get();
  if (b->stack.empty()) {
    b->root = std::move(node);
  } else {
    b->stack.back()->children.push_back(std::move(node));
  }
  b->stack.push_back(raw);
}

void on_end(void* data, const XML_Char*) { static_cast<Builder*>(data)->stack.pop_back(); }

void on_text(void* data, const XML_Char* s, int len) {
  auto* b = static_cast<Builder*>(data);
  if (!b->stack.empty()) b->stack.back()->text.append(s, static_cast<std::size_t>(len));
}

}  // namespace

std::unique_ptr<XmlNode> parse_xml(const std::string& data, const std::string& part) {
  Builder b;
  XML_Parser p = XML_ParserCreate("UTF-8");
  XML_SetUserData(p, &b);
  XML_SetElementHandler(p, on_start, on_end);
  XML_SetCharacterDataHandler(p, on_text);
  const auto status = XML_Parse(p, data.data(), static_cast<int>(data.size()), 1);
  std::string message;
  if (status != XML_STATUS_OK) {
    message = part + ": malformed XML at line " + std::to_string(XML_GetCurrentLineNumber(p)) + ": " +
              XML_ErrorString(XML_GetErrorCode(p));
  }
  XML_ParserFree(p);
  if (!message.empty()) throw Error("corrupt-zip", message);
  if (!b.root) throw Error("corrupt-zip", part + ": empty document");
  return std::move(b.root);
}

}  // namespace euc::detail
