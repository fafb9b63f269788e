#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace euc::detail {

/// Minimal element tree. Namespace prefixes are stripped from element and
/// attribute names ("x:c" -> "c", "r:id" keeps its prefix under "r:id").
struct XmlNode {
  std::string name;
  std::map<std::string, std::string> attrs;
  std::string text;  // concatenated character data directly inside this element
  std::vector<std::unique_ptr<XmlNode>> children;

  const XmlNode* child(std::string_view n) const;
  std::vector<const XmlNode*> all(std::string_view n) const;
  const std::string* attr(const std::string& n) const;
};

/// Throws Error("corrupt-zip") naming `part` on malformed XML.
std::unique_ptr<XmlNode> parse_xml(const std::string& data, const std::string& part);

}  // namespace euc::detail
