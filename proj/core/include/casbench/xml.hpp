#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace casbench::xml {

/// Minimal element tree. Text is the concatenated character data directly
/// inside the element; mixed content keeps no interleaving information.
struct Element {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::string text;
  std::vector<Element> children;

  std::optional<std::string> attribute(std::string_view key) const;
  const Element* child(std::string_view child_name) const;
  std::vector<const Element*> children_named(std::string_view child_name) const;

  Element& add_child(std::string child_name, std::string child_text = {});
  Element& set_attribute(std::string key, std::string value);

  bool operator==(const Element&) const = default;
};

/// Parses a complete document. Throws Error{parse} with line/column on
/// malformed markup. `source` names the input in error messages.
Element parse(std::string_view text, std::string_view source = "<xml>");

Element parse_file(const std::string& path);

/// Deterministic serialization: declaration line, two-space indentation,
/// attributes in insertion order. Leaf elements keep their text inline.
std::string serialize(const Element& root);

std::string escape(std::string_view raw, bool attribute = false);

}  // namespace casbench::xml
