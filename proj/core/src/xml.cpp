#include "casbench/xml.hpp"

#include <expat.h>

#include <memory>

#include "casbench/error.hpp"
#include "casbench/fsutil.hpp"

namespace casbench::xml {

std::optional<std::string> Element::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return v;
  }
  return std::nullopt;
}

const Element* Element::child(std::string_view child_name) const {
  for (const auto& c : children) {
    if (c.name == child_name) return &c;
  }
  return nullptr;
}

std::vector<const Element*> Element::children_named(std::string_view child_name) const {
  std::vector<const Element*> out;
  for (const auto& c : children) {
    if (c.name == child_name) out.push_back(&c);
  }
  return out;
}

Element& Element::add_child(std::string child_name, std::string child_text) {
  children.push_back(Element{std::move(child_name), {}, std::move(child_text), {}});
  return children.back();
}

Element& Element::set_attribute(std::string key, std::string value) {
  for (auto& [k, v] : attributes) {
    if (k == key) {
      v = std::move(value);
      return *this;
    }
  }
  attributes.emplace_back(std::move(key), std::move(value));
  return *this;
}

namespace {

struct ParseState {
  Element root;
  std::vector<Element*> stack;
  bool have_root = false;
};

void XMLCALL on_start(void* user, const XML_Char* name, const XML_Char** atts) {
  auto* state = static_cast<ParseState*>(user);
  Element* target;
  if (state->stack.empty()) {
    state->root = Element{name, {}, {}, {}};
    state->have_root = true;
    target = &state->root;
  } else {
    target = &state->stack.back()->add_child(name);
  }
  for (int i = 0; atts[i] != nullptr; i += 2) {
    target->attributes.emplace_back(atts[i], atts[i + 1]);
  }
  state->stack.push_back(target);
}

void XMLCALL on_end(void* user, const XML_Char*) {
  static_cast<ParseState*>(user)->stack.pop_back();
}

void XMLCALL on_text(void* user, const XML_Char* s, int len) {
  auto* state = static_cast<ParseState*>(user);
  if (!state->stack.empty()) state->stack.back()->text.append(s, static_cast<std::size_t>(len));
}

struct ParserDeleter {
  void operator()(XML_ParserStruct* p) const { XML_ParserFree(p); }
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

void trim_texts(Element& e) {
  e.text = trim(e.text);
  for (auto& c : e.children) trim_texts(c);
}

}  // namespace

Element parse(std::string_view text, std::string_view source) {
  std::unique_ptr<XML_ParserStruct, ParserDeleter> parser(XML_ParserCreate("UTF-8"));
  if (!parser) throw Error(ErrorKind::io, "cannot allocate XML parser");
  ParseState state;
  XML_SetUserData(parser.get(), &state);
  XML_SetElementHandler(parser.get(), on_start, on_end);
  XML_SetCharacterDataHandler(parser.get(), on_text);
  if (XML_Parse(parser.get(), text.data(), static_cast<int>(text.size()), XML_TRUE) ==
      XML_STATUS_ERROR) {
    SourcePosition pos;
    pos.line = XML_GetCurrentLineNumber(parser.get());
    pos.column = XML_GetCurrentColumnNumber(parser.get()) + 1;
    pos.offset = static_cast<std::size_t>(XML_GetCurrentByteIndex(parser.get()));
    throw Error(ErrorKind::parse,
                std::string(source) + ": " + XML_ErrorString(XML_GetErrorCode(parser.get())),
                pos);
  }
  if (!state.have_root) throw Error(ErrorKind::parse, std::string(source) + ": empty document");
  trim_texts(state.root);
  return std::move(state.root);
}

Element parse_file(const std::string& path) { return parse(read_file(path), path); }

std::string escape(std::string_view raw, bool attribute) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (attribute) out += "&quot;"; else out += c;
        break;
      case '\n':
        if (attribute) out += "&#10;"; else out += c;
        break;
      case '\t':
        if (attribute) out += "&#9;"; else out += c;
        break;
      default: out += c;
    }
  }
  return out;
}

namespace {

void write(const Element& e, int depth, std::string& out) {
  const std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
  out += indent;
  out += '<';
  out += e.name;
  for (const auto& [k, v] : e.attributes) {
    out += ' ';
    out += k;
    out += "=\"";
    out += escape(v, true);
    out += '"';
  }
  if (e.children.empty()) {
    if (e.text.empty()) {
      out += "/>\n";
    } else {
      out += '>';
      out += escape(e.text);
      out += "</" + e.name + ">\n";
    }
    return;
  }
  out += ">\n";
  if (!e.text.empty()) {
    out += indent + "  " + escape(e.text) + "\n";
  }
  for (const auto& c : e.children) write(c, depth + 1, out);
  out += indent + "</" + e.name + ">\n";
}

}  // namespace

std::string serialize(const Element& root) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  write(root, 0, out);
  return out;
}

}  // namespace casbench::xml
