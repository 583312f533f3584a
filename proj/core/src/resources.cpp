#include "casbench/resources.hpp"

#include <algorithm>
#include <set>

#include "casbench/error.hpp"
#include "casbench/fsutil.hpp"
#include "casbench/polynomial.hpp"
#include "casbench/xml.hpp"

namespace casbench {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_commas(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

bool is_table_name(std::string_view s) {
  if (s.empty()) return false;
  const auto alpha = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); };
  if (!alpha(s.front())) return false;
  return std::all_of(s.begin(), s.end(),
                     [&](char c) { return alpha(c) || (c >= '0' && c <= '9') || c == '_'; });
}

InstanceRef parse_instance_ref(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos || slash == 0 || slash + 1 == text.size()) {
    throw Error(ErrorKind::validation,
                "instance reference '" + std::string(text) + "' is not of the form Table/Name");
  }
  return InstanceRef{trim(text.substr(0, slash)), trim(text.substr(slash + 1))};
}

std::vector<SDTable> scan_tables(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorKind::config, "resource root '" + root.string() + "' is not a readable directory");
  }
  std::vector<SDTable> tables;
  fs::directory_iterator it(root, ec);
  if (ec) throw Error(ErrorKind::config, "cannot read resource root '" + root.string() + "'");
  for (const auto& dir : it) {
    if (!dir.is_directory()) continue;
    const std::string name = dir.path().filename().string();
    if (!is_table_name(name)) continue;
    SDTable table{name, dir.path(), {}};
    for (const auto& file : fs::directory_iterator(dir.path())) {
      if (!file.is_regular_file() || file.path().extension() != ".xml") continue;
      table.entries.emplace(file.path().stem().string(), file.path());
    }
    if (!table.entries.empty()) tables.push_back(std::move(table));
  }
  std::sort(tables.begin(), tables.end(),
            [](const SDTable& a, const SDTable& b) { return a.name < b.name; });
  return tables;
}

const SDTable* find_table(const std::vector<SDTable>& tables, std::string_view name) {
  for (const auto& t : tables) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void validate_instance(const ProblemInstance& instance) {
  const std::string who = instance.table + "/" + instance.name;
  if (instance.variables.empty()) {
    throw Error(ErrorKind::validation, who + ": no variables declared");
  }
  std::set<std::string> seen;
  for (const auto& v : instance.variables) {
    if (!is_identifier(v)) {
      throw Error(ErrorKind::validation, who + ": invalid variable name '" + v + "'");
    }
    if (!seen.insert(v).second) {
      throw Error(ErrorKind::validation, who + ": duplicate variable '" + v + "'");
    }
  }
  if (instance.basis.empty()) {
    throw Error(ErrorKind::validation, who + ": empty basis");
  }
  for (const auto& p : instance.basis) {
    try {
      parse_polynomial(p, instance.variables);
    } catch (const Error& e) {
      throw Error(e.kind(), who + ": " + e.reason());
    }
  }
}

ProblemInstance parse_instance(std::string_view xml_text, std::string name, std::string table,
                               std::string_view source) {
  const xml::Element root = xml::parse(xml_text, source);
  const std::string src(source);
  if (root.name != "Instance") {
    throw Error(ErrorKind::parse, src + ": root element must be <Instance>, found <" + root.name + ">");
  }
  ProblemInstance inst;
  inst.name = std::move(name);
  inst.table = std::move(table);
  bool have_vars = false;
  bool have_basis = false;
  std::set<std::string> attribute_names;
  for (const auto& child : root.children) {
    if (child.name == "vars") {
      if (have_vars) throw Error(ErrorKind::validation, src + ": duplicate <vars>");
      have_vars = true;
      if (!child.text.empty()) inst.variables = split_commas(child.text);
    } else if (child.name == "basis") {
      if (have_basis) throw Error(ErrorKind::validation, src + ": duplicate <basis>");
      have_basis = true;
      for (const auto& poly : child.children) {
        if (poly.name != "poly") {
          throw Error(ErrorKind::validation, src + ": unexpected <" + poly.name + "> inside <basis>");
        }
        inst.basis.push_back(poly.text);
      }
    } else {
      if (!child.children.empty()) {
        throw Error(ErrorKind::validation,
                    src + ": attribute element <" + child.name + "> must not have children");
      }
      if (!attribute_names.insert(child.name).second) {
        throw Error(ErrorKind::validation, src + ": duplicate attribute <" + child.name + ">");
      }
      inst.attributes.emplace_back(child.name, child.text);
    }
  }
  if (!have_vars) throw Error(ErrorKind::validation, src + ": missing <vars>");
  if (!have_basis) throw Error(ErrorKind::validation, src + ": missing <basis>");
  validate_instance(inst);
  return inst;
}

ProblemInstance load_instance(const SDTable& table, std::string_view name) {
  const auto it = table.entries.find(std::string(name));
  if (it == table.entries.end()) {
    throw Error(ErrorKind::not_found,
                "no instance '" + std::string(name) + "' in SD-Table " + table.name);
  }
  return parse_instance(read_file(it->second), it->first, table.name, it->second.string());
}

std::string serialize_instance(const ProblemInstance& instance) {
  xml::Element root{"Instance", {}, {}, {}};
  std::string vars;
  for (std::size_t i = 0; i < instance.variables.size(); ++i) {
    if (i > 0) vars += ',';
    vars += instance.variables[i];
  }
  root.add_child("vars", vars);
  auto& basis = root.add_child("basis");
  for (const auto& p : instance.basis) basis.add_child("poly", p);
  for (const auto& [k, v] : instance.attributes) root.add_child(k, v);
  return xml::serialize(root);
}

}  // namespace casbench
