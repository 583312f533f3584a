#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace casbench {

/// One SD-Table: a directory of `<Instance>.xml` resource files.
struct SDTable {
  std::string name;
  std::filesystem::path root;
  std::map<std::string, std::filesystem::path> entries;

  bool operator==(const SDTable&) const = default;
};

/// (table, instance-name) pair; ordered table-major.
struct InstanceRef {
  std::string table;
  std::string name;

  auto operator<=>(const InstanceRef&) const = default;
  std::string to_string() const { return table + "/" + name; }
};

/// Parses "Table/Name".
InstanceRef parse_instance_ref(std::string_view text);

struct ProblemInstance {
  std::string name;
  std::string table;
  std::vector<std::string> variables;
  std::vector<std::string> basis;
  /// Free metadata, in file order. Values are never interpreted.
  std::vector<std::pair<std::string, std::string>> attributes;

  bool operator==(const ProblemInstance&) const = default;
};

bool is_table_name(std::string_view s);

/// One table per immediate subdirectory of `root` holding at least one
/// `.xml` file; tables and entries sorted by name.
std::vector<SDTable> scan_tables(const std::filesystem::path& root);

const SDTable* find_table(const std::vector<SDTable>& tables, std::string_view name);

ProblemInstance load_instance(const SDTable& table, std::string_view name);

/// Parses resource markup; `source` is used in error messages.
ProblemInstance parse_instance(std::string_view xml_text, std::string name, std::string table,
                               std::string_view source = "<instance>");

std::string serialize_instance(const ProblemInstance& instance);

/// Checks the ProblemInstance invariants, throwing Error{validation}.
void validate_instance(const ProblemInstance& instance);

}  // namespace casbench
