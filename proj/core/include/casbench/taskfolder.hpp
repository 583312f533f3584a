#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "casbench/registry.hpp"
#include "casbench/resources.hpp"

namespace casbench {

/// Descriptor format stamp written to taskInfo.xml.
inline constexpr int kTaskFormatVersion = 1;

struct Task {
  std::string name;
  std::string problem;
  std::vector<InstanceRef> instances;
  std::vector<std::string> backends;

  bool operator==(const Task&) const = default;
};

struct MachineSettings {
  /// Empty disables the external time wrapper.
  std::string time_command = "time";
  std::map<std::string, std::string> invocation_overrides;
  std::map<std::string, std::string> environment;

  bool operator==(const MachineSettings&) const = default;
};

/// Backend facts recorded in the bundle so it runs without the registry.
struct BackendSpec {
  std::string name;
  std::string invocation;
  std::string extension;

  bool operator==(const BackendSpec&) const = default;
};

struct ScriptEntry {
  InstanceRef instance;
  std::string backend;
  std::filesystem::path script;

  std::string job_id() const { return instance.name + "/" + backend; }
};

/// A built or loaded taskfolder. `scripts` is instance-major, then backend,
/// both in Task order.
struct TaskFolder {
  std::filesystem::path root;
  Task task;
  MachineSettings settings;
  std::vector<BackendSpec> backends;
  std::vector<ScriptEntry> scripts;

  /// Override from machine settings, else the recorded backend invocation.
  std::string invocation_for(const std::string& backend) const;
};

/// Throws Error{validation} when the Task invariants fail.
void validate_task(const Task& task);

std::filesystem::path script_relative_path(const std::string& instance, const std::string& backend,
                                           const std::string& extension);

/// Renders every (instance, backend) script and writes the bundle into
/// `out`, which must be absent or empty (Error{conflict} otherwise).
/// Unresolvable references raise Error{build}. Nothing is written unless
/// every script renders.
TaskFolder build_taskfolder(const Task& task, const MachineSettings& settings, const Registry& registry,
                            const std::vector<SDTable>& tables, const std::filesystem::path& out);

/// Loads a bundle. Missing descriptor files raise Error{io}; a script that
/// the descriptor implies but the disk lacks raises Error{integrity}.
TaskFolder load_taskfolder(const std::filesystem::path& root);

std::string serialize_task(const Task& task, const std::vector<BackendSpec>& backends);
std::string serialize_settings(const MachineSettings& settings);

}  // namespace casbench
