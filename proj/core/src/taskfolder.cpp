#include "casbench/taskfolder.hpp"

#include <algorithm>
#include <set>

#include "casbench/error.hpp"
#include "casbench/fsutil.hpp"
#include "casbench/xml.hpp"

namespace casbench {

namespace {

constexpr const char* kTaskInfo = "taskInfo.xml";
constexpr const char* kSettings = "machinesettings.xml";
constexpr const char* kSources = "casSources";

}  // namespace

std::string TaskFolder::invocation_for(const std::string& backend) const {
  if (const auto it = settings.invocation_overrides.find(backend); it != settings.invocation_overrides.end()) {
    return it->second;
  }
  for (const auto& b : backends) {
    if (b.name == backend) return b.invocation;
  }
  throw Error(ErrorKind::not_found, "taskfolder has no backend " + backend);
}

void validate_task(const Task& task) {
  if (!is_table_name(task.name)) {
    throw Error(ErrorKind::validation, "task name '" + task.name + "' is not an identifier");
  }
  if (task.problem.empty()) throw Error(ErrorKind::validation, "task has no computation problem");
  if (task.instances.empty()) throw Error(ErrorKind::validation, "task selects no problem instances");
  if (task.backends.empty()) throw Error(ErrorKind::validation, "task selects no backends");
  std::set<InstanceRef> refs;
  std::map<std::string, std::string> table_of;
  for (const auto& ref : task.instances) {
    if (!refs.insert(ref).second) {
      throw Error(ErrorKind::validation, "instance " + ref.to_string() + " selected twice");
    }
    const auto [it, fresh] = table_of.emplace(ref.name, ref.table);
    if (!fresh) {
      throw Error(ErrorKind::validation, "instances " + it->second + "/" + ref.name + " and " +
                                             ref.to_string() + " would share casSources/" + ref.name);
    }
  }
  std::set<std::string> backends;
  for (const auto& b : task.backends) {
    if (!backends.insert(b).second) throw Error(ErrorKind::validation, "backend " + b + " selected twice");
  }
}

std::filesystem::path script_relative_path(const std::string& instance, const std::string& backend,
                                           const std::string& extension) {
  return std::filesystem::path(kSources) / instance / backend / ("executablefile" + extension);
}

std::string serialize_task(const Task& task, const std::vector<BackendSpec>& backends) {
  xml::Element root{"Task", {{"toolVersion", std::to_string(kTaskFormatVersion)}}, {}, {}};
  root.add_child("name", task.name);
  root.add_child("computationProblem", task.problem);
  auto& instances = root.add_child("problemInstances");
  for (const auto& ref : task.instances) {
    instances.add_child("instance", ref.name).set_attribute("table", ref.table);
  }
  auto& systems = root.add_child("computerAlgebraSystems");
  for (const auto& b : backends) {
    systems.add_child("cas", b.name)
        .set_attribute("invocation", b.invocation)
        .set_attribute("extension", b.extension);
  }
  return xml::serialize(root);
}

std::string serialize_settings(const MachineSettings& settings) {
  xml::Element root{"MachineSettings", {}, {}, {}};
  root.add_child("timeCommand", settings.time_command);
  auto& inv = root.add_child("invocations");
  for (const auto& [name, command] : settings.invocation_overrides) {
    inv.add_child("cas", command).set_attribute("name", name);
  }
  auto& env = root.add_child("environment");
  for (const auto& [name, value] : settings.environment) {
    env.add_child("var", value).set_attribute("name", name);
  }
  return xml::serialize(root);
}

TaskFolder build_taskfolder(const Task& task, const MachineSettings& settings, const Registry& registry,
                            const std::vector<SDTable>& tables, const std::filesystem::path& out) {
  try {
    validate_task(task);
  } catch (const Error& e) {
    throw Error(ErrorKind::build, e.reason());
  }
  for (const auto& [name, command] : settings.invocation_overrides) {
    validate_invocation(command, "machine settings for " + name);
  }
  std::error_code ec;
  if (fs::exists(out, ec) && !(fs::is_directory(out, ec) && fs::is_empty(out, ec))) {
    throw Error(ErrorKind::conflict, "refusing to write into non-empty " + out.string());
  }

  const ComputationProblem* problem = registry.find_problem(task.problem);
  if (problem == nullptr) throw Error(ErrorKind::build, "unknown computation problem '" + task.problem + "'");

  TaskFolder folder;
  folder.task = task;
  folder.settings = settings;
  std::vector<const Backend*> backends;
  for (const auto& name : task.backends) {
    const Backend* b = registry.find_backend(name);
    if (b == nullptr) throw Error(ErrorKind::build, "unknown backend '" + name + "'");
    if (!b->templates.contains(problem->name)) {
      throw Error(ErrorKind::build, "backend '" + name + "' has no template for " + problem->name);
    }
    backends.push_back(b);
    folder.backends.push_back(BackendSpec{b->name, b->invocation, b->script_extension});
  }

  struct Pending {
    fs::path path;
    std::string content;
  };
  std::vector<Pending> files;
  files.push_back({kTaskInfo, serialize_task(task, folder.backends)});
  files.push_back({kSettings, serialize_settings(settings)});
  for (const auto& ref : task.instances) {
    const SDTable* table = find_table(tables, ref.table);
    if (table == nullptr) throw Error(ErrorKind::build, "unknown SD-Table '" + ref.table + "'");
    if (!table->entries.contains(ref.name)) {
      throw Error(ErrorKind::build, "unknown problem instance '" + ref.to_string() + "'");
    }
    if (std::find(problem->compatible_tables.begin(), problem->compatible_tables.end(), ref.table) ==
        problem->compatible_tables.end()) {
      throw Error(ErrorKind::build, "instance '" + ref.to_string() + "' is not suitable for " + problem->name);
    }
    const ProblemInstance instance = load_instance(*table, ref.name);
    for (const Backend* b : backends) {
      const fs::path rel = script_relative_path(ref.name, b->name, b->script_extension);
      files.push_back({rel, render_script(*problem, instance, *b)});
      folder.scripts.push_back(ScriptEntry{ref, b->name, rel});
    }
  }

  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + out.string() + ": " + ec.message());
  folder.root = fs::absolute(out);
  for (const auto& f : files) {
    const fs::path target = folder.root / f.path;
    fs::create_directories(target.parent_path());
    write_file_atomic(target, f.content);
  }
  for (auto& s : folder.scripts) {
    fs::permissions(folder.root / s.script,
                    fs::perms::owner_exec | fs::perms::group_exec | fs::perms::others_exec,
                    fs::perm_options::add, ec);
    s.script = folder.root / s.script;
  }
  return folder;
}

namespace {

const xml::Element& require(const xml::Element& parent, std::string_view name, const std::string& source) {
  if (const auto* c = parent.child(name)) return *c;
  throw Error(ErrorKind::parse, source + ": missing <" + std::string(name) + ">");
}

}  // namespace

TaskFolder load_taskfolder(const std::filesystem::path& root) {
  TaskFolder folder;
  folder.root = fs::absolute(root);
  const fs::path info_path = folder.root / kTaskInfo;
  const fs::path settings_path = folder.root / kSettings;
  if (!fs::is_regular_file(info_path)) {
    throw Error(ErrorKind::io, "not a taskfolder: " + info_path.string() + " is missing");
  }
  if (!fs::is_regular_file(settings_path)) {
    throw Error(ErrorKind::io, "not a taskfolder: " + settings_path.string() + " is missing");
  }

  const xml::Element info = xml::parse_file(info_path.string());
  const std::string src = info_path.string();
  if (info.name != "Task") throw Error(ErrorKind::parse, src + ": root element must be <Task>");
  if (const auto v = info.attribute("toolVersion"); v && *v != std::to_string(kTaskFormatVersion)) {
    throw Error(ErrorKind::unsupported, src + ": descriptor format version " + *v + " is not supported");
  }
  folder.task.name = require(info, "name", src).text;
  folder.task.problem = require(info, "computationProblem", src).text;
  for (const auto* inst : require(info, "problemInstances", src).children_named("instance")) {
    const auto table = inst->attribute("table");
    if (!table) throw Error(ErrorKind::parse, src + ": <instance> without table attribute");
    folder.task.instances.push_back(InstanceRef{*table, inst->text});
  }
  for (const auto* cas : require(info, "computerAlgebraSystems", src).children_named("cas")) {
    BackendSpec spec{cas->text, cas->attribute("invocation").value_or("{script}"),
                     cas->attribute("extension").value_or(".sdc")};
    validate_invocation(spec.invocation, "taskInfo.xml backend " + spec.name);
    folder.task.backends.push_back(spec.name);
    folder.backends.push_back(std::move(spec));
  }
  validate_task(folder.task);

  const xml::Element settings = xml::parse_file(settings_path.string());
  const std::string ssrc = settings_path.string();
  if (settings.name != "MachineSettings") {
    throw Error(ErrorKind::parse, ssrc + ": root element must be <MachineSettings>");
  }
  if (const auto* tc = settings.child("timeCommand")) folder.settings.time_command = tc->text;
  if (const auto* inv = settings.child("invocations")) {
    for (const auto* cas : inv->children_named("cas")) {
      const auto name = cas->attribute("name");
      if (!name) throw Error(ErrorKind::parse, ssrc + ": <cas> without name attribute");
      validate_invocation(cas->text, "machine settings for " + *name);
      folder.settings.invocation_overrides[*name] = cas->text;
    }
  }
  if (const auto* env = settings.child("environment")) {
    for (const auto* var : env->children_named("var")) {
      const auto name = var->attribute("name");
      if (!name) throw Error(ErrorKind::parse, ssrc + ": <var> without name attribute");
      folder.settings.environment[*name] = var->text;
    }
  }

  for (const auto& ref : folder.task.instances) {
    for (const auto& b : folder.backends) {
      const fs::path script = folder.root / script_relative_path(ref.name, b.name, b.extension);
      if (!fs::is_regular_file(script)) {
        throw Error(ErrorKind::integrity,
                    "script for " + ref.name + "/" + b.name + " is missing (" + script.string() + ")");
      }
      folder.scripts.push_back(ScriptEntry{ref, b.name, script});
    }
  }
  return folder;
}

}  // namespace casbench
