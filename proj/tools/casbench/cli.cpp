#include "cli.hpp"

#include <sys/utsname.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "casbench/control.hpp"
#include "casbench/error.hpp"
#include "casbench/fsutil.hpp"
#include "casbench/metastore.hpp"
#include "casbench/registry.hpp"
#include "casbench/reporting.hpp"
#include "casbench/resources.hpp"
#include "casbench/runner.hpp"
#include "casbench/taskfolder.hpp"

namespace casbench::cli {
namespace {

using nlohmann::json;

constexpr const char* kDefaultConfig = "casbench.json";

struct Config {
  std::optional<fs::path> resources;
  std::vector<fs::path> registries;
  std::optional<fs::path> metadata;
  RunLimits limits;
  bool builtin_registry = true;
  bool verbose = false;
};

DecimalSeconds seconds_value(const json& j, const std::string& key) {
  const std::string text = j.is_string() ? j.get<std::string>() : j.dump();
  const auto v = parse_seconds(text);
  if (!v) throw Error(ErrorKind::config, "config: " + key + " is not a non-negative number of seconds");
  return *v;
}

Config load_config(const std::optional<fs::path>& explicit_path) {
  Config config;
  fs::path path = explicit_path.value_or(kDefaultConfig);
  if (!fs::exists(path)) {
    if (explicit_path) throw Error(ErrorKind::config, "config file " + path.string() + " does not exist");
    return config;
  }
  try {
    const json doc = json::parse(read_file(path));
    if (doc.contains("resources")) config.resources = doc.at("resources").get<std::string>();
    for (const auto& r : doc.value("registries", json::array())) config.registries.emplace_back(r.get<std::string>());
    if (doc.contains("metadata")) config.metadata = doc.at("metadata").get<std::string>();
    config.builtin_registry = doc.value("builtin_registry", true);
    config.verbose = doc.value("verbose", false);
    if (doc.contains("limits")) {
      const auto& l = doc.at("limits");
      if (l.contains("time")) config.limits.wall = seconds_value(l.at("time"), "limits.time");
      if (l.contains("memory_mb")) config.limits.memory_bytes = l.at("memory_mb").get<std::uint64_t>() << 20;
      if (l.contains("grace")) config.limits.grace = seconds_value(l.at("grace"), "limits.grace");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, path.string() + ": " + e.what());
  }
  return config;
}

fs::path data_dir() {
  if (const char* env = std::getenv("CASBENCH_DATA_DIR"); env && *env) return env;
  const fs::path installed = CASBENCH_INSTALLED_DATA_DIR;
  if (fs::exists(installed / "registry.json")) return installed;
  return CASBENCH_SOURCE_DATA_DIR;
}

Registry load_registry(const Config& config) {
  Registry registry;
  if (config.builtin_registry) {
    const auto builtin = data_dir() / "registry.json";
    if (fs::exists(builtin)) {
      registry.load_file(builtin);
    } else if (config.registries.empty()) {
      throw Error(ErrorKind::config, "no registry: " + builtin.string() + " is missing and none is configured");
    }
  }
  for (const auto& path : config.registries) registry.load_file(path);
  return registry;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

TripleStore load_metadata(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::not_found, "metadata file " + path.string() + " does not exist");
  try {
    return parse_turtle(read_file(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.reason(), e.position().value_or(SourcePosition{}));
  }
}

/// Instances selected by "<predicate> <op> <integer>". The predicate is
/// matched on its IRI local name; a subject names an instance through its
/// own local name and its rdf:type local name (the table).
std::vector<InstanceRef> instances_matching(const TripleStore& store, std::string_view expression,
                                            const std::vector<SDTable>& tables) {
  const auto op = expression.find_first_of("<>=");
  if (op == std::string_view::npos) {
    throw Error(ErrorKind::query, "query expression needs a comparison: " + std::string(expression));
  }
  std::string predicate(expression.substr(0, op));
  predicate.erase(0, predicate.find_first_not_of(" \t"));
  predicate.erase(predicate.find_last_not_of(" \t") + 1);
  if (predicate.empty()) throw Error(ErrorKind::query, "query expression lacks a predicate name");
  if (const auto colon = predicate.rfind(':'); colon != std::string::npos) predicate.erase(0, colon + 1);

  const NumericFilter filter = parse_filter("?v " + std::string(expression.substr(op)));
  const TriplePattern pattern{Variable{"s"}, Variable{"p"}, Variable{"v"}};
  const Term type = Term::iri(std::string(kRdfType));
  std::set<InstanceRef> found;
  for (const auto& binding : query(store, {pattern}, {filter})) {
    if (local_name(binding.at("p").value) != predicate) continue;
    const Term& subject = binding.at("s");
    const std::string name(local_name(subject.value));
    for (const Triple* t : store.match(&subject, &type, nullptr)) {
      const std::string table(local_name(t->object.value));
      if (const SDTable* sd = find_table(tables, table); sd && sd->entries.contains(name)) {
        found.insert(InstanceRef{table, name});
      }
    }
  }
  return {found.begin(), found.end()};
}

std::string prompt(std::istream& in, std::ostream& out, const std::string& label) {
  out << label << "> " << std::flush;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::config, "interactive input ended at '" + label + "'");
  line.erase(0, line.find_first_not_of(" \t"));
  line.erase(line.find_last_not_of(" \t\r") + 1);
  return line;
}

/// Accepts 1-based numbers or names; "all" picks everything.
std::vector<std::string> pick(const std::vector<std::string>& options, const std::string& answer, bool single) {
  if (answer == "all" && !single) return options;
  std::vector<std::string> chosen;
  for (const auto& token : split_list(answer)) {
    std::string value = token;
    if (std::all_of(token.begin(), token.end(), [](unsigned char c) { return std::isdigit(c); })) {
      const auto index = std::stoul(token);
      if (index == 0 || index > options.size()) {
        throw Error(ErrorKind::validation, "choice " + token + " is out of range 1.." + std::to_string(options.size()));
      }
      value = options[index - 1];
    }
    if (std::find(chosen.begin(), chosen.end(), value) == chosen.end()) chosen.push_back(value);
  }
  if (chosen.empty()) throw Error(ErrorKind::validation, "nothing selected");
  if (single && chosen.size() != 1) throw Error(ErrorKind::validation, "choose exactly one");
  return chosen;
}

void list_options(std::ostream& out, const std::vector<std::string>& options) {
  for (std::size_t i = 0; i < options.size(); ++i) out << "  " << (i + 1) << ") " << options[i] << "\n";
}

struct CreateArgs {
  std::optional<std::string> problem;
  std::vector<std::string> instances;
  std::vector<std::string> backends;
  std::optional<std::string> out;
  std::optional<std::string> name;
  std::optional<std::string> query;
  std::optional<std::string> time_command;
  bool interactive = false;
};

int cmd_create(const CreateArgs& args, const Config& config, std::istream& in, std::ostream& out) {
  if (!config.resources) {
    throw Error(ErrorKind::config, "create needs a resource root (--resources or \"resources\" in the config)");
  }
  const auto tables = scan_tables(*config.resources);
  const Registry registry = load_registry(config);

  std::string problem;
  if (args.problem) {
    problem = *args.problem;
  } else if (args.interactive) {
    out << "Step 1/3: computation problem\n";
    list_options(out, registry.problem_names());
    problem = pick(registry.problem_names(), prompt(in, out, "problem"), true).front();
  } else {
    throw Error(ErrorKind::validation, "--problem is required (or use --interactive)");
  }
  registry.problem(problem);  // not_found lists the registered problems

  std::vector<InstanceRef> candidates = list_suitable_instances(registry, problem, tables);
  if (args.query) {
    if (!config.metadata) throw Error(ErrorKind::config, "--query needs --metadata (or \"metadata\" in the config)");
    const auto matched = instances_matching(load_metadata(*config.metadata), *args.query, tables);
    std::vector<InstanceRef> kept;
    for (const auto& ref : candidates) {
      if (std::find(matched.begin(), matched.end(), ref) != matched.end()) kept.push_back(ref);
    }
    if (kept.empty()) throw Error(ErrorKind::not_found, "no instances matched \"" + *args.query + "\"");
    candidates = std::move(kept);
  }

  std::vector<InstanceRef> instances;
  if (!args.instances.empty()) {
    for (const auto& text : args.instances) {
      const InstanceRef ref = parse_instance_ref(text);
      if (args.query && std::find(candidates.begin(), candidates.end(), ref) == candidates.end()) continue;
      instances.push_back(ref);
    }
    if (instances.empty()) throw Error(ErrorKind::not_found, "no instances matched \"" + *args.query + "\"");
  } else if (args.query && !args.interactive) {
    instances = candidates;
  } else if (args.interactive) {
    std::vector<std::string> names;
    for (const auto& ref : candidates) names.push_back(ref.to_string());
    if (names.empty()) throw Error(ErrorKind::not_found, "no suitable instances for " + problem);
    out << "Step 2/3: instances (numbers or names, comma-separated, or 'all')\n";
    list_options(out, names);
    for (const auto& chosen : pick(names, prompt(in, out, "instances"), false)) {
      instances.push_back(parse_instance_ref(chosen));
    }
  } else {
    throw Error(ErrorKind::validation, "--instances is required (or use --query or --interactive)");
  }

  std::vector<std::string> backends = args.backends;
  MachineSettings settings;
  if (args.time_command) settings.time_command = *args.time_command;
  std::string out_dir = args.out.value_or("");
  if (backends.empty()) {
    if (!args.interactive) throw Error(ErrorKind::validation, "--backends is required (or use --interactive)");
    const auto names = registry.backends_for(problem);
    if (names.empty()) throw Error(ErrorKind::not_found, "no backend has a template for " + problem);
    out << "Step 3/3: backends and settings\n";
    list_options(out, names);
    backends = pick(names, prompt(in, out, "backends"), false);
    if (!args.time_command) {
      const auto answer = prompt(in, out, "time command [" + settings.time_command + "]");
      if (!answer.empty()) settings.time_command = answer == "none" ? "" : answer;
    }
  }
  if (out_dir.empty()) {
    if (!args.interactive) throw Error(ErrorKind::validation, "--out is required");
    out_dir = prompt(in, out, "output folder");
    if (out_dir.empty()) throw Error(ErrorKind::validation, "an output folder is required");
  }

  Task task;
  task.name = args.name.value_or(fs::path(out_dir).lexically_normal().filename().string());
  if (task.name.empty()) task.name = problem;
  task.problem = problem;
  task.instances = std::move(instances);
  task.backends = std::move(backends);
  const TaskFolder folder = build_taskfolder(task, settings, registry, tables, out_dir);
  out << "created " << folder.root.string() << " with " << folder.scripts.size() << " scripts\n";
  return kExitOk;
}

struct RunArgs {
  std::string folder;
  std::optional<std::string> time_limit;
  std::optional<std::uint64_t> mem_limit_mb;
  std::optional<std::string> grace;
  std::optional<std::string> resume;
  std::optional<std::string> results_root;
  unsigned jobs = 1;
  bool verify = false;
};

std::string machine_description() {
  utsname u{};
  if (uname(&u) != 0) return "unknown";
  std::ostringstream os;
  os << u.nodename << " (" << u.sysname << " " << u.release << " " << u.machine << ", "
     << sysconf(_SC_NPROCESSORS_ONLN) << " cpus)";
  return os.str();
}

DecimalSeconds seconds_flag(const std::string& text, const char* flag) {
  const auto v = parse_seconds(text);
  if (!v) throw Error(ErrorKind::validation, std::string(flag) + " expects seconds, got '" + text + "'");
  return *v;
}

int cmd_run(const RunArgs& args, const Config& config, std::ostream& out, std::ostream& err) {
  TaskFolder folder;
  try {
    folder = load_taskfolder(args.folder);
  } catch (const Error& e) {
    // An unloadable bundle is a usage-level failure (exit 2), never an io one.
    throw Error(e.kind() == ErrorKind::io ? ErrorKind::not_found : e.kind(), e.reason());
  }

  RunOptions options;
  options.limits = config.limits;
  if (args.time_limit) options.limits.wall = seconds_flag(*args.time_limit, "--time-limit");
  if (args.mem_limit_mb) options.limits.memory_bytes = *args.mem_limit_mb << 20;
  if (args.grace) options.limits.grace = seconds_flag(*args.grace, "--grace");
  if (options.limits.wall && options.limits.wall->micros == 0) {
    throw Error(ErrorKind::validation, "--time-limit must be positive");
  }
  if (args.jobs == 0) throw Error(ErrorKind::validation, "--jobs must be at least 1");
  options.workers = args.jobs;
  if (args.results_root) options.results_root = fs::path(*args.results_root);
  options.machine = machine_description();
  options.interrupts = true;
  options.log = [&err](std::string_view line) { err << line << "\n" << std::flush; };
  if (args.verify) {
    const Registry registry = load_registry(config);
    if (const Verifier* v = registry.verifier_for(folder.task.problem)) {
      options.verifier = *v;
      options.resource_root = config.resources;
    } else {
      err << "no verifier registered for " << folder.task.problem << "; verdicts stay unchecked\n";
    }
  }

  ControlChannel control;
  ControlChannel::install_interrupt_handler();
  RunOutcome outcome;
  try {
    outcome = args.resume ? resume(folder, *args.resume, options, control) : run_all(folder, options, control);
  } catch (...) {
    ControlChannel::restore_interrupt_handler();
    throw;
  }
  ControlChannel::restore_interrupt_handler();

  out << outcome.results_dir.string() << "\n";
  if (outcome.aborted) {
    err << "run aborted; continue with --resume " << outcome.results_dir.string() << "\n";
    return kExitAborted;
  }
  const bool all_terminal = std::all_of(outcome.results.begin(), outcome.results.end(),
                                        [](const JobResult& r) { return is_terminal(r.status); });
  return all_terminal ? kExitOk : kExitFailure;
}

struct QueryArgs {
  std::vector<std::string> patterns;
  std::vector<std::string> filters;
};

std::string display(const Term& term) {
  return term.is_iri() ? "<" + term.value + ">" : term.value;
}

int cmd_query(const QueryArgs& args, const Config& config, std::ostream& out) {
  if (!config.metadata) throw Error(ErrorKind::config, "query needs --metadata (or \"metadata\" in the config)");
  if (args.patterns.empty()) throw Error(ErrorKind::query, "at least one --pattern is required");
  const TripleStore store = load_metadata(*config.metadata);
  std::vector<TriplePattern> patterns;
  for (const auto& p : args.patterns) patterns.push_back(parse_pattern(p, store.prefixes()));
  std::vector<NumericFilter> filters;
  for (const auto& f : args.filters) filters.push_back(parse_filter(f));
  const auto vars = pattern_variables(patterns);
  for (const auto& binding : query(store, patterns, filters)) {
    std::string line;
    for (const auto& v : vars) {
      if (!line.empty()) line += '\t';
      line += display(binding.at(v));
    }
    out << line << "\n";
  }
  return kExitOk;
}

struct ReportArgs {
  std::vector<std::string> results;
  bool html = false;
  bool timings = false;
  std::optional<std::string> out;
};

fs::path results_xml_path(const fs::path& p) {
  return fs::is_directory(p) ? p / "results.xml" : p;
}

int cmd_report(const ReportArgs& args, std::ostream& out) {
  const bool html = args.html || !args.timings;
  const bool timings = args.timings || !args.html;
  std::vector<RunReport> reports;
  for (const auto& r : args.results) {
    const auto path = results_xml_path(r);
    if (!fs::exists(path)) throw Error(ErrorKind::not_found, "no results file at " + path.string());
    reports.push_back(read_results_xml(path));
  }
  if (html) {
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const auto target = results_xml_path(args.results[i]).parent_path() / "index.html";
      write_results_html(reports[i], target);
      out << "wrote " << target.string() << "\n";
    }
  }
  if (timings) {
    const auto target = args.out ? fs::path(*args.out)
                                 : results_xml_path(args.results.front()).parent_path() / "timings.csv";
    write_file_atomic(target, to_csv(timings_table(reports)));
    out << "wrote " << target.string() << "\n";
  }
  return kExitOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::conflict:
      return kExitConflict;
    case ErrorKind::not_found:
    case ErrorKind::build:
    case ErrorKind::validation:
    case ErrorKind::parse:
    case ErrorKind::config:
    case ErrorKind::query:
    case ErrorKind::resolution:
    case ErrorKind::unsupported:
    case ErrorKind::render:
    case ErrorKind::integrity:
      return kExitUsage;
    case ErrorKind::io:
      return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Benchmark suite compiler and supervised runner for computer-algebra problem instances",
               "casbench"};
  app.set_version_flag("--version", CASBENCH_VERSION);
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  std::optional<std::string> resources;
  std::optional<std::string> metadata;
  std::vector<std::string> registries;
  bool no_builtin = false;
  app.add_option("--config", config_path, "Config file (default ./casbench.json when present)");

  auto add_registry_options = [&](CLI::App* sub) {
    sub->add_option("--registry", registries, "Extra registry file (repeatable)");
    sub->add_flag("--no-builtin-registry", no_builtin, "Skip the registry shipped with casbench");
  };

  CreateArgs create;
  auto* create_cmd = app.add_subcommand("create", "Build a taskfolder");
  create_cmd->add_option("--resources", resources, "Resource root holding the SD-Tables");
  create_cmd->add_option("--metadata", metadata, "Turtle metadata file used by --query");
  create_cmd->add_option("--problem", create.problem, "Computation problem");
  create_cmd->add_option("--instances", create.instances, "Instances as Table/Name")->delimiter(',');
  create_cmd->add_option("--backends", create.backends, "Backends")->delimiter(',');
  create_cmd->add_option("--out", create.out, "Taskfolder to create");
  create_cmd->add_option("--name", create.name, "Task name (default: the folder name)");
  create_cmd->add_option("--query", create.query, "Preselect instances, e.g. \"hasDegree <= 36\"");
  create_cmd->add_option("--time-command", create.time_command, "Time command recorded in machinesettings.xml");
  create_cmd->add_flag("--interactive,-i", create.interactive, "Three-step dialog on the terminal");
  add_registry_options(create_cmd);

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run every script of a taskfolder");
  run_cmd->add_option("taskfolder", run_args.folder, "Taskfolder")->required();
  run_cmd->add_option("--time-limit", run_args.time_limit, "Wall-clock limit per job, seconds");
  run_cmd->add_option("--mem-limit", run_args.mem_limit_mb, "Resident memory limit per job, MB");
  run_cmd->add_option("--grace", run_args.grace, "Seconds between SIGTERM and SIGKILL (default 5)");
  run_cmd->add_option("--resume", run_args.resume, "Continue the run in this results directory");
  run_cmd->add_option("--jobs", run_args.jobs, "Concurrent jobs (default 1)");
  run_cmd->add_option("--results-root", run_args.results_root, "Parent of the results directory");
  run_cmd->add_flag("--verify", run_args.verify, "Check outputs with the problem's registered verifier");
  add_registry_options(run_cmd);

  QueryArgs query_args;
  auto* query_cmd = app.add_subcommand("query", "Query Turtle metadata");
  query_cmd->add_option("--metadata", metadata, "Turtle file");
  query_cmd->add_option("--pattern,-p", query_args.patterns, "Triple pattern, e.g. \"?s sd:hasDegree ?d\"");
  query_cmd->add_option("--filter,-f", query_args.filters, "Numeric filter, e.g. \"?d <= 36\"");

  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "Regenerate index.html and timings.csv");
  report_cmd->add_option("results", report_args.results, "Results directories or results.xml files")
      ->required();
  report_cmd->add_flag("--html", report_args.html, "Regenerate index.html");
  report_cmd->add_flag("--timings", report_args.timings, "Write timings.csv");
  report_cmd->add_option("--out", report_args.out, "Where to write timings.csv");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "error: usage: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    Config config = load_config(config_path ? std::optional<fs::path>(*config_path) : std::nullopt);
    if (resources) config.resources = *resources;
    if (metadata) config.metadata = *metadata;
    for (const auto& r : registries) config.registries.emplace_back(r);
    if (no_builtin) config.builtin_registry = false;

    if (*create_cmd) return cmd_create(create, config, in, out);
    if (*run_cmd) return cmd_run(run_args, config, out, err);
    if (*query_cmd) return cmd_query(query_args, config, out);
    if (*report_cmd) return cmd_report(report_args, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

int main(int argc, char** argv, std::istream& in, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, in, out, err);
}

}  // namespace casbench::cli
