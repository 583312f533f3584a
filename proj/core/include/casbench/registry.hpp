#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "casbench/resources.hpp"

namespace casbench {

struct ComputationProblem {
  std::string name;
  std::vector<std::string> compatible_tables;
  std::map<std::string, std::string> parameters;

  bool operator==(const ComputationProblem&) const = default;
};

/// An external solver system. `invocation` holds `{script}` exactly once;
/// `templates` maps computation-problem name to template body.
struct Backend {
  std::string name;
  std::string invocation;
  std::string script_extension = ".sdc";
  std::map<std::string, std::string> templates;

  bool operator==(const Backend&) const = default;
};

/// Decision routine for one computation problem. `command` may use
/// `{instance}` and `{output}`; exit 0 accepts, 1 rejects, anything else
/// leaves the job unchecked.
struct Verifier {
  std::string problem;
  std::string command;

  bool operator==(const Verifier&) const = default;
};

/// Throws Error{validation} unless `invocation` contains `{script}` once.
void validate_invocation(std::string_view invocation, std::string_view owner);

/// Throws Error{validation} if the template uses a placeholder outside
/// `$vars$`, `$basis$`, `$name$`, `$param:<key>$`.
void validate_template(std::string_view body, std::string_view owner);

/// Placeholder tokens (including the dollar signs) present in `text`.
std::vector<std::string> find_placeholders(std::string_view text);

class Registry {
 public:
  /// Throws Error{conflict} if the name is taken.
  void register_problem(ComputationProblem problem);
  void register_backend(Backend backend);
  void register_verifier(Verifier verifier);

  const ComputationProblem& problem(std::string_view name) const;
  const Backend& backend(std::string_view name) const;
  const ComputationProblem* find_problem(std::string_view name) const;
  const Backend* find_backend(std::string_view name) const;
  const Verifier* verifier_for(std::string_view problem) const;

  std::vector<std::string> problem_names() const;
  std::vector<std::string> backend_names() const;
  /// Backends that ship a template for `problem`.
  std::vector<std::string> backends_for(std::string_view problem) const;

  /// Merges a registry file (JSON). Template paths are relative to the
  /// file's directory. Throws Error{config} on malformed files and
  /// Error{conflict} on duplicate names.
  void load_file(const std::filesystem::path& path);

 private:
  std::map<std::string, ComputationProblem, std::less<>> problems_;
  std::map<std::string, Backend, std::less<>> backends_;
  std::map<std::string, Verifier, std::less<>> verifiers_;
};

std::vector<InstanceRef> list_suitable_instances(const Registry& registry, std::string_view problem,
                                                 const std::vector<SDTable>& tables);

/// Substitutes the backend's template for `problem` with values from
/// `instance`. Pure: identical inputs give identical bytes.
std::string render_script(const ComputationProblem& problem, const ProblemInstance& instance,
                          const Backend& backend);

/// Substitutes `{script}` in an invocation with the shell-quoted path.
std::string expand_invocation(std::string_view invocation, std::string_view script_path);

}  // namespace casbench
