#include "casbench/registry.hpp"

#include <algorithm>

#include "json.hpp"

#include "casbench/error.hpp"
#include "casbench/fsutil.hpp"

namespace casbench {

namespace {

constexpr std::string_view kScriptToken = "{script}";

bool ident_start(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; }
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
bool key_char(char c) { return ident_char(c) || c == '.' || c == '-'; }

/// Length of the placeholder token starting at text[i] ('$'), or 0.
std::size_t placeholder_at(std::string_view text, std::size_t i) {
  std::size_t j = i + 1;
  if (j >= text.size() || !ident_start(text[j])) return 0;
  while (j < text.size() && ident_char(text[j])) ++j;
  if (j < text.size() && text[j] == ':') {
    const std::size_t key_start = ++j;
    while (j < text.size() && key_char(text[j])) ++j;
    if (j == key_start) return 0;
  }
  if (j >= text.size() || text[j] != '$') return 0;
  return j - i + 1;
}

template <typename Fn>
std::string substitute(std::string_view text, Fn&& replacement) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if (text[i] == '$') {
      if (const auto len = placeholder_at(text, i); len > 0) {
        out += replacement(text.substr(i + 1, len - 2));
        i += len;
        continue;
      }
    }
    out += text[i++];
  }
  return out;
}

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += sep;
    out += items[i];
  }
  return out;
}

}  // namespace

std::vector<std::string> find_placeholders(std::string_view text) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '$') continue;
    if (const auto len = placeholder_at(text, i); len > 0) {
      out.emplace_back(text.substr(i, len));
      i += len - 1;
    }
  }
  return out;
}

void validate_invocation(std::string_view invocation, std::string_view owner) {
  const auto first = invocation.find(kScriptToken);
  if (first == std::string_view::npos ||
      invocation.find(kScriptToken, first + kScriptToken.size()) != std::string_view::npos) {
    throw Error(ErrorKind::validation, std::string(owner) + ": invocation '" + std::string(invocation) +
                                           "' must contain {script} exactly once");
  }
}

void validate_template(std::string_view body, std::string_view owner) {
  for (const auto& token : find_placeholders(body)) {
    const std::string_view name = std::string_view(token).substr(1, token.size() - 2);
    if (name == "vars" || name == "basis" || name == "name" || name.starts_with("param:")) continue;
    throw Error(ErrorKind::validation,
                std::string(owner) + ": unknown template placeholder " + token);
  }
}

void Registry::register_problem(ComputationProblem problem) {
  if (problem.name.empty()) throw Error(ErrorKind::validation, "computation problem without a name");
  if (problem.compatible_tables.empty()) {
    throw Error(ErrorKind::validation, "computation problem " + problem.name + " lists no SD-Tables");
  }
  if (problems_.contains(problem.name)) {
    throw Error(ErrorKind::conflict, "computation problem " + problem.name + " is already registered");
  }
  const std::string key = problem.name;
  problems_.emplace(key, std::move(problem));
}

void Registry::register_backend(Backend backend) {
  if (backend.name.empty()) throw Error(ErrorKind::validation, "backend without a name");
  validate_invocation(backend.invocation, "backend " + backend.name);
  for (const auto& [problem, body] : backend.templates) {
    validate_template(body, "backend " + backend.name + " template for " + problem);
  }
  if (backends_.contains(backend.name)) {
    throw Error(ErrorKind::conflict, "backend " + backend.name + " is already registered");
  }
  const std::string key = backend.name;
  backends_.emplace(key, std::move(backend));
}

void Registry::register_verifier(Verifier verifier) {
  if (verifiers_.contains(verifier.problem)) {
    throw Error(ErrorKind::conflict, "a verifier for " + verifier.problem + " is already registered");
  }
  const std::string key = verifier.problem;
  verifiers_.emplace(key, std::move(verifier));
}

const ComputationProblem* Registry::find_problem(std::string_view name) const {
  const auto it = problems_.find(name);
  return it == problems_.end() ? nullptr : &it->second;
}

const Backend* Registry::find_backend(std::string_view name) const {
  const auto it = backends_.find(name);
  return it == backends_.end() ? nullptr : &it->second;
}

const Verifier* Registry::verifier_for(std::string_view problem) const {
  const auto it = verifiers_.find(problem);
  return it == verifiers_.end() ? nullptr : &it->second;
}

const ComputationProblem& Registry::problem(std::string_view name) const {
  if (const auto* p = find_problem(name)) return *p;
  throw Error(ErrorKind::not_found, "unknown computation problem '" + std::string(name) +
                                        "' (registered: " + join(problem_names(), ',') + ")");
}

const Backend& Registry::backend(std::string_view name) const {
  if (const auto* b = find_backend(name)) return *b;
  throw Error(ErrorKind::not_found, "unknown backend '" + std::string(name) +
                                        "' (registered: " + join(backend_names(), ',') + ")");
}

std::vector<std::string> Registry::problem_names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : problems_) out.push_back(name);
  return out;
}

std::vector<std::string> Registry::backend_names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : backends_) out.push_back(name);
  return out;
}

std::vector<std::string> Registry::backends_for(std::string_view problem) const {
  std::vector<std::string> out;
  for (const auto& [name, b] : backends_) {
    if (b.templates.contains(std::string(problem))) out.push_back(name);
  }
  return out;
}

void Registry::load_file(const std::filesystem::path& path) {
  using nlohmann::json;
  const std::string where = path.string();
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::config, where + ": " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::config, e.reason());
  }
  const auto base = path.parent_path();
  try {
    for (const auto& p : doc.value("problems", json::array())) {
      ComputationProblem problem;
      problem.name = p.at("name").get<std::string>();
      problem.compatible_tables = p.at("tables").get<std::vector<std::string>>();
      problem.parameters = p.value("parameters", std::map<std::string, std::string>{});
      register_problem(std::move(problem));
    }
    for (const auto& b : doc.value("backends", json::array())) {
      Backend backend;
      backend.name = b.at("name").get<std::string>();
      backend.invocation = b.at("invocation").get<std::string>();
      backend.script_extension = b.value("extension", std::string(".sdc"));
      const json templates = b.value("templates", json::object());
      for (const auto& [problem, file] : templates.items()) {
        const auto template_path = base / file.get<std::string>();
        try {
          backend.templates[problem] = read_file(template_path);
        } catch (const Error&) {
          throw Error(ErrorKind::config, where + ": template file " + template_path.string() +
                                             " for backend " + backend.name + " is unreadable");
        }
      }
      register_backend(std::move(backend));
    }
    for (const auto& v : doc.value("verifiers", json::array())) {
      register_verifier(Verifier{v.at("problem").get<std::string>(), v.at("command").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, where + ": " + e.what());
  }
}

std::vector<InstanceRef> list_suitable_instances(const Registry& registry, std::string_view problem,
                                                 const std::vector<SDTable>& tables) {
  const auto& p = registry.problem(problem);
  std::vector<InstanceRef> out;
  for (const auto& table : tables) {
    if (std::find(p.compatible_tables.begin(), p.compatible_tables.end(), table.name) ==
        p.compatible_tables.end()) {
      continue;
    }
    for (const auto& [name, _] : table.entries) out.push_back(InstanceRef{table.name, name});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string render_script(const ComputationProblem& problem, const ProblemInstance& instance,
                          const Backend& backend) {
  const auto tmpl = backend.templates.find(problem.name);
  if (tmpl == backend.templates.end()) {
    throw Error(ErrorKind::unsupported,
                "backend " + backend.name + " has no template for " + problem.name);
  }
  if (std::find(problem.compatible_tables.begin(), problem.compatible_tables.end(), instance.table) ==
      problem.compatible_tables.end()) {
    throw Error(ErrorKind::unsupported, "instance " + instance.table + "/" + instance.name +
                                            " is not from a table compatible with " + problem.name);
  }
  std::string rendered = substitute(tmpl->second, [&](std::string_view name) -> std::string {
    if (name == "vars") return join(instance.variables, ',');
    if (name == "basis") return join(instance.basis, ',');
    if (name == "name") return instance.name;
    if (name.starts_with("param:")) {
      const std::string key(name.substr(6));
      const auto it = problem.parameters.find(key);
      if (it == problem.parameters.end()) {
        throw Error(ErrorKind::render, "template of backend " + backend.name +
                                           " uses undefined parameter '" + key + "' of " + problem.name);
      }
      return it->second;
    }
    throw Error(ErrorKind::render, "unknown placeholder $" + std::string(name) + "$");
  });
  if (const auto residual = find_placeholders(rendered); !residual.empty()) {
    throw Error(ErrorKind::render, "rendered script for " + instance.name + "/" + backend.name +
                                       " still contains " + residual.front());
  }
  return rendered;
}

std::string expand_invocation(std::string_view invocation, std::string_view script_path) {
  std::string out(invocation);
  const auto at = out.find(kScriptToken);
  if (at != std::string::npos) out.replace(at, kScriptToken.size(), shell_quote(script_path));
  return out;
}

}  // namespace casbench
