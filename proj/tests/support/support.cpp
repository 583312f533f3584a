#include "support.hpp"

#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "casbench/fsutil.hpp"

namespace casbench::testing {

fs::path fixtures_dir() { return CASBENCH_FIXTURES_DIR; }
fs::path resources_dir() { return fixtures_dir() / "resources"; }
fs::path alloc_mb_program() { return CASBENCH_ALLOC_MB; }
fs::path spawn_tree_program() { return CASBENCH_SPAWN_TREE; }

TempDir::TempDir() {
  std::random_device rd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = fs::temp_directory_path() /
                     ("casbench-test-" + std::to_string(getpid()) + "-" + std::to_string(rd() % 1000000));
    if (fs::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("cannot create a temporary directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Registry stub_registry(const StubBackends& backends) {
  Registry registry;
  registry.register_problem(ComputationProblem{"P", {"IntPS"}, {}});
  for (const auto& [name, body] : backends) {
    Backend b;
    b.name = name;
    b.invocation = "sh {script}";
    b.templates["P"] = body;
    registry.register_backend(b);
  }
  return registry;
}

TaskFolder make_stub_folder(const fs::path& out, const StubBackends& backends,
                            const std::vector<std::string>& instances, const std::string& time_command) {
  Task task;
  task.name = "stub";
  task.problem = "P";
  for (const auto& i : instances) task.instances.push_back(InstanceRef{"IntPS", i});
  for (const auto& b : backends) task.backends.push_back(b.first);
  MachineSettings settings;
  settings.time_command = time_command;
  return build_taskfolder(task, settings, stub_registry(backends), scan_tables(resources_dir()), out);
}

Task worked_example_task(const std::string& name) {
  return Task{name, "GB_Z_lp", {{"IntPS", "Amrhein"}, {"IntPS", "Caprasse"}}, {"casA", "casB"}};
}

Registry builtin_registry() {
  Registry registry;
  registry.load_file(fixtures_dir().parent_path().parent_path() / "data" / "registry.json");
  return registry;
}

bool process_alive(pid_t pid) {
  std::ifstream stat("/proc/" + std::to_string(pid) + "/stat");
  if (!stat) return false;
  std::string line;
  std::getline(stat, line);
  const auto close = line.rfind(')');
  if (close == std::string::npos || close + 2 >= line.size()) return false;
  return line[close + 2] != 'Z' && line[close + 2] != 'X';
}

std::vector<pid_t> read_pids(const fs::path& file) {
  std::vector<pid_t> out;
  std::ifstream in(file);
  long pid;
  while (in >> pid) out.push_back(static_cast<pid_t>(pid));
  return out;
}

std::vector<pid_t> group_members(pid_t pgid) {
  std::vector<pid_t> out;
  for (const auto& entry : fs::directory_iterator("/proc")) {
    const auto name = entry.path().filename().string();
    if (name.empty() || name.find_first_not_of("0123456789") != std::string::npos) continue;
    std::ifstream stat(entry.path() / "stat");
    std::string line;
    if (!std::getline(stat, line)) continue;
    const auto close = line.rfind(')');
    if (close == std::string::npos) continue;
    std::istringstream rest(line.substr(close + 2));
    char state = 0;
    long ppid = 0, group = 0;
    if (!(rest >> state >> ppid >> group)) continue;
    if (group == pgid && state != 'Z' && state != 'X') out.push_back(static_cast<pid_t>(std::stol(name)));
  }
  return out;
}

std::vector<pid_t> wait_for_pids(const fs::path& file, std::size_t count, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    auto pids = read_pids(file);
    if (pids.size() >= count || std::chrono::steady_clock::now() > deadline) return pids;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
}


}  // namespace casbench::testing

namespace casbench::testing {

std::map<std::string, std::string> tree_snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream body;
    body << in.rdbuf();
    out[fs::relative(entry.path(), root).generic_string()] = body.str();
  }
  return out;
}

namespace {

std::size_t pick_index(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::string random_base(std::mt19937_64& rng, const std::vector<std::string>& vars, int depth);

std::string random_term(std::mt19937_64& rng, const std::vector<std::string>& vars, int depth) {
  std::string out;
  const std::size_t factors = 1 + pick_index(rng, 3);
  for (std::size_t i = 0; i < factors; ++i) {
    if (i > 0) out += pick_index(rng, 4) == 0 ? " * " : "*";
    out += random_base(rng, vars, depth);
    if (pick_index(rng, 3) == 0) out += "^" + std::to_string(pick_index(rng, 12));
  }
  return out;
}

std::string random_expr(std::mt19937_64& rng, const std::vector<std::string>& vars, int depth) {
  std::string out = pick_index(rng, 4) == 0 ? "-" : "";
  const std::size_t terms = 1 + pick_index(rng, 4);
  for (std::size_t i = 0; i < terms; ++i) {
    if (i > 0) out += pick_index(rng, 2) == 0 ? "+" : "-";
    out += random_term(rng, vars, depth);
  }
  return out;
}

std::string random_base(std::mt19937_64& rng, const std::vector<std::string>& vars, int depth) {
  const auto choice = pick_index(rng, depth > 0 ? 5 : 4);
  if (choice == 4) return "(" + random_expr(rng, vars, depth - 1) + ")";
  if (choice == 3) {
    // Occasionally a coefficient beyond 64 bits.
    std::string digits = std::to_string(1 + pick_index(rng, 9));
    const std::size_t extra = pick_index(rng, 5) == 0 ? 25 : pick_index(rng, 3);
    for (std::size_t i = 0; i < extra; ++i) digits += static_cast<char>('0' + pick_index(rng, 10));
    return digits;
  }
  return vars[pick_index(rng, vars.size())];
}

const std::vector<std::string>& iri_pool() {
  static const std::vector<std::string> pool = [] {
    std::vector<std::string> v;
    for (int i = 0; i < 12; ++i) v.push_back("http://example.org/r" + std::to_string(i));
    return v;
  }();
  return pool;
}

Term random_object(std::mt19937_64& rng) {
  switch (pick_index(rng, 5)) {
    case 0:
    case 1:
      return Term::iri(iri_pool()[pick_index(rng, iri_pool().size())]);
    case 2:
      return Term::literal(std::to_string(static_cast<long>(pick_index(rng, 70)) - 5));
    case 3:
      return Term::typed(std::to_string(pick_index(rng, 70)), std::string(kXsdInteger));
    default:
      return Term::literal(std::string(1 + pick_index(rng, 2), static_cast<char>('a' + pick_index(rng, 3))));
  }
}

/// Integer reading of a literal for the oracle: optional sign then digits.
std::optional<long long> integer_value(const Term& t) {
  if (!t.is_literal()) return std::nullopt;
  std::string_view s = t.value;
  bool negative = false;
  if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
    negative = s[0] == '-';
    s.remove_prefix(1);
  }
  if (s.empty() || s.size() > 18) return std::nullopt;
  long long v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return negative ? -v : v;
}

bool unify(const PatternSlot& slot, const Term& term, Binding& binding) {
  if (const auto* constant = std::get_if<Term>(&slot)) return *constant == term;
  const auto& name = std::get<Variable>(slot).name;
  const auto [it, inserted] = binding.emplace(name, term);
  return inserted || it->second == term;
}

void join_from(const std::vector<Triple>& triples, const RandomQuery& q, std::size_t depth, const Binding& partial,
               std::vector<Binding>& out) {
  if (depth == q.patterns.size()) {
    for (const auto& f : q.filters) {
      const auto v = integer_value(partial.at(f.variable));
      if (!v) return;
      const long long c = f.constant;
      bool ok = false;
      switch (f.op) {
        case CompareOp::less: ok = *v < c; break;
        case CompareOp::less_equal: ok = *v <= c; break;
        case CompareOp::equal: ok = *v == c; break;
        case CompareOp::greater_equal: ok = *v >= c; break;
        case CompareOp::greater: ok = *v > c; break;
      }
      if (!ok) return;
    }
    out.push_back(partial);
    return;
  }
  const auto& p = q.patterns[depth];
  for (const auto& t : triples) {
    Binding b = partial;
    if (unify(p.subject, t.subject, b) && unify(p.predicate, t.predicate, b) && unify(p.object, t.object, b)) {
      join_from(triples, q, depth + 1, b, out);
    }
  }
}

}  // namespace

std::string random_polynomial(std::mt19937_64& rng, const std::vector<std::string>& vars, int depth) {
  return random_expr(rng, vars, depth);
}

std::vector<Triple> random_triples(std::mt19937_64& rng, std::size_t count) {
  static const std::vector<std::string> predicates = {
      "http://example.org/p/degree", "http://example.org/p/size", "http://example.org/p/link",
      std::string(kRdfType)};
  std::vector<Triple> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(Triple{Term::iri(iri_pool()[pick_index(rng, iri_pool().size())]),
                         Term::iri(predicates[pick_index(rng, predicates.size())]), random_object(rng)});
  }
  return out;
}

RandomQuery random_query(std::mt19937_64& rng, const std::vector<Triple>& triples, std::size_t max_patterns) {
  static const std::vector<std::string> var_names = {"a", "b", "c", "d"};
  RandomQuery q;
  const std::size_t n = 1 + pick_index(rng, max_patterns);
  auto slot = [&](auto get) -> PatternSlot {
    if (!triples.empty() && pick_index(rng, 3) == 0) return get(triples[pick_index(rng, triples.size())]);
    return Variable{var_names[pick_index(rng, var_names.size())]};
  };
  for (std::size_t i = 0; i < n; ++i) {
    TriplePattern p{slot([](const Triple& t) { return t.subject; }), slot([](const Triple& t) { return t.predicate; }),
                    slot([](const Triple& t) { return t.object; })};
    q.patterns.push_back(std::move(p));
  }
  std::vector<std::string> used;
  for (const auto& p : q.patterns) {
    for (const auto* s : {&p.subject, &p.predicate, &p.object}) {
      if (const auto* v = std::get_if<Variable>(s)) used.push_back(v->name);
    }
  }
  if (!used.empty() && pick_index(rng, 2) == 0) {
    const CompareOp ops[] = {CompareOp::less, CompareOp::less_equal, CompareOp::equal, CompareOp::greater_equal,
                             CompareOp::greater};
    q.filters.push_back(NumericFilter{used[pick_index(rng, used.size())], ops[pick_index(rng, 5)],
                                      static_cast<std::int64_t>(pick_index(rng, 70)) - 5});
  }
  return q;
}

std::vector<Binding> brute_force_join(const std::vector<Triple>& triples, const RandomQuery& q) {
  // Set semantics: the oracle joins over distinct triples.
  std::vector<Triple> distinct = triples;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<Binding> out;
  join_from(distinct, q, 0, Binding{}, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace casbench::testing
