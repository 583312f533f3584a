#pragma once

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <map>
#include <random>

#include "casbench/metastore.hpp"
#include "casbench/registry.hpp"
#include "casbench/resources.hpp"
#include "casbench/taskfolder.hpp"

namespace casbench::testing {

namespace fs = std::filesystem;

fs::path fixtures_dir();
fs::path resources_dir();
fs::path alloc_mb_program();
fs::path spawn_tree_program();

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const noexcept { return path_; }
  fs::path operator/(const std::string& child) const { return path_ / child; }

 private:
  fs::path path_;
};

/// (backend name, script body) pairs.
using StubBackends = std::vector<std::pair<std::string, std::string>>;

/// Registry with problem "P" over IntPS and one `sh {script}` backend per
/// entry whose template is the given body.
Registry stub_registry(const StubBackends& backends);

/// Builds a taskfolder over IntPS instances of the fixture tree.
TaskFolder make_stub_folder(const fs::path& out, const StubBackends& backends,
                            const std::vector<std::string>& instances = {"Caprasse"},
                            const std::string& time_command = "time");

/// The worked example: GB_Z_lp over Amrhein and Caprasse with casA, casB.
Task worked_example_task(const std::string& name = "T1");

/// Registry of the data/ directory shipped with the tool.
Registry builtin_registry();

/// Alive means present in /proc and not a zombie.
bool process_alive(pid_t pid);
std::vector<pid_t> read_pids(const fs::path& file);
/// Live members of a process group, found by scanning every /proc entry.
std::vector<pid_t> group_members(pid_t pgid);
/// Polls until the file exists and holds `count` pids, or the timeout passes.
std::vector<pid_t> wait_for_pids(const fs::path& file, std::size_t count, std::chrono::milliseconds timeout);

/// Relative path -> contents for every regular file below root. Compared
/// directly, it is a checksum oracle independent of the library's digest.
std::map<std::string, std::string> tree_snapshot(const fs::path& root);

/// Random text derived from the polynomial grammar over `vars`.
std::string random_polynomial(std::mt19937_64& rng, const std::vector<std::string>& vars, int depth = 3);

/// Random store over a small vocabulary so that joins hit often.
std::vector<Triple> random_triples(std::mt19937_64& rng, std::size_t count);

struct RandomQuery {
  std::vector<TriplePattern> patterns;
  std::vector<NumericFilter> filters;
};

/// 1..max_patterns patterns mixing constants from `triples` and variables
/// from a small pool, with an occasional numeric filter.
RandomQuery random_query(std::mt19937_64& rng, const std::vector<Triple>& triples, std::size_t max_patterns);

/// Nested-loop join over all triples: the reference semantics for query().
/// Result sorted and duplicate-free.
std::vector<Binding> brute_force_join(const std::vector<Triple>& triples, const RandomQuery& q);

}  // namespace casbench::testing
