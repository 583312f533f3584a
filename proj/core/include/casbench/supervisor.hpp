#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <sys/types.h>

#include "casbench/job.hpp"

namespace casbench {

/// How a job command gets wrapped for POSIX.2 time accounting.
struct TimeWrapper {
  enum class Kind { none, external, shell_keyword };

  Kind kind = Kind::none;
  /// Absolute path of the time utility (external) or of bash (shell_keyword).
  std::string program;
};

/// Resolves a configured time command. An empty command disables wrapping.
/// A bare "time" with no binary on PATH falls back to bash's `time -p`
/// keyword; anything else unresolvable yields Kind::none plus a warning.
TimeWrapper resolve_time_wrapper(std::string_view time_command, std::string* warning = nullptr);

/// argv for running `command` through /bin/sh under `wrapper`.
std::vector<std::string> wrapped_argv(const TimeWrapper& wrapper, const std::string& command);

struct SuperviseRequest {
  std::string command;
  TimeWrapper time;
  std::filesystem::path working_dir;
  std::filesystem::path stdout_path;
  std::filesystem::path stderr_path;
  std::map<std::string, std::string> environment;
  RunLimits limits;
  std::chrono::milliseconds sample_interval{100};
  /// Set from another thread to terminate the job as killed-by-user.
  const std::atomic<bool>* kill_switch = nullptr;
  std::function<void(std::string_view)> warn;
};

/// Runs one command in its own process group and supervises it.
///
/// The supervising loop checks exit, wall limit and kill switch every few
/// milliseconds and samples resident memory of the whole process tree every
/// `sample_interval`; output goes straight to files, so none of these
/// duties can block another. A breached limit sends SIGTERM to the group
/// and SIGKILL after `limits.grace`. Whatever is left of the group once the
/// main process exits is killed and reaped.
///
/// Fills status, exit_code, times, wall, peak_rss_bytes, started, ended and
/// diagnostic. Recorded times are rounded to hundredths of a second.
JobResult supervise(const SuperviseRequest& request);

struct TreeSample {
  std::uint64_t rss_bytes = 0;
  std::size_t processes = 0;
};

/// Sums resident memory over processes in group `pgid` or descending from
/// `root`. Returns nullopt when the process table is not readable.
std::optional<TreeSample> sample_process_tree(pid_t root, pid_t pgid);

/// Live (non-zombie) members of process group `pgid`, from /proc.
std::size_t count_group_members(pid_t pgid);

/// Runs a short helper command (verifiers) to completion with a timeout and
/// returns its exit status, or nullopt if it could not run or was killed.
std::optional<int> run_helper(const std::string& command, std::chrono::seconds timeout,
                              std::string* diagnostic = nullptr);

}  // namespace casbench
