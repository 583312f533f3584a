#include "casbench/supervisor.hpp"

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <dirent.h>
#include <fcntl.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>
#ifdef __linux__
#include <sys/prctl.h>
#endif

#include "casbench/error.hpp"

extern char** environ;

namespace casbench {

namespace {

using Clock = std::chrono::steady_clock;

std::optional<std::string> find_on_path(std::string_view program) {
  const auto executable = [](const std::string& p) {
    struct stat st {};
    return ::stat(p.c_str(), &st) == 0 && S_ISREG(st.st_mode) && ::access(p.c_str(), X_OK) == 0;
  };
  if (program.find('/') != std::string_view::npos) {
    std::string p(program);
    if (executable(p)) return p;
    return std::nullopt;
  }
  const char* path = std::getenv("PATH");
  std::string dirs = path ? path : "/usr/bin:/bin";
  std::size_t start = 0;
  while (start <= dirs.size()) {
    const auto colon = dirs.find(':', start);
    std::string dir = dirs.substr(start, colon == std::string::npos ? std::string::npos : colon - start);
    if (dir.empty()) dir = ".";
    const std::string candidate = dir + "/" + std::string(program);
    if (executable(candidate)) return candidate;
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  return std::nullopt;
}

void enable_subreaper() {
#ifdef __linux__
  static std::once_flag once;
  std::call_once(once, [] { ::prctl(PR_SET_CHILD_SUBREAPER, 1, 0, 0, 0); });
#endif
}

/// argv/envp storage that outlives fork for execve in the child.
struct ExecImage {
  std::vector<std::string> args;
  std::vector<std::string> env;
  std::vector<char*> argv;
  std::vector<char*> envp;

  void seal() {
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    for (auto& e : env) envp.push_back(e.data());
    envp.push_back(nullptr);
  }
};

std::vector<std::string> merged_environment(const std::map<std::string, std::string>& extra) {
  std::map<std::string, std::string> env;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    const std::string_view kv(*e);
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) continue;
    env[std::string(kv.substr(0, eq))] = std::string(kv.substr(eq + 1));
  }
  for (const auto& [k, v] : extra) env[k] = v;
  env["LC_ALL"] = "POSIX";
  std::vector<std::string> out;
  for (const auto& [k, v] : env) out.push_back(k + "=" + v);
  return out;
}

struct StatLine {
  pid_t pid = 0;
  pid_t ppid = 0;
  pid_t pgrp = 0;
  char state = '?';
  long rss_pages = 0;
};

std::optional<StatLine> read_stat(const std::string& pid_dir) {
  std::ifstream in("/proc/" + pid_dir + "/stat");
  if (!in) return std::nullopt;
  std::string line;
  std::getline(in, line);
  const auto close = line.rfind(')');
  if (close == std::string::npos) return std::nullopt;
  StatLine s;
  s.pid = static_cast<pid_t>(std::strtol(line.c_str(), nullptr, 10));
  std::istringstream rest(line.substr(close + 2));
  // Fields after comm: state(3) ppid(4) pgrp(5) ... rss(24).
  std::string field;
  rest >> s.state >> s.ppid >> s.pgrp;
  for (int i = 6; i <= 23 && rest >> field; ++i) {
  }
  rest >> s.rss_pages;
  if (!rest) return std::nullopt;
  return s;
}

template <typename Fn>
bool for_each_process(Fn&& fn) {
  DIR* dir = ::opendir("/proc");
  if (dir == nullptr) return false;
  while (const dirent* ent = ::readdir(dir)) {
    const char* name = ent->d_name;
    if (name[0] < '0' || name[0] > '9') continue;
    if (const auto s = read_stat(name)) fn(*s);
  }
  ::closedir(dir);
  return true;
}

}  // namespace

TimeWrapper resolve_time_wrapper(std::string_view time_command, std::string* warning) {
  if (time_command.empty()) return {};
  if (auto path = find_on_path(time_command)) return {TimeWrapper::Kind::external, *path};
  if (time_command == "time") {
    if (auto bash = find_on_path("bash")) return {TimeWrapper::Kind::shell_keyword, *bash};
  }
  if (warning != nullptr) {
    *warning = "time command '" + std::string(time_command) +
               "' not found; falling back to supervisor timing";
  }
  return {};
}

std::vector<std::string> wrapped_argv(const TimeWrapper& wrapper, const std::string& command) {
  switch (wrapper.kind) {
    case TimeWrapper::Kind::external:
      return {wrapper.program, "-p", "/bin/sh", "-c", command};
    case TimeWrapper::Kind::shell_keyword:
      return {wrapper.program, "-c", "time -p { " + command + "\n}"};
    case TimeWrapper::Kind::none:
      break;
  }
  return {"/bin/sh", "-c", command};
}

std::optional<TreeSample> sample_process_tree(pid_t root, pid_t pgid) {
  std::unordered_map<pid_t, StatLine> table;
  if (!for_each_process([&](const StatLine& s) { table.emplace(s.pid, s); })) return std::nullopt;
  static const long page = ::sysconf(_SC_PAGESIZE);
  TreeSample sample;
  for (const auto& [pid, s] : table) {
    bool member = s.pgrp == pgid;
    for (pid_t p = pid, hops = 0; !member && p > 1 && hops < 64; ++hops) {
      if (p == root) {
        member = true;
        break;
      }
      const auto it = table.find(p);
      if (it == table.end()) break;
      p = it->second.ppid;
    }
    if (!member || s.state == 'Z') continue;
    sample.rss_bytes += static_cast<std::uint64_t>(std::max(0L, s.rss_pages)) * static_cast<std::uint64_t>(page);
    ++sample.processes;
  }
  return sample;
}

std::size_t count_group_members(pid_t pgid) {
  std::size_t n = 0;
  for_each_process([&](const StatLine& s) {
    if (s.pgrp == pgid && s.state != 'Z') ++n;
  });
  return n;
}

namespace {

struct Spawned {
  pid_t pid = -1;
  std::string error;
};

Spawned spawn(ExecImage& image, const std::filesystem::path& working_dir, int out_fd, int err_fd) {
  int status_pipe[2];
  if (::pipe2(status_pipe, O_CLOEXEC) != 0) return {-1, std::string("pipe: ") + std::strerror(errno)};
  const int null_fd = ::open("/dev/null", O_RDONLY | O_CLOEXEC);
  const std::string wd = working_dir.string();

  const pid_t pid = ::fork();
  if (pid < 0) {
    const int err = errno;
    ::close(status_pipe[0]);
    ::close(status_pipe[1]);
    if (null_fd >= 0) ::close(null_fd);
    return {-1, std::string("fork: ") + std::strerror(err)};
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    sigset_t all;
    sigemptyset(&all);
    ::sigprocmask(SIG_SETMASK, &all, nullptr);
    ::signal(SIGINT, SIG_DFL);
    ::signal(SIGTERM, SIG_DFL);
    ::signal(SIGPIPE, SIG_DFL);
    if (null_fd >= 0) ::dup2(null_fd, 0);
    if (out_fd >= 0) ::dup2(out_fd, 1);
    if (err_fd >= 0) ::dup2(err_fd, 2);
    if (!wd.empty() && ::chdir(wd.c_str()) != 0) {
      const int err = errno;
      [[maybe_unused]] auto n = ::write(status_pipe[1], &err, sizeof err);
      ::_exit(127);
    }
    ::execve(image.argv[0], image.argv.data(), image.envp.data());
    const int err = errno;
    [[maybe_unused]] auto n = ::write(status_pipe[1], &err, sizeof err);
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(status_pipe[1]);
  if (null_fd >= 0) ::close(null_fd);
  int child_errno = 0;
  ssize_t got;
  do {
    got = ::read(status_pipe[0], &child_errno, sizeof child_errno);
  } while (got < 0 && errno == EINTR);
  ::close(status_pipe[0]);
  if (got == static_cast<ssize_t>(sizeof child_errno)) {
    int ignored;
    ::waitpid(pid, &ignored, 0);
    return {-1, "cannot execute " + std::string(image.argv[0]) + ": " + std::strerror(child_errno)};
  }
  return {pid, {}};
}

bool exited(pid_t pid) {
  siginfo_t info{};
  while (true) {
    const int r = ::waitid(P_PID, static_cast<id_t>(pid), &info, WEXITED | WNOHANG | WNOWAIT);
    if (r == 0) return info.si_pid == pid;
    if (errno != EINTR) return true;
  }
}

/// Reaps group members reparented to us after the group was SIGKILLed.
/// The leader must already be reaped.
void reap_group(pid_t pgid) {
  const auto deadline = Clock::now() + std::chrono::seconds(2);
  while (Clock::now() < deadline) {
    const pid_t r = ::waitpid(-pgid, nullptr, WNOHANG);
    if (r > 0) continue;
    if (r < 0 && errno == EINTR) continue;
    if (r < 0 && count_group_members(pgid) == 0) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

std::string read_tail(const std::filesystem::path& path, std::size_t bytes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  const std::size_t from = size > bytes ? size - bytes : 0;
  in.seekg(static_cast<std::streamoff>(from));
  std::string out(size - from, '\0');
  in.read(out.data(), static_cast<std::streamsize>(out.size()));
  return out;
}

DecimalSeconds to_decimal(const timeval& tv) {
  return DecimalSeconds::from_micros(static_cast<std::int64_t>(tv.tv_sec) * 1'000'000 + tv.tv_usec);
}

}  // namespace

JobResult supervise(const SuperviseRequest& request) {
  enable_subreaper();
  JobResult result;
  const auto warn = [&](std::string_view msg) {
    if (request.warn) request.warn(msg);
  };

  const int out_fd = ::open(request.stdout_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  const int err_fd = ::open(request.stderr_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (out_fd < 0 || err_fd < 0) {
    if (out_fd >= 0) ::close(out_fd);
    if (err_fd >= 0) ::close(err_fd);
    throw Error(ErrorKind::io, "cannot create output files in " + request.stdout_path.parent_path().string());
  }

  ExecImage image;
  image.args = wrapped_argv(request.time, request.command);
  image.env = merged_environment(request.environment);
  image.seal();

  result.started = utc_timestamp_now();
  const auto start = Clock::now();
  const Spawned child = spawn(image, request.working_dir, out_fd, err_fd);
  ::close(out_fd);
  ::close(err_fd);
  if (child.pid < 0) {
    result.status = JobStatus::error;
    result.diagnostic = child.error;
    result.ended = utc_timestamp_now();
    return result;
  }
  const pid_t pgid = child.pid;

  std::optional<JobStatus> forced;
  std::optional<Clock::time_point> kill_deadline;
  bool sigkill_sent = false;
  bool sampling = true;
  auto next_sample = start;

  const auto terminate = [&](JobStatus why, Clock::time_point now) {
    forced = why;
    ::killpg(pgid, SIGTERM);
    kill_deadline = now + std::chrono::microseconds(request.limits.grace.micros);
  };

  while (!exited(child.pid)) {
    const auto now = Clock::now();
    if (!forced) {
      if (request.kill_switch != nullptr && request.kill_switch->load()) {
        terminate(JobStatus::killed_by_user, now);
      } else if (request.limits.wall &&
                 now - start >= std::chrono::microseconds(request.limits.wall->micros)) {
        terminate(JobStatus::timeout, now);
      }
    }
    if (sampling && now >= next_sample) {
      if (const auto sample = sample_process_tree(child.pid, pgid)) {
        result.peak_rss_bytes = std::max(result.peak_rss_bytes, sample->rss_bytes);
        if (!forced && request.limits.memory_bytes && sample->rss_bytes > *request.limits.memory_bytes) {
          terminate(JobStatus::memout, now);
        }
      } else {
        sampling = false;
        warn("process table not readable; memory limit not enforced");
      }
      next_sample = now + request.sample_interval;
    }
    if (kill_deadline && !sigkill_sent && now >= *kill_deadline) {
      ::killpg(pgid, SIGKILL);
      sigkill_sent = true;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  const auto finished = Clock::now();

  // The unreaped leader pins the group id, so this cannot hit a stranger.
  ::killpg(pgid, SIGKILL);
  int status = 0;
  rusage usage{};
  while (::wait4(child.pid, &status, 0, &usage) < 0 && errno == EINTR) {
  }
  reap_group(pgid);
  result.ended = utc_timestamp_now();
  result.wall = DecimalSeconds::from_micros(
                    std::chrono::duration_cast<std::chrono::microseconds>(finished - start).count())
                    .centis();

  if (forced) {
    result.status = *forced;
    if (*forced == JobStatus::memout) {
      result.diagnostic = "memory limit of " + std::to_string(*request.limits.memory_bytes) + " bytes exceeded";
    } else if (*forced == JobStatus::timeout) {
      result.diagnostic = "wall-clock limit of " + format_seconds(*request.limits.wall) + " s exceeded";
    } else {
      result.diagnostic = "terminated on user request";
    }
  } else if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
    result.status = *result.exit_code == 0 ? JobStatus::completed : JobStatus::error;
    if (*result.exit_code == 127) result.diagnostic = "exit status 127 (command not found?)";
  } else if (WIFSIGNALED(status)) {
    result.status = JobStatus::error;
    result.diagnostic = "terminated by signal " + std::to_string(WTERMSIG(status));
  } else {
    result.status = JobStatus::error;
  }

  std::optional<TimeRecord> parsed;
  if (request.time.kind != TimeWrapper::Kind::none && !forced) {
    try {
      parsed = parse_posix_time(read_tail(request.stderr_path, 4096));
    } catch (const Error&) {
      if (result.status == JobStatus::completed) warn("no POSIX time record in job error stream");
    }
  }
  if (parsed) {
    result.times = TimeRecord{parsed->real.centis(), parsed->user.centis(), parsed->sys.centis()};
  } else {
    result.times = TimeRecord{result.wall, to_decimal(usage.ru_utime).centis(), to_decimal(usage.ru_stime).centis()};
  }
  return result;
}

std::optional<int> run_helper(const std::string& command, std::chrono::seconds timeout,
                              std::string* diagnostic) {
  ExecImage image;
  image.args = {"/bin/sh", "-c", command};
  image.env = merged_environment({});
  image.seal();
  const int err_fd = ::open("/dev/null", O_WRONLY | O_CLOEXEC);
  const Spawned child = spawn(image, {}, err_fd, err_fd);
  if (err_fd >= 0) ::close(err_fd);
  if (child.pid < 0) {
    if (diagnostic != nullptr) *diagnostic = child.error;
    return std::nullopt;
  }
  const auto deadline = Clock::now() + timeout;
  while (!exited(child.pid)) {
    if (Clock::now() >= deadline) {
      ::killpg(child.pid, SIGKILL);
      if (diagnostic != nullptr) *diagnostic = "helper timed out";
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ::killpg(child.pid, SIGKILL);
  int status = 0;
  while (::waitpid(child.pid, &status, 0) < 0 && errno == EINTR) {
  }
  reap_group(child.pid);
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (diagnostic != nullptr && diagnostic->empty()) {
    *diagnostic = "helper terminated by signal " + std::to_string(WTERMSIG(status));
  }
  return std::nullopt;
}

}  // namespace casbench
